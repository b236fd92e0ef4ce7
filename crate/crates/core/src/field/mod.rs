//! Simulation of the Boolean field seen through a scaled window.

mod index;
mod raster;
mod window;

pub use index::GridIndex;
pub use raster::{raster_coverage, raster_field, write_pgm, Bitmap};
pub use window::{Window, WindowShape};

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::geometry::coverage_levels;
use crate::grains::{grain_with_r, uniform_in_ball, Family, GrainModel, GrainSample, MAX_DIMENSION};
use crate::rng::RngStream;

/// Expected number of candidate germs above which simulation is refused.
pub const MAX_EXPECTED_GERMS: f64 = 1e9;

/// One realization of the germs whose grains can reach the window.
#[derive(Clone, Debug)]
pub struct Realization {
    window: Window,
    positions: Vec<f64>,
    grains: Vec<GrainSample>,
    index: GridIndex,
    seed: u64,
    stream: u64,
}

/// A term `coef · E R^s` of the expected candidate count.
#[derive(Clone, Copy, Debug)]
struct EnvelopeTerm {
    coef: f64,
    power: f64,
}

fn envelope_terms(model: &GrainModel, window: &Window) -> Vec<EnvelopeTerm> {
    let nu = model.nu() as f64;
    match model.family() {
        // Leb(λA ⊕ B_ρ) with ρ = R^(1/nu) bounding every homothetic grain.
        Family::Homothetic { .. } => window
            .parallel_volume_coefficients()
            .into_iter()
            .enumerate()
            .map(|(m, coef)| EnvelopeTerm { coef, power: m as f64 / nu })
            .collect(),
        // Leb(λA ⊕ (-K)) for K = (0,w] × (0,h], w = R^(1-p), h = R^p.
        Family::RectXiex1 { .. } | Family::RectXiex2 { .. } => {
            let p = model.rect_exponent().expect("rectangular family");
            let (c0, cw, ch) = match window.shape() {
                WindowShape::Box { .. } => {
                    let e = window.half_extents();
                    (4.0 * e[0] * e[1], 2.0 * e[1], 2.0 * e[0])
                }
                WindowShape::Ball { .. } => {
                    let r = window.circumradius();
                    (std::f64::consts::PI * r * r, 2.0 * r, 2.0 * r)
                }
            };
            vec![
                EnvelopeTerm { coef: c0, power: 0.0 },
                EnvelopeTerm { coef: cw, power: 1.0 - p },
                EnvelopeTerm { coef: ch, power: p },
                EnvelopeTerm { coef: 1.0, power: 1.0 },
            ]
        }
    }
}

/// Expected number of candidate germs drawn by [`simulate_realization`].
pub fn expected_candidates(model: &GrainModel, window: &Window) -> f64 {
    envelope_terms(model, window).iter().map(|t| t.coef * model.law().moment(t.power)).sum()
}

/// Uniform `u` with `(u + Ξ) ∩ λA ≠ ∅` for the bounding set of a grain.
fn sample_location<R: Rng + ?Sized>(model: &GrainModel, window: &Window, r: f64, rng: &mut R, u: &mut [f64]) {
    let nu = model.nu();
    match (model.family(), window.shape()) {
        (Family::Homothetic { .. }, WindowShape::Ball { .. }) => {
            uniform_in_ball(rng, u);
            let radius = window.circumradius() + model.scale_of(r);
            for x in u.iter_mut() {
                *x *= radius;
            }
        }
        (Family::Homothetic { .. }, WindowShape::Box { .. }) => {
            let rho = model.scale_of(r);
            let ext: Vec<f64> = window.half_extents().iter().map(|e| e + rho).collect();
            loop {
                for a in 0..nu {
                    u[a] = ext[a] * (2.0 * rng.random::<f64>() - 1.0);
                }
                if window.distance(u) <= rho {
                    return;
                }
            }
        }
        (_, shape) => {
            let (w, h) = model.rect_sides(r).expect("rectangular family");
            let e = window.half_extents();
            loop {
                u[0] = -e[0] - w + (2.0 * e[0] + w) * rng.random::<f64>();
                u[1] = -e[1] - h + (2.0 * e[1] + h) * rng.random::<f64>();
                match shape {
                    WindowShape::Box { .. } => return,
                    WindowShape::Ball { .. } => {
                        let cx = 0f64.clamp(u[0], u[0] + w);
                        let cy = 0f64.clamp(u[1], u[1] + h);
                        if cx.hypot(cy) <= window.circumradius() {
                            return;
                        }
                    }
                }
            }
        }
    }
}

/// Exact simulation of all germs `(u, Ξ)` of the Poisson process with
/// intensity `du P_Ξ(dm)` whose bounding set reaches `λA`.
///
/// The expected candidate count is a finite sum `Σ_j c_j E R^(s_j)`. Term `j`
/// contributes an independent Poisson number of germs with `R` drawn from the
/// law tilted by `R^(s_j)`; the location is then uniform over the set of
/// translates that reach the window.
pub fn simulate_realization(model: &GrainModel, window: &Window, rng: &mut RngStream) -> Result<Realization> {
    if model.nu() != window.nu() {
        return Err(Error::Config(format!(
            "window dimension {} does not match model dimension {}",
            window.nu(),
            model.nu()
        )));
    }
    let law = model.law();
    let terms = envelope_terms(model, window);
    let total = expected_candidates(model, window);
    if !(total <= MAX_EXPECTED_GERMS) {
        return Err(Error::Config(format!(
            "expected number of germs {total:.3e} exceeds {MAX_EXPECTED_GERMS:.0e}; use a smaller scale"
        )));
    }
    let nu = model.nu();
    let mut positions = Vec::new();
    let mut grains = Vec::new();
    let mut u = [0.0; MAX_DIMENSION];
    for term in &terms {
        let mean = term.coef * law.moment(term.power);
        if !(mean > 0.0) {
            continue;
        }
        let count: f64 = Poisson::new(mean)
            .map_err(|e| Error::Numerical(format!("poisson mean {mean}: {e}")))?
            .sample(rng);
        for _ in 0..count as u64 {
            let r = law.sample_tilted(term.power, rng);
            sample_location(model, window, r, rng, &mut u[..nu]);
            let g = grain_with_r(model, r, rng)?;
            positions.extend_from_slice(&u[..nu]);
            grains.push(g);
        }
    }
    Ok(Realization::from_germs(window.clone(), positions, grains, rng.seed(), rng.stream()))
}

impl Realization {
    /// Builds a realization from explicit germs (flat `nu`-vector positions).
    pub fn from_germs(window: Window, positions: Vec<f64>, grains: Vec<GrainSample>, seed: u64, stream: u64) -> Self {
        assert_eq!(positions.len(), grains.len() * window.nu(), "one position per grain");
        let index = GridIndex::build(&window.half_extents(), &positions, &grains);
        Self { window, positions, grains, index, seed, stream }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn nu(&self) -> usize {
        self.window.nu()
    }

    pub fn germ_count(&self) -> usize {
        self.grains.len()
    }

    pub fn position(&self, j: usize) -> &[f64] {
        let nu = self.nu();
        &self.positions[j * nu..(j + 1) * nu]
    }

    pub fn grain(&self, j: usize) -> &GrainSample {
        &self.grains[j]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    fn germ_covers(&self, j: usize, t: &[f64]) -> bool {
        let nu = self.nu();
        let u = self.position(j);
        let mut d = [0.0; MAX_DIMENSION];
        for a in 0..nu {
            d[a] = t[a] - u[a];
        }
        self.grains[j].contains(&d[..nu])
    }

    /// `X(t)`, the number of grains covering `t`.
    pub fn coverage_count(&self, t: &[f64]) -> usize {
        if !self.index.covers(t) {
            return self.coverage_count_scan(t);
        }
        let mut n = 0;
        self.index.for_each_candidate(t, |j| {
            if self.germ_covers(j, t) {
                n += 1;
            }
        });
        n
    }

    /// `X(t)` by checking every germ.
    pub fn coverage_count_scan(&self, t: &[f64]) -> usize {
        (0..self.grains.len()).filter(|&j| self.germ_covers(j, t)).count()
    }

    /// `1(X(t) >= k)` with early exit.
    pub fn covered_at_least(&self, t: &[f64], k: usize) -> bool {
        if k == 0 {
            return true;
        }
        if !self.index.covers(t) {
            return self.coverage_count_scan(t) >= k;
        }
        let mut n = 0;
        self.index.for_each_candidate(t, |j| {
            if n < k && self.germ_covers(j, t) {
                n += 1;
            }
        });
        n >= k
    }

    /// Lengths of `{x in [lo, hi] : X(x, 0, ..., 0) >= k}` for `k = 1..=k_max`,
    /// computed exactly from the line sections of all grains.
    pub fn line_levels(&self, lo: f64, hi: f64, k_max: usize) -> Vec<f64> {
        let mut intervals = Vec::new();
        for j in 0..self.grains.len() {
            self.grains[j].line_section(self.position(j), &mut intervals);
        }
        coverage_levels(&intervals, lo, hi, k_max)
    }

    /// Debug dump: `germ_id,u_1..u_nu,R,rho,volume`.
    pub fn write_germs_csv<W: Write>(&self, out: W) -> Result<()> {
        let nu = self.nu();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["germ_id".to_string()];
        header.extend((1..=nu).map(|a| format!("u_{a}")));
        header.extend(["R", "rho", "volume"].map(String::from));
        w.write_record(&header)?;
        for (j, g) in self.grains.iter().enumerate() {
            let mut row = vec![j.to_string()];
            row.extend(self.position(j).iter().map(|x| x.to_string()));
            row.extend([g.r(), g.rho(), g.volume()].map(|x| x.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grains::{sample_grain, BaseShape, HeavyTailLaw};
    use std::f64::consts::PI;

    fn disk_grain() -> GrainSample {
        let m = GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::constant(1.0).unwrap()).unwrap();
        sample_grain(&m, &mut RngStream::new(0, 0)).unwrap()
    }

    fn unit_disk_window(lambda: f64) -> Window {
        Window::new(WindowShape::Ball { radius: 1.0 }, 2, lambda).unwrap()
    }

    #[test]
    fn empty_and_single_germ() {
        let w = unit_disk_window(3.0);
        let empty = Realization::from_germs(w.clone(), vec![], vec![], 0, 0);
        assert_eq!(empty.coverage_count(&[0.0, 0.0]), 0);
        let one = Realization::from_germs(w.clone(), vec![0.0, 0.0], vec![disk_grain()], 0, 0);
        assert_eq!(one.coverage_count(&[0.5, 0.0]), 1);
        let two = Realization::from_germs(w, vec![-0.3, 0.0, 0.3, 0.0], vec![disk_grain(), disk_grain()], 0, 0);
        assert_eq!(two.coverage_count(&[0.0, 0.0]), 2);
    }

    #[test]
    fn expected_count_for_unit_disks() {
        let model = GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::constant(1.0).unwrap()).unwrap();
        let w = unit_disk_window(10.0);
        let mean = expected_candidates(&model, &w);
        assert!((mean - 121.0 * PI).abs() < 1e-9);
        let n = 1000;
        let counts: Vec<f64> = (0..n)
            .map(|i| simulate_realization(&model, &w, &mut RngStream::new(5, i)).unwrap().germ_count() as f64)
            .collect();
        let m = counts.iter().sum::<f64>() / n as f64;
        let se = (mean / n as f64).sqrt();
        assert!((m - mean).abs() < 4.0 * se, "{m} vs {mean}");
    }

    #[test]
    fn small_box_window_limit() {
        // As λ -> 0 the mean tends to v_nu E ρ^nu = v_nu E R for homothetic grains.
        let model = GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::pareto(1.5, 1.0).unwrap()).unwrap();
        let w = Window::new(WindowShape::unit_box(2), 2, 1e-9).unwrap();
        assert!((expected_candidates(&model, &w) - PI * 3.0).abs() < 1e-6);
    }

    #[test]
    fn overflow_guard() {
        let model = GrainModel::homothetic(3, BaseShape::UnitBall, HeavyTailLaw::constant(1.0).unwrap()).unwrap();
        let w = Window::new(WindowShape::unit_box(3), 3, 5000.0).unwrap();
        let err = simulate_realization(&model, &w, &mut RngStream::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn index_matches_scan() {
        let models = [
            GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::pareto(1.3, 0.2).unwrap()).unwrap(),
            GrainModel::homothetic(2, BaseShape::ClusterBoolean { mean_count: 3.0 }, HeavyTailLaw::pareto(1.5, 0.5).unwrap()).unwrap(),
            GrainModel::rect_xiex2(HeavyTailLaw::pareto(1.5, 0.5).unwrap(), 0.7).unwrap(),
            GrainModel::homothetic(3, BaseShape::UnitCubeScaled, HeavyTailLaw::pareto(1.5, 0.3).unwrap()).unwrap(),
        ];
        for (i, model) in models.iter().enumerate() {
            let nu = model.nu();
            for shape in [WindowShape::unit_box(nu), WindowShape::Ball { radius: 1.0 }] {
                let w = Window::new(shape, nu, 8.0).unwrap();
                let mut rng = RngStream::new(77, i as u64);
                let rz = simulate_realization(model, &w, &mut rng).unwrap();
                let mut t = vec![0.0; nu];
                let r = w.circumradius();
                for _ in 0..1000 {
                    for x in t.iter_mut() {
                        *x = rng.uniform(-r, r);
                    }
                    assert_eq!(rz.coverage_count(&t), rz.coverage_count_scan(&t));
                }
            }
        }
    }

    #[test]
    fn determinism() {
        let model = GrainModel::homothetic(2, BaseShape::Lilypond { intensity: 4.0 }, HeavyTailLaw::pareto(1.5, 0.3).unwrap()).unwrap();
        let w = unit_disk_window(6.0);
        let a = simulate_realization(&model, &w, &mut RngStream::new(3, 9)).unwrap();
        let b = simulate_realization(&model, &w, &mut RngStream::new(3, 9)).unwrap();
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.grains, b.grains);
    }

    #[test]
    fn line_levels_match_point_counts() {
        let model = GrainModel::homothetic(2, BaseShape::ClusterBoolean { mean_count: 3.0 }, HeavyTailLaw::pareto(1.5, 0.3).unwrap()).unwrap();
        let w = Window::new(WindowShape::Box { sides: vec![1.0, 1e-9] }, 2, 20.0).unwrap();
        let rz = simulate_realization(&model, &w, &mut RngStream::new(1, 2)).unwrap();
        let lv = rz.line_levels(-10.0, 10.0, 3);
        let n = 200_000;
        let mut freq = [0usize; 3];
        for i in 0..n {
            let x = -10.0 + 20.0 * (i as f64 + 0.5) / n as f64;
            let c = rz.coverage_count(&[x, 0.0]);
            for (k, f) in freq.iter_mut().enumerate() {
                if c > k {
                    *f += 1;
                }
            }
        }
        for k in 0..3 {
            assert!((lv[k] - 20.0 * freq[k] as f64 / n as f64).abs() < 1e-3, "{lv:?} {freq:?}");
        }
    }

    #[test]
    fn germ_dump_has_header() {
        let w = unit_disk_window(2.0);
        let rz = Realization::from_germs(w, vec![0.5, 0.0], vec![disk_grain()], 0, 0);
        let mut buf = Vec::new();
        rz.write_germs_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("germ_id,u_1,u_2,R,rho,volume\n0,0.5,0,1,1,"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn index_completeness(seed in 0u64..1_000_000, xm in 0.05f64..2.0, lambda in 0.5f64..12.0) {
                let model = GrainModel::homothetic(2, BaseShape::UnitBall, HeavyTailLaw::pareto(1.4, xm).unwrap()).unwrap();
                let w = Window::new(WindowShape::Box { sides: vec![1.0, 0.6] }, 2, lambda).unwrap();
                let mut rng = RngStream::new(seed, 0);
                let rz = simulate_realization(&model, &w, &mut rng).unwrap();
                let r = w.circumradius();
                for _ in 0..200 {
                    let t = [rng.uniform(-r, r), rng.uniform(-r, r)];
                    prop_assert_eq!(rz.coverage_count(&t), rz.coverage_count_scan(&t));
                }
            }
        }
    }
}
