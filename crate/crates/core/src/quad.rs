//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Integrand value: real or complex.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<V> {
    pub value: V,
    pub abs_err: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    err: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk15<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_k = fc.magnitude() * WGK[7];
    let mut fv = [V::zero(); 14];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kronrod = kronrod + (f1 + f2) * WGK[j];
        abs_k += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[7] * (fc - mean).magnitude();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).magnitude() + (fv[2 * j + 1] - mean).magnitude());
    }
    let result = kronrod * h;
    let asc = asc * h.abs();
    let abs_k = abs_k * h.abs();
    let mut err = ((kronrod - gauss) * h).magnitude();
    if asc != 0.0 && err != 0.0 {
        err = asc * (1.0f64).min((200.0 * err / asc).powf(1.5));
    }
    if abs_k > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_k);
    }
    (result, err)
}

/// Integrates `f` over `[a, b]`, starting from the partition given by `breaks`
/// (interior points, any order; points outside `(a, b)` are ignored).
pub fn integrate_with_breaks<V, F>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: QuadOptions) -> Result<QuadResult<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numerical(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: V::zero(), abs_err: 0.0, evaluations: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points: Vec<f64> = breaks.iter().copied().filter(|x| *x > lo && *x < hi).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = Vec::with_capacity(points.len() + 2);
    edges.push(lo);
    edges.extend(points);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = V::zero();
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in edges.windows(2) {
        let (value, err) = gk15(&mut f, w[0], w[1]);
        evaluations += 15;
        total = total + value;
        total_err += err;
        heap.push(Segment { a: w[0], b: w[1], value, err });
    }

    while total_err > opts.abs_tol.max(opts.rel_tol * total.magnitude()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature on [{lo}, {hi}] did not converge: estimate {:.6e}, error {:.3e} after {} intervals",
                total.magnitude(),
                total_err,
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::Numerical(format!(
                "quadrature interval [{}, {}] cannot be bisected further (error {:.3e})",
                worst.a, worst.b, total_err
            )));
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // Re-sum to shed accumulated cancellation in the running total.
    let mut value = V::zero();
    let mut abs_err = 0.0;
    for s in heap.iter() {
        value = value + s.value;
        abs_err += s.err;
    }
    Ok(QuadResult { value: value * sign, abs_err, evaluations })
}

pub fn integrate<V, F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    integrate_with_breaks(f, a, b, &[], opts)
}

/// Splits `[a, b]` into `n` equal pieces before adaptive refinement; useful for
/// oscillatory integrands.
pub fn integrate_split<V, F>(f: F, a: f64, b: f64, n: usize, opts: QuadOptions) -> Result<QuadResult<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    let n = n.max(1);
    let breaks: Vec<f64> = (1..n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let opts = QuadOptions { max_intervals: opts.max_intervals.max(4 * n), ..opts };
    integrate_with_breaks(f, a, b, &breaks, opts)
}
