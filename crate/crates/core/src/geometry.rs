//! Closed-form measurements of balls, boxes, intervals and disk unions.

use std::f64::consts::PI;

use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma;

/// Volume of the unit ball in dimension `nu`.
pub fn unit_ball_volume(nu: usize) -> f64 {
    match nu {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(nu as f64 / 2.0) / gamma(nu as f64 / 2.0 + 1.0),
    }
}

/// Surface area of the unit sphere bounding the `nu`-ball.
pub fn unit_sphere_area(nu: usize) -> f64 {
    nu as f64 * unit_ball_volume(nu)
}

pub fn ball_volume(nu: usize, r: f64) -> f64 {
    unit_ball_volume(nu) * r.powi(nu as i32)
}

/// Volume of the cap of height `h` cut from a `nu`-ball of radius `r`.
pub fn cap_volume(nu: usize, r: f64, h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h >= 2.0 * r {
        return ball_volume(nu, r);
    }
    if h > r {
        return ball_volume(nu, r) - cap_volume(nu, r, 2.0 * r - h);
    }
    if nu == 1 {
        return h;
    }
    let x = ((2.0 * r * h - h * h) / (r * r)).clamp(0.0, 1.0);
    0.5 * ball_volume(nu, r) * beta_reg((nu as f64 + 1.0) / 2.0, 0.5, x)
}

/// Volume of the intersection of two `nu`-balls with radii `r1`, `r2` whose
/// centers are `d` apart.
pub fn ball_intersection_volume(nu: usize, r1: f64, r2: f64, d: f64) -> f64 {
    let d = d.abs();
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        return ball_volume(nu, r1.min(r2));
    }
    if nu == 1 {
        return (r1 + r2 - d).min(2.0 * r1.min(r2));
    }
    if nu == 2 {
        return disk_intersection_area(r1, r2, d);
    }
    let c1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let c2 = d - c1;
    cap_volume(nu, r1, r1 - c1) + cap_volume(nu, r2, r2 - c2)
}

fn disk_intersection_area(r1: f64, r2: f64, d: f64) -> f64 {
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0);
    r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k.sqrt()
}

/// Intersection of a ball and its translate by `d` (equal radii).
pub fn lens_volume(nu: usize, r: f64, d: f64) -> f64 {
    ball_intersection_volume(nu, r, r, d)
}

/// Half-length of the chord cut from a ball of radius `r` by a line at
/// distance `d` from the center; `None` when the line misses the ball.
pub fn chord_half(r: f64, d: f64) -> Option<f64> {
    let q = r * r - d * d;
    (q > 0.0).then(|| q.sqrt())
}

/// Sorts and merges overlapping half-open intervals in place.
pub fn merge_intervals(iv: &mut Vec<(f64, f64)>) {
    iv.retain(|(a, b)| b > a);
    iv.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
    for &(a, b) in iv.iter() {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    *iv = out;
}

/// Total length of a union of intervals.
pub fn union_length(iv: &[(f64, f64)]) -> f64 {
    let mut v = iv.to_vec();
    merge_intervals(&mut v);
    v.iter().map(|(a, b)| b - a).sum()
}

/// Lengths of `{t in [lo, hi] : count(t) >= k}` for `k = 1..=k_max`, where
/// `count(t)` is the number of intervals containing `t`.
pub fn coverage_levels(intervals: &[(f64, f64)], lo: f64, hi: f64, k_max: usize) -> Vec<f64> {
    let mut events: Vec<(f64, i32)> = Vec::with_capacity(2 * intervals.len());
    for &(a, b) in intervals {
        let a = a.max(lo);
        let b = b.min(hi);
        if b > a {
            events.push((a, 1));
            events.push((b, -1));
        }
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut out = vec![0.0; k_max];
    let mut depth: i32 = 0;
    let mut prev = lo;
    for (x, delta) in events {
        if depth > 0 && x > prev {
            let len = x - prev;
            for slot in out.iter_mut().take((depth as usize).min(k_max)) {
                *slot += len;
            }
        }
        depth += delta;
        prev = x;
    }
    out
}

/// `∫_0^x sqrt(r² − u²) du` for `0 ≤ x ≤ r`.
pub fn disk_strip_integral(x: f64, r: f64) -> f64 {
    let x = x.clamp(0.0, r);
    if r == 0.0 {
        return 0.0;
    }
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).clamp(-1.0, 1.0).asin())
}

/// Area of `(0, w] × (0, h]` inside the closed disk of radius `r` centered at
/// the origin.
pub fn rect_disk_area(w: f64, h: f64, r: f64) -> f64 {
    if w <= 0.0 || h <= 0.0 || r <= 0.0 {
        return 0.0;
    }
    let w = w.min(r);
    if w * w + h * h <= r * r {
        return w * h;
    }
    // For x below x_c the column is cut at height h, beyond it by the circle.
    let x_c = if h >= r { 0.0 } else { (r * r - h * h).sqrt().min(w) };
    x_c * h + disk_strip_integral(w, r) - disk_strip_integral(x_c, r)
}

/// Area of the union of disks given as `(cx, cy, r)`.
pub fn disk_union_area(disks: &[(f64, f64, f64)]) -> f64 {
    let n = disks.len();
    let mut area = 0.0;
    for i in 0..n {
        let (xi, yi, ri) = disks[i];
        if ri <= 0.0 {
            continue;
        }
        let mut buried = false;
        let mut covered: Vec<(f64, f64)> = Vec::new();
        for (j, &(xj, yj, rj)) in disks.iter().enumerate() {
            if i == j || rj <= 0.0 {
                continue;
            }
            let d = ((xj - xi).powi(2) + (yj - yi).powi(2)).sqrt();
            if d + ri <= rj {
                // Identical disks: keep the lowest index only.
                if d == 0.0 && ri == rj && j > i {
                    continue;
                }
                buried = true;
                break;
            }
            if d >= ri + rj || d + rj <= ri {
                continue;
            }
            let base = (yj - yi).atan2(xj - xi);
            let half = ((ri * ri + d * d - rj * rj) / (2.0 * ri * d)).clamp(-1.0, 1.0).acos();
            let mut a = base - half;
            let mut b = base + half;
            while a < 0.0 {
                a += 2.0 * PI;
                b += 2.0 * PI;
            }
            if b > 2.0 * PI {
                covered.push((a, 2.0 * PI));
                covered.push((0.0, b - 2.0 * PI));
            } else {
                covered.push((a, b));
            }
        }
        if buried {
            continue;
        }
        merge_intervals(&mut covered);
        let mut free = Vec::new();
        let mut start = 0.0;
        for &(a, b) in &covered {
            if a > start {
                free.push((start, a));
            }
            start = start.max(b);
        }
        if start < 2.0 * PI {
            free.push((start, 2.0 * PI));
        }
        for (t1, t2) in free {
            area += 0.5
                * (ri * ri * (t2 - t1) + ri * xi * (t2.sin() - t1.sin()) - ri * yi * (t2.cos() - t1.cos()));
        }
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-12);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn unit_disk_lens_at_unit_distance() {
        let expected = 2.0 * PI / 3.0 - 3f64.sqrt() / 2.0;
        assert!((lens_volume(2, 1.0, 1.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn general_formula_agrees_with_disk_formula() {
        for &(r1, r2, d) in &[(1.0, 1.0, 1.0), (1.0, 0.5, 0.9), (0.3, 0.8, 0.6), (1.0, 0.2, 1.1)] {
            let c1: f64 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
            let caps = cap_volume(2, r1, r1 - c1) + cap_volume(2, r2, r2 - (d - c1));
            assert!((caps - disk_intersection_area(r1, r2, d)).abs() < 1e-10);
        }
    }

    #[test]
    fn sphere_lens_closed_form() {
        // V = π (4r + d)(2r − d)² / 12 for equal radii in three dimensions.
        let (r, d) = (1.3, 0.7);
        let expected = PI * (4.0 * r + d) * (2.0 * r - d).powi(2) / 12.0;
        assert!((lens_volume(3, r, d) - expected).abs() < 1e-10);
    }

    #[test]
    fn interval_overlap() {
        assert_eq!(lens_volume(1, 2.0, 1.0), 3.0);
        assert_eq!(ball_intersection_volume(1, 2.0, 0.5, 0.0), 1.0);
    }

    #[test]
    fn coverage_levels_counts_depth() {
        let iv = [(0.0, 2.0), (1.0, 3.0), (1.5, 1.8)];
        let lv = coverage_levels(&iv, 0.5, 2.5, 4);
        assert!((lv[0] - 2.0).abs() < 1e-15);
        assert!((lv[1] - 1.0).abs() < 1e-15);
        assert!((lv[2] - 0.3).abs() < 1e-12);
        assert_eq!(lv[3], 0.0);
    }

    #[test]
    fn rect_disk_area_strip() {
        // Strip (0,1]×(0,9] against the disk of radius 3.
        let expected = 0.5 * (8f64.sqrt() + 9.0 * (1.0f64 / 3.0).asin());
        assert!((rect_disk_area(1.0, 9.0, 3.0) - expected).abs() < 1e-12);
        assert!((rect_disk_area(1.0, 1.0, 3.0) - 1.0).abs() < 1e-15);
        assert!((rect_disk_area(5.0, 5.0, 2.0) - PI).abs() < 1e-12);
    }

    #[test]
    fn rect_disk_area_matches_riemann_sum() {
        let (w, h, r) = (1.7, 0.9, 1.5);
        let n = 200_000;
        let dx = w / n as f64;
        let riemann: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * dx;
                let top = if x < r { (r * r - x * x).sqrt() } else { 0.0 };
                top.min(h) * dx
            })
            .sum();
        assert!((rect_disk_area(w, h, r) - riemann).abs() < 1e-8);
    }

    #[test]
    fn disk_union_two_disks() {
        let disks = [(-0.3, 0.0, 1.0), (0.3, 0.0, 1.0)];
        let expected = 2.0 * PI - lens_volume(2, 1.0, 0.6);
        assert!((disk_union_area(&disks) - expected).abs() < 1e-12);
    }

    #[test]
    fn disk_union_nested_and_duplicate() {
        let disks = [(0.0, 0.0, 1.0), (0.1, 0.0, 0.3), (0.0, 0.0, 1.0)];
        assert!((disk_union_area(&disks) - PI).abs() < 1e-12);
    }

    #[test]
    fn disk_union_matches_grid_count() {
        let disks = [(0.2, 0.1, 0.5), (-0.3, 0.2, 0.4), (0.0, -0.4, 0.35), (0.5, 0.5, 0.2)];
        let n = 2000;
        let h = 2.0 / n as f64;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                let x = -1.0 + (i as f64 + 0.5) * h;
                let y = -1.0 + (j as f64 + 0.5) * h;
                if disks.iter().any(|&(cx, cy, r)| (x - cx).powi(2) + (y - cy).powi(2) < r * r) {
                    count += 1;
                }
            }
        }
        let grid = count as f64 * h * h;
        assert!((disk_union_area(&disks) - grid).abs() < 2e-3);
    }
}
