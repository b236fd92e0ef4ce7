//! Simultaneous unit-rate growth of hard balls inside the unit ball.

use crate::error::{Error, Result};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Final radii for germs given as a flat array of `nu`-vectors inside the
/// open unit ball.
///
/// All balls start growing at time zero with unit rate. A ball stops when it
/// touches another growing ball (both stop), touches a ball that has already
/// stopped, or reaches the unit sphere.
pub fn lilypond_grow(germs: &[f64], nu: usize) -> Result<Vec<f64>> {
    if nu == 0 || germs.len() % nu != 0 {
        return Err(Error::Precondition(format!(
            "germ array of length {} is not a multiple of dimension {nu}",
            germs.len()
        )));
    }
    let n = germs.len() / nu;
    let pt = |i: usize| &germs[i * nu..(i + 1) * nu];
    let mut radius = vec![0.0; n];
    let mut growing = vec![true; n];
    let mut remaining = n;
    let cap = 2 * n + 8;
    let mut iterations = 0;
    while remaining > 0 {
        iterations += 1;
        if iterations > cap {
            return Err(Error::Internal(format!(
                "lilypond growth did not terminate after {cap} events with {remaining} balls still growing"
            )));
        }
        let mut t_next = f64::INFINITY;
        for i in (0..n).filter(|&i| growing[i]) {
            t_next = t_next.min(1.0 - norm(pt(i)));
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = dist(pt(i), pt(j));
                let t = if growing[j] { 0.5 * d } else { d - radius[j] };
                t_next = t_next.min(t);
            }
        }
        let tol = 1e-12 * t_next.abs().max(1.0);
        let mut stop = vec![false; n];
        for i in (0..n).filter(|&i| growing[i]) {
            if 1.0 - norm(pt(i)) <= t_next + tol {
                stop[i] = true;
                continue;
            }
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = dist(pt(i), pt(j));
                let t = if growing[j] { 0.5 * d } else { d - radius[j] };
                if t <= t_next + tol {
                    stop[i] = true;
                    break;
                }
            }
        }
        let stopped_now = stop.iter().filter(|&&s| s).count();
        if stopped_now == 0 {
            return Err(Error::Internal(format!("lilypond event at time {t_next} stopped no ball")));
        }
        for i in 0..n {
            if growing[i] {
                radius[i] = t_next.max(0.0);
            }
            if stop[i] {
                growing[i] = false;
            }
        }
        remaining -= stopped_now;
    }
    Ok(radius)
}
