//! Poisson–Charlier polynomials `P_j(x; μ)` defined by
//! `Σ_k u^k/k! P_k(x; μ) = (1 + u)^x e^{-uμ}`, and the coefficients of the
//! excursion indicators `1(N >= k)` in that basis.

use std::sync::OnceLock;


use crate::error::{Error, Result};

/// Largest supported degree.
pub const MAX_DEGREE: usize = 20;

/// Default Poisson tail mass left out of truncated sums.
pub const TAIL_TOL: f64 = 1e-12;

/// `coeffs[j][m][l]` is the integer coefficient of `x^m μ^l` in `P_j`.
///
/// From the generating function, `P_j = Σ_i C(j,i) (x)_i (−μ)^{j−i}`, and the
/// falling factorial expands through signed Stirling numbers of the first kind.
fn coefficient_table() -> &'static Vec<Vec<Vec<i128>>> {
    static TABLE: OnceLock<Vec<Vec<Vec<i128>>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // stirling[i][m]: coefficient of x^m in (x)_i.
        let mut stirling = vec![vec![0i128; MAX_DEGREE + 1]; MAX_DEGREE + 1];
        stirling[0][0] = 1;
        for i in 1..=MAX_DEGREE {
            for m in 1..=i {
                stirling[i][m] = stirling[i - 1][m - 1] - (i as i128 - 1) * stirling[i - 1][m];
            }
        }
        let mut binom = vec![vec![0i128; MAX_DEGREE + 1]; MAX_DEGREE + 1];
        for n in 0..=MAX_DEGREE {
            binom[n][0] = 1;
            for k in 1..=n {
                binom[n][k] = binom[n - 1][k - 1] + if k < n { binom[n - 1][k] } else { 0 };
            }
        }
        (0..=MAX_DEGREE)
            .map(|j| {
                let mut c = vec![vec![0i128; j + 1]; j + 1];
                for i in 0..=j {
                    let l = j - i;
                    let sign = if l % 2 == 0 { 1 } else { -1 };
                    for m in 0..=i {
                        c[m][l] += sign * binom[j][i] * stirling[i][m];
                    }
                }
                c
            })
            .collect()
    })
}

/// Integer coefficients of `x^m μ^l` in `P_j`, indexed `[m][l]`.
pub fn charlier_coefficients(j: usize) -> Result<&'static [Vec<i128>]> {
    check_degree(j)?;
    Ok(&coefficient_table()[j])
}

fn check_degree(j: usize) -> Result<()> {
    if j > MAX_DEGREE {
        return Err(Error::Precondition(format!("Charlier degree {j} exceeds the supported maximum {MAX_DEGREE}")));
    }
    Ok(())
}

/// `P_j(x; μ)` evaluated from the expansion in falling factorials.
pub fn charlier_poly(j: usize, x: u64, mu: f64) -> Result<f64> {
    check_degree(j)?;
    // Σ_i C(j,i) (x)_i (−μ)^{j−i}
    let mut sum = 0.0;
    let mut falling = 1.0;
    let mut binom = 1.0;
    for i in 0..=j {
        if i > 0 {
            falling *= x as f64 - (i - 1) as f64;
            binom = binom * (j - i + 1) as f64 / i as f64;
        }
        if falling == 0.0 {
            break;
        }
        sum += binom * falling * (-mu).powi((j - i) as i32);
    }
    Ok(sum)
}

/// Poisson probabilities `P(N = n)` for `n = 0..=n_max` in log space.
fn poisson_pmf(mu: f64, n_max: usize) -> Vec<f64> {
    let lm = mu.ln();
    let mut log_fact = 0.0;
    (0..=n_max)
        .map(|n| {
            if n > 0 {
                log_fact += (n as f64).ln();
            }
            (n as f64 * lm - mu - log_fact).exp()
        })
        .collect()
}

/// Truncation point for sums of `P(N = n) · poly(n)` of degree up to
/// `2 · degree`: beyond it the Poisson tail times the polynomial growth is
/// below `tail_tol`.
fn truncation(mu: f64, degree: usize, tail_tol: f64) -> usize {
    let mut n = mu.ceil() as usize;
    let lm = mu.ln();
    loop {
        let log_p = n as f64 * lm - mu - ln_factorial(n);
        let growth = 2.0 * degree as f64 * ((n + 1) as f64 + mu).ln();
        if n as f64 > mu + 1.0 && log_p + growth < tail_tol.ln() - 10.0 {
            return n;
        }
        n += 1;
    }
}

fn ln_factorial(n: usize) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Precondition(format!("Poisson mean must be positive, got {mu}")));
    }
    Ok(())
}

/// `c_{k,μ}(j) = μ^{-j} E[1(N >= k) P_j(N; μ)]` for `N ~ Poisson(μ)`, using
/// the closed form `e^{-μ} μ^{k−1}/(k−1)!` at `j = 1`.
pub fn charlier_coeff(k: usize, mu: f64, j: usize, tail_tol: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("excursion level must be at least 1".into()));
    }
    check_mu(mu)?;
    if j == 1 {
        let mut v = (-mu).exp();
        for i in 1..k {
            v *= mu / i as f64;
        }
        return Ok(v);
    }
    charlier_coeff_series(k, mu, j, tail_tol)
}

/// The same coefficient by the truncated Poisson sum, for every `j`.
pub fn charlier_coeff_series(k: usize, mu: f64, j: usize, tail_tol: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Precondition("excursion level must be at least 1".into()));
    }
    check_mu(mu)?;
    check_degree(j)?;
    let n_max = truncation(mu, j, tail_tol).max(k);
    let pmf = poisson_pmf(mu, n_max);
    let mut s = 0.0;
    for (n, p) in pmf.iter().enumerate().skip(k) {
        s += p * charlier_poly(j, n as u64, mu)?;
    }
    Ok(s / mu.powi(j as i32))
}

/// `max_{j,k <= J} |E[P_j P_k] − δ_{jk} j! μ^j| / √(j! μ^j k! μ^k)`, the
/// orthogonality defect normalized by the polynomial norms.
pub fn orthogonality_check(max_degree: usize, mu: f64, tail_tol: f64) -> Result<f64> {
    check_degree(max_degree)?;
    check_mu(mu)?;
    let n_max = truncation(mu, max_degree, tail_tol);
    let pmf = poisson_pmf(mu, n_max);
    let values: Vec<Vec<f64>> = (0..=max_degree)
        .map(|j| (0..=n_max).map(|n| charlier_poly(j, n as u64, mu)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let norm = |j: usize| (ln_factorial(j) + j as f64 * mu.ln()).exp();
    let mut worst: f64 = 0.0;
    for j in 0..=max_degree {
        for k in 0..=j {
            let e: f64 = pmf.iter().enumerate().map(|(n, p)| p * values[j][n] * values[k][n]).sum();
            let target = if j == k { norm(j) } else { 0.0 };
            worst = worst.max((e - target).abs() / (norm(j) * norm(k)).sqrt());
        }
    }
    Ok(worst)
}

/// Truncated expansion of `1(x >= k) − P(N >= k)` in the Charlier basis.
pub fn indicator_expansion(k: usize, mu: f64, max_degree: usize, x: u64, tail_tol: f64) -> Result<f64> {
    check_degree(max_degree)?;
    let mut s = 0.0;
    let mut fact = 1.0;
    for j in 1..=max_degree {
        fact *= j as f64;
        s += charlier_coeff(k, mu, j, tail_tol)? / fact * charlier_poly(j, x, mu)?;
    }
    Ok(s)
}

/// `E[(1(N >= k) − P(N >= k) − S_J(N))²]` for the truncated expansion `S_J`.
pub fn expansion_residual(k: usize, mu: f64, max_degree: usize, tail_tol: f64) -> Result<f64> {
    check_mu(mu)?;
    let n_max = truncation(mu, max_degree, tail_tol).max(k);
    let pmf = poisson_pmf(mu, n_max);
    let tail: f64 = pmf.iter().skip(k).sum();
    let mut r = 0.0;
    for (n, p) in pmf.iter().enumerate() {
        let target = if n >= k { 1.0 - tail } else { -tail };
        r += p * (target - indicator_expansion(k, mu, max_degree, n as u64, tail_tol)?).powi(2);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn low_degrees() {
        for x in 0..10 {
            assert_eq!(charlier_poly(0, x, 2.3).unwrap(), 1.0);
        }
        assert_eq!(charlier_poly(1, 5, 2.0).unwrap(), 3.0);
        assert_eq!(charlier_poly(2, 3, 1.0).unwrap(), 1.0);
        assert!(charlier_poly(21, 1, 1.0).is_err());
    }

    #[test]
    fn second_degree_coefficients() {
        // x² − x(2μ + 1) + μ², indexed [power of x][power of μ].
        let c = charlier_coefficients(2).unwrap();
        assert_eq!(c[2][0], 1);
        assert_eq!(c[1][0], -1);
        assert_eq!(c[1][1], -2);
        assert_eq!(c[0][2], 1);
        assert_eq!(c[0][0], 0);
    }

    #[test]
    fn coefficient_table_agrees_with_evaluation() {
        for j in 0..=12 {
            let c = charlier_coefficients(j).unwrap();
            for x in 0..8u64 {
                let mu: f64 = 1.25;
                let mut v = 0.0;
                for (m, row) in c.iter().enumerate() {
                    for (l, &a) in row.iter().enumerate() {
                        v += a as f64 * (x as f64).powi(m as i32) * mu.powi(l as i32);
                    }
                }
                let e = charlier_poly(j, x, mu).unwrap();
                assert!((v - e).abs() < 1e-9 * e.abs().max(1.0), "j {j} x {x}");
            }
        }
    }

    #[test]
    fn generating_function_identity() {
        for &(u, x, mu) in &[(0.3, 4u64, 1.0), (-0.4, 7, 2.5), (0.1, 12, PI), (0.5, 0, 0.7)] {
            let mut s = 0.0;
            let mut fact = 1.0;
            for k in 0..=MAX_DEGREE {
                if k > 0 {
                    fact *= k as f64;
                }
                s += (u as f64).powi(k as i32) / fact * charlier_poly(k, x, mu).unwrap();
            }
            let expect = (1.0 + u as f64).powi(x as i32) * (-u * mu).exp();
            assert!((s - expect).abs() < 1e-10, "{u} {x} {mu}: {s} vs {expect}");
        }
    }

    #[test]
    fn coefficient_examples() {
        assert!((charlier_coeff(1, PI, 1, TAIL_TOL).unwrap() - (-PI).exp()).abs() < 1e-15);
        assert!((charlier_coeff(2, 1.0, 1, TAIL_TOL).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!((charlier_coeff(1, 1.0, 0, TAIL_TOL).unwrap() - (1.0 - (-1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_series() {
        for k in 1..=5 {
            for &mu in &[0.5, 1.0, PI, 5.0] {
                let a = charlier_coeff(k, mu, 1, TAIL_TOL).unwrap();
                let b = charlier_coeff_series(k, mu, 1, TAIL_TOL).unwrap();
                assert!((a - b).abs() < 1e-12, "k {k} mu {mu}");
            }
        }
    }

    #[test]
    fn orthogonality() {
        // E[(N − 2)²] = 2 and E[N − μ] = 0 are the degree-one cases.
        assert!(orthogonality_check(1, 2.0, TAIL_TOL).unwrap() < 1e-12);
        assert!(orthogonality_check(10, 3.0, TAIL_TOL).unwrap() < 1e-9);
        assert!(orthogonality_check(21, 3.0, TAIL_TOL).is_err());
    }

    #[test]
    fn expansion_residual_decreases() {
        for k in 1..=5 {
            for &mu in &[0.5, 2.0, 5.0] {
                let r: Vec<f64> = (1..=12).map(|j| expansion_residual(k, mu, j, TAIL_TOL).unwrap()).collect();
                for w in r.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12, "k {k} mu {mu}: {r:?}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn degree_one_is_x_minus_mu(x in 0u64..1000, mu in 0.01f64..50.0) {
            prop_assert_eq!(charlier_poly(1, x, mu).unwrap(), x as f64 - mu);
        }

        #[test]
        fn expansion_converges_pointwise(k in 1usize..=5, mu in 0.3f64..3.0, x in 0u64..=12) {
            let tail: f64 = 1.0 - statrs::distribution::DiscreteCDF::cdf(&statrs::distribution::Poisson::new(mu).unwrap(), k as u64 - 1);
            let target = if x >= k as u64 { 1.0 - tail } else { -tail };
            let err = (indicator_expansion(k, mu, 20, x, TAIL_TOL).unwrap() - target).abs();
            // The L² residual bounds the pointwise error through the Poisson weight at x.
            let bound = (expansion_residual(k, mu, 20, TAIL_TOL).unwrap()
                / statrs::distribution::Discrete::pmf(&statrs::distribution::Poisson::new(mu).unwrap(), x)).sqrt();
            prop_assert!(err <= bound + 1e-9);
        }
    }
}
