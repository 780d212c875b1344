//! Generalized Marcum Q-function of integer order.
//!
//! `Q_N(a, b)` is written as a Poisson mixture of regularized upper
//! incomplete gamma functions,
//!
//! ```text
//! Q_N(a, b) = sum_n  e^{-λ} λ^n / n!  ·  Q(N + n, y),   λ = a²/2,  y = b²/2,
//! ```
//!
//! and for integer order `Q(s, y)` is the Poisson CDF `Pr{Pois(y) <= s - 1}`.
//! Both the function and its complement are accumulated as sums of positive
//! terms, so `1 - Q` keeps full relative accuracy deep in the lower tail.

use crate::error::{invalid, Result};

/// Truncation bound on the neglected Poisson-mixture mass.
const MIXTURE_TAIL: f64 = 1e-16;

/// Cap on the lower-tail series used to seed `P(s_max, y)`.
const MAX_SERIES_TERMS: usize = 100_000;

/// `Q_N(a, b)`.
pub fn marcum_q(order: u32, a: f64, b: f64) -> Result<f64> {
    marcum_q_pair(order, a, b).map(|(q, _)| q)
}

/// `(Q_N(a, b), 1 - Q_N(a, b))`, each computed without cancellation.
pub fn marcum_q_pair(order: u32, a: f64, b: f64) -> Result<(f64, f64)> {
    if order == 0 {
        return Err(invalid("Marcum Q order must be >= 1"));
    }
    if !(a.is_finite() && a >= 0.0) {
        return Err(invalid(format!("Marcum Q: a must be finite and >= 0, got {a}")));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(invalid(format!("Marcum Q: b must be finite and >= 0, got {b}")));
    }
    Ok(poisson_mixture(order, 0.5 * a * a, 0.5 * b * b))
}

/// Mixture form in terms of `λ = a²/2` and `y = b²/2`. Callers validate.
pub(crate) fn poisson_mixture(order: u32, lambda: f64, y: f64) -> (f64, f64) {
    debug_assert!(order >= 1 && lambda >= 0.0 && y >= 0.0);
    if y == 0.0 {
        return (1.0, 0.0);
    }

    let weights = poisson_weights(lambda);
    let order = order as usize;
    let s_max = order + weights.len() - 1;

    let pmf: Vec<f64> = (0..=s_max).map(|k| poisson_pmf(k, y)).collect();

    // upper[s] = Q(s, y) = sum_{k<s} pmf[k]
    let mut upper = vec![0.0; s_max + 1];
    let mut acc = 0.0;
    for s in 1..=s_max {
        acc += pmf[s - 1];
        upper[s] = acc;
    }

    // lower[s] = P(s, y) = sum_{k>=s} pmf[k]
    let mut lower = vec![0.0; s_max + 1];
    if y < (s_max + 1) as f64 {
        lower[s_max] = pmf[s_max] * lower_series_factor(s_max, y);
        for s in (order..s_max).rev() {
            lower[s] = lower[s + 1] + pmf[s];
        }
    } else {
        // Q(s, y) stays below ~1/2 here, so the complement is well conditioned.
        for s in order..=s_max {
            lower[s] = 1.0 - upper[s];
        }
    }

    let mut q = 0.0;
    let mut p = 0.0;
    for (n, w) in weights.iter().enumerate() {
        q += w * upper[order + n];
        p += w * lower[order + n];
    }
    (q.clamp(0.0, 1.0), p.clamp(0.0, 1.0))
}

/// `sum_{j>=0} y^j / ((s+1)(s+2)...(s+j))`, so that `P(s, y) = pmf(s) · factor`.
fn lower_series_factor(s: usize, y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..MAX_SERIES_TERMS {
        term *= y / (s + j) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Poisson(λ) weights up to the first index whose remaining tail is provably
/// below [`MIXTURE_TAIL`].
fn poisson_weights(lambda: f64) -> Vec<f64> {
    if lambda == 0.0 {
        return vec![1.0];
    }
    let mut weights = Vec::new();
    let mut n = 0usize;
    loop {
        let w = poisson_pmf(n, lambda);
        weights.push(w);
        // For n + 2 > λ the tail after n is dominated by a geometric series:
        // sum_{k>n} w_k <= w_{n+1} / (1 - λ/(n+2)).
        if (n + 1) as f64 >= lambda {
            let next = w * lambda / (n + 1) as f64;
            let ratio = lambda / (n + 2) as f64;
            if next / (1.0 - ratio) < MIXTURE_TAIL {
                break;
            }
        }
        n += 1;
    }
    weights
}

/// `e^{-μ} μ^k / k!` in saddle-point form, which avoids the cancellation of
/// `k ln μ - ln k!` against `μ` for large arguments.
pub(crate) fn poisson_pmf(k: usize, mu: f64) -> f64 {
    if k == 0 {
        return (-mu).exp();
    }
    let x = k as f64;
    (-stirling_error(k) - deviance(x, mu)).exp() / (std::f64::consts::TAU * x).sqrt()
}

/// `ln k! - (k + 1/2) ln k + k - ln(2π)/2`.
fn stirling_error(k: usize) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let x = k as f64;
    if k <= 15 {
        let ln_fact: f64 = (2..=k).map(|j| (j as f64).ln()).sum();
        return ln_fact - (x + 0.5) * x.ln() + x - 0.5 * std::f64::consts::TAU.ln();
    }
    let x2 = x * x;
    if k > 500 {
        (S0 - S1 / x2) / x
    } else if k > 80 {
        (S0 - (S1 - S2 / x2) / x2) / x
    } else if k > 35 {
        (S0 - (S1 - (S2 - S3 / x2) / x2) / x2) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / x2) / x2) / x2) / x2) / x
    }
}

/// `x ln(x/μ) + μ - x`, by series when `x` is close to `μ`.
fn deviance(x: f64, mu: f64) -> f64 {
    if (x - mu).abs() < 0.1 * (x + mu) {
        let v = (x - mu) / (x + mu);
        let mut s = (x - mu) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / mu).ln() + mu - x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_threshold_is_one() {
        for order in 1..=6 {
            for a in [0.0, 0.3, 2.0, 11.0] {
                assert_eq!(marcum_q(order, a, 0.0).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn first_order_centered_is_rayleigh_tail() {
        for b in [0.0, 0.1, 0.5, 1.0, 2.0, 3.7, 6.0] {
            let expect = (-b * b / 2.0_f64).exp();
            assert_abs_diff_eq!(marcum_q(1, 0.0, b).unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn centered_matches_chi_square_tail() {
        // Q_N(0, b) = e^{-y} sum_{k<N} y^k / k!
        let b: f64 = 2.3;
        let y = b * b / 2.0;
        let expect: f64 = (0..3).map(|k| (-y).exp() * y.powi(k) / [1.0, 1.0, 2.0][k as usize]).sum();
        assert_abs_diff_eq!(marcum_q(3, 0.0, b).unwrap(), expect, epsilon = 1e-13);
    }

    #[test]
    fn complement_is_accurate_in_lower_tail() {
        // 1 - Q_1(0, b) = 1 - e^{-b²/2} ≈ b²/2 for small b
        let b = 1e-6;
        let (_, p) = marcum_q_pair(1, 0.0, b).unwrap();
        let expect = -(-(b * b) / 2.0_f64).exp_m1();
        assert!((p - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn pair_sums_to_one() {
        for order in [1, 2, 6, 9] {
            for a in [0.0, 0.7, 4.0, 10.9, 40.0] {
                for b in [0.05, 1.0, 4.0, 11.0, 45.0] {
                    let (q, p) = marcum_q_pair(order, a, b).unwrap();
                    assert_abs_diff_eq!(q + p, 1.0, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(marcum_q(0, 1.0, 1.0).is_err());
        assert!(marcum_q(1, -1.0, 1.0).is_err());
        assert!(marcum_q(1, 1.0, -0.1).is_err());
        assert!(marcum_q(1, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn weights_cover_mass() {
        for lambda in [0.0, 1e-3, 0.5, 20.0, 60.0, 900.0] {
            let w = poisson_weights(lambda);
            let total: f64 = w.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pmf_matches_direct_formula() {
        for mu in [1e-3_f64, 0.7, 5.0, 42.0] {
            let mut f = 1.0;
            for k in 0..60usize {
                if k > 0 {
                    f *= k as f64;
                }
                let direct = (-mu).exp() * mu.powi(k as i32) / f;
                assert!(
                    (poisson_pmf(k, mu) - direct).abs() <= 1e-12 * direct.max(1e-300),
                    "k={k} mu={mu} {} {direct}",
                    poisson_pmf(k, mu)
                );
            }
        }
    }

    #[test]
    fn monotone_on_grid() {
        let grid = [0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0];
        for order in 1..=5u32 {
            for &a in &grid {
                let mut prev = 1.0;
                for &b in &grid {
                    let q = marcum_q(order, a, b).unwrap();
                    assert!(q <= prev + 1e-14, "nonincreasing in b");
                    prev = q;
                    assert!(
                        marcum_q(order, a + 0.5, b).unwrap() >= q - 1e-14,
                        "nondecreasing in a {order} {a} {b} {q} {}",
                        marcum_q(order, a + 0.5, b).unwrap()
                    );
                    assert!(marcum_q(order + 1, a, b).unwrap() >= q - 1e-14, "nondecreasing in N");
                }
            }
        }
    }
}
