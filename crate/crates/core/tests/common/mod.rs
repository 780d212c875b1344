//! Independent reference computations for the integration tests. Nothing here
//! calls into the library's own special functions or samplers.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Poisson};

/// `ln Γ(n + 1)` for integer `n`.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `ln I_ν(z)` from the power series, summed in log space.
pub fn ln_bessel_i(nu: u32, z: f64) -> f64 {
    if z == 0.0 {
        return if nu == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let half = (0.5 * z).ln();
    let mut ln_t = nu as f64 * half - ln_factorial(nu as u64);
    let mut terms = vec![ln_t];
    let mut peak = ln_t;
    let mut k = 0u64;
    loop {
        ln_t += 2.0 * half - ((k + 1) as f64).ln() - ((k + 1 + nu as u64) as f64).ln();
        k += 1;
        terms.push(ln_t);
        peak = peak.max(ln_t);
        if ln_t < peak - 45.0 {
            break;
        }
    }
    peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln()
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `Q_N(a, b)` by integrating the non-central chi density from `b` upwards.
pub fn marcum_q_quadrature(n: u32, a: f64, b: f64) -> f64 {
    let nf = n as f64;
    let ln_density = |x: f64| -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if a == 0.0 {
            (2.0 * nf - 1.0) * x.ln() - 0.5 * x * x - (nf - 1.0) * 2f64.ln() - ln_factorial(n as u64 - 1)
        } else {
            nf * x.ln() - (nf - 1.0) * a.ln() - 0.5 * (x * x + a * a) + ln_bessel_i(n - 1, a * x)
        }
    };
    let f = |x: f64| ln_density(x).exp();
    let upper = a.max(b) + 2.0 * nf.sqrt() + 16.0;
    let pieces = ((upper - b).ceil() as usize).max(1);
    let width = (upper - b) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = b + i as f64 * width;
            adaptive_simpson(&f, lo, lo + width, 1e-14)
        })
        .sum()
}

/// Sum of `N` Rician power gains via the Poisson mixture of central
/// chi-squares: `Ω/(2(K+1)) · χ²_{2N + 2P}`, `P ~ Poisson(N K)`.
pub fn sample_rician_sum<R: Rng>(rng: &mut R, n: u32, k: f64, omega: f64) -> f64 {
    let extra = if k > 0.0 { Poisson::new(n as f64 * k).unwrap().sample(rng) as u64 } else { 0 };
    let dof = 2 * (n as u64 + extra);
    omega / (2.0 * (k + 1.0)) * ChiSquared::new(dof as f64).unwrap().sample(rng)
}

/// Largest of `n` unit exponentials by inversion of `(1 - e^{-x})^n`.
pub fn sample_max_exponential<R: Rng>(rng: &mut R, n: u32) -> f64 {
    let u: f64 = rng.gen();
    -(-u.powf(1.0 / n as f64)).ln_1p()
}

pub fn sample_exponential<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    -(-u).ln_1p()
}

/// `Pr{X + Y < γ}` for independent exponentials with means `a != b`.
pub fn two_exponential_cdf(gamma: f64, a: f64, b: f64) -> f64 {
    1.0 - (a * (-gamma / a).exp() - b * (-gamma / b).exp()) / (a - b)
}

/// Kolmogorov-Smirnov distance of a sorted sample from `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic one-sample KS critical value at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}
