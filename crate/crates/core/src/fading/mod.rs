//! Channel statistics for the three links: CDFs of the power gains, the
//! closed-form CDF of the cooperative sum SNR, and samplers.

mod marcum;
mod sampling;

pub use marcum::{marcum_q, marcum_q_pair};
pub use sampling::{sample_channels, ChannelDraw, ChannelSampler};

use crate::error::{clamp_probability, invalid, Result};

/// `H_SR = sum_i |h_i|^2` over `antennas` i.i.d. Rician elements of mean
/// power `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianSumSpec {
    antennas: u32,
    k_factor: f64,
    omega: f64,
}

impl RicianSumSpec {
    pub fn new(antennas: u32, k_factor: f64, omega: f64) -> Result<Self> {
        if antennas < 1 {
            return Err(invalid("antenna count must be >= 1"));
        }
        if !(k_factor.is_finite() && k_factor >= 0.0) {
            return Err(invalid(format!("K must be finite and >= 0, got {k_factor}")));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(invalid(format!("Omega must be finite and > 0, got {omega}")));
        }
        Ok(RicianSumSpec { antennas, k_factor, omega })
    }

    pub fn antennas(&self) -> u32 {
        self.antennas
    }

    pub fn k_factor(&self) -> f64 {
        self.k_factor
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `E[H_SR] = N·Omega`.
    pub fn mean(&self) -> f64 {
        self.antennas as f64 * self.omega
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        cdf_h_sr(self, x)
    }
}

/// `F(x) = 1 - Q_N(sqrt(2NK), sqrt(2(K+1)x/Omega))`.
pub fn cdf_h_sr(spec: &RicianSumSpec, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(invalid(format!("H_SR CDF argument must be >= 0, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let lambda = spec.antennas as f64 * spec.k_factor;
    let y = (spec.k_factor + 1.0) * x / spec.omega;
    if !y.is_finite() {
        return Ok(1.0);
    }
    let (_, lower) = marcum::poisson_mixture(spec.antennas, lambda, y);
    clamp_probability(lower, "H_SR CDF")
}

/// Exponential CDF of the direct-link gain.
pub fn cdf_h_sd(omega_sd: f64, y: f64) -> Result<f64> {
    if !(omega_sd.is_finite() && omega_sd > 0.0) {
        return Err(invalid(format!("Omega_SD must be > 0, got {omega_sd}")));
    }
    if y.is_nan() || y < 0.0 {
        return Err(invalid(format!("H_SD CDF argument must be >= 0, got {y}")));
    }
    Ok(-(-y / omega_sd).exp_m1())
}

/// CDF of the strongest of `antennas` i.i.d. exponential gains.
pub fn cdf_h_rd_max(antennas: u32, omega_rd: f64, x: f64) -> Result<f64> {
    if antennas < 1 {
        return Err(invalid("antenna count must be >= 1"));
    }
    if !(omega_rd.is_finite() && omega_rd > 0.0) {
        return Err(invalid(format!("Omega_RD must be > 0, got {omega_rd}")));
    }
    if x.is_nan() || x < 0.0 {
        return Err(invalid(format!("H_RD CDF argument must be >= 0, got {x}")));
    }
    Ok((-(-x / omega_rd).exp_m1()).powi(antennas as i32))
}

/// Relative gap below which a term of [`sum_snr_cdf`] is treated as sitting on
/// its removable singularity.
const DEGENERATE_GAP: f64 = 1e-9;

/// `Pr{gamma_SD + gamma_RD < gamma}` where `gamma_SD` is exponential with mean
/// `gbar_sd` and `gamma_RD` is the largest of `antennas` i.i.d. exponentials
/// with mean `gbar_rd`.
///
/// Expanding the density of the maximum gives
///
/// ```text
/// N sum_{k=0}^{N-1} C(N-1,k) (-1)^k [h(a) - h(b/(k+1))] / ((k+1)a - b),
/// h(x) = x (1 - e^{-gamma/x}),  a = gbar_sd,  b = gbar_rd.
/// ```
///
/// When `(k+1)a ≈ b` the bracket and the denominator vanish together and the
/// term is replaced by `h'` at the midpoint, divided by `k+1`.
pub fn sum_snr_cdf(gamma: f64, gbar_sd: f64, gbar_rd: f64, antennas: u32) -> Result<f64> {
    if antennas < 1 {
        return Err(invalid("antenna count must be >= 1"));
    }
    if gamma.is_nan() || gamma < 0.0 {
        return Err(invalid(format!("SNR threshold must be >= 0, got {gamma}")));
    }
    for (name, v) in [("gbar_SD", gbar_sd), ("gbar_RD", gbar_rd)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
        }
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    if gamma == f64::INFINITY {
        return Ok(1.0);
    }

    let h = |x: f64| -x * (-gamma / x).exp_m1();
    let h_prime = |x: f64| {
        let r = gamma / x;
        -(-r).exp_m1() - r * (-r).exp()
    };

    let n = antennas as usize;
    let a = gbar_sd;
    let ha = h(a);
    let mut binom = 1.0; // C(N-1, k)
    let mut total = 0.0;
    for k in 0..n {
        let m = (k + 1) as f64;
        let c = gbar_rd / m;
        let denom = m * a - gbar_rd;
        let ratio = if denom.abs() < DEGENERATE_GAP * (m * a).max(gbar_rd) {
            h_prime(0.5 * (a + c)) / m
        } else {
            (ha - h(c)) / denom
        };
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * ratio;
        binom = binom * (n - 1 - k) as f64 / (k + 1) as f64;
    }
    clamp_probability(n as f64 * total, "sum-SNR CDF")
}
