use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::params::{LinkGains, SystemParams};

/// Realized channel power gains of one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw {
    /// `||h_SR||^2` over all relay antennas (MRC gain).
    pub h_sr: f64,
    /// Strongest relay-destination element (transmit antenna selection).
    pub h_rd: f64,
    pub h_sd: f64,
}

/// Block-fading sampler with the per-link constants precomputed.
///
/// Source-relay elements are complex Gaussian with a real line-of-sight mean
/// `sqrt(K·Omega/(K+1))` and per-dimension variance `Omega/(2(K+1))`.
#[derive(Debug, Clone, Copy)]
pub struct ChannelSampler {
    antennas: u32,
    los: f64,
    sigma: f64,
    omega_rd: f64,
    omega_sd: f64,
}

impl ChannelSampler {
    pub fn new(p: &SystemParams, g: &LinkGains) -> Self {
        let k = p.k_factor;
        ChannelSampler {
            antennas: p.antennas,
            los: (k * g.omega_sr / (k + 1.0)).sqrt(),
            sigma: (g.omega_sr / (2.0 * (k + 1.0))).sqrt(),
            omega_rd: g.omega_rd,
            omega_sd: g.omega_sd,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelDraw {
        let mut h_sr = 0.0;
        for _ in 0..self.antennas {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let re = self.los + self.sigma * re;
            let im = self.sigma * im;
            h_sr += re * re + im * im;
        }
        let mut h_rd: f64 = 0.0;
        for _ in 0..self.antennas {
            let e: f64 = rng.sample(Exp1);
            h_rd = h_rd.max(e);
        }
        let h_sd: f64 = rng.sample(Exp1);
        ChannelDraw { h_sr, h_rd: self.omega_rd * h_rd, h_sd: self.omega_sd * h_sd }
    }
}

pub fn sample_channels<R: Rng + ?Sized>(p: &SystemParams, g: &LinkGains, rng: &mut R) -> ChannelDraw {
    ChannelSampler::new(p, g).sample(rng)
}
