//! System configuration, unit conversions and derived link constants.
//!
//! Everything is stored in SI units with a unit-length transmission block, so
//! an energy in joules and a power in watts are numerically interchangeable.
//! dBm only appears at the config boundary.

use std::fmt;

use crate::battery::LEVEL_MATCH_RTOL;
use crate::error::{invalid, Error, Result};

/// Physical and protocol constants of the source / relay / destination link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Source transmit power, W.
    pub p_s: f64,
    /// Noise power, W.
    pub n0: f64,
    /// Energy conversion efficiency in (0, 1].
    pub eta: f64,
    /// Transmit rate, bit/s/Hz.
    pub rate: f64,
    /// Relay antenna count.
    pub antennas: u32,
    /// Rician K-factor of the source-relay elements.
    pub k_factor: f64,
    pub d_sd: f64,
    pub d_sr: f64,
    pub d_rd: f64,
    /// Path-loss exponent in [2, 5].
    pub alpha: f64,
    /// Battery capacity, J.
    pub capacity: f64,
    /// Number of battery quantization steps; the chain has `levels + 1` states.
    pub levels: usize,
    /// Energy threshold for cooperation, J. Also the energy spent per forward.
    pub e_t: f64,
}

/// Keys accepted by [`SystemParams::set`], in display order.
pub const PARAM_KEYS: [&str; 13] =
    ["P_S", "N0", "eta", "R", "N", "K", "d_SD", "d_SR", "d_RD", "alpha", "C", "L", "E_T"];

impl Default for SystemParams {
    fn default() -> Self {
        Self::paper_defaults()
    }
}

impl SystemParams {
    /// The evaluation setup: 50/5/45 m geometry, alpha = 3, K = 10,
    /// N0 = -60 dBm, eta = 0.5, R = 1, C = 5 mJ, E_T = 0.1 mJ, with
    /// N = 2, L = 100 and P_S = 30 dBm as the operating point.
    pub fn paper_defaults() -> Self {
        SystemParams {
            p_s: dbm_to_watts(30.0),
            n0: dbm_to_watts(-60.0),
            eta: 0.5,
            rate: 1.0,
            antennas: 2,
            k_factor: 10.0,
            d_sd: 50.0,
            d_sr: 5.0,
            d_rd: 45.0,
            alpha: 3.0,
            capacity: 5e-3,
            levels: 100,
            e_t: 1e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("P_S", self.p_s),
            ("N0", self.n0),
            ("C", self.capacity),
            ("E_T", self.e_t),
            ("d_SD", self.d_sd),
            ("d_SR", self.d_sr),
            ("d_RD", self.d_rd),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid(format!("eta must lie in (0,1], got {}", self.eta)));
        }
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return Err(invalid(format!("R must be finite and >= 0, got {}", self.rate)));
        }
        if !(self.k_factor.is_finite() && self.k_factor >= 0.0) {
            return Err(invalid(format!("K must be finite and >= 0, got {}", self.k_factor)));
        }
        if !(2.0..=5.0).contains(&self.alpha) {
            return Err(invalid(format!("alpha must lie in [2,5], got {}", self.alpha)));
        }
        if self.antennas < 1 {
            return Err(invalid("N must be >= 1"));
        }
        if self.levels < 1 {
            return Err(invalid("L must be >= 1"));
        }
        // E_T = L·C/L may land an ulp above C
        if self.e_t > self.capacity * (1.0 + LEVEL_MATCH_RTOL) {
            return Err(invalid(format!("E_T = {} exceeds battery capacity C = {}", self.e_t, self.capacity)));
        }
        Ok(())
    }

    /// Sets one field from its config key. Powers take an optional `dbm` or
    /// `w` suffix (watts when bare).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "P_S" => self.p_s = parse_power(value)?,
            "N0" => self.n0 = parse_power(value)?,
            "eta" => self.eta = parse_f64(key, value)?,
            "R" => self.rate = parse_f64(key, value)?,
            "N" => self.antennas = parse_uint(key, value)?,
            "K" => self.k_factor = parse_f64(key, value)?,
            "d_SD" => self.d_sd = parse_f64(key, value)?,
            "d_SR" => self.d_sr = parse_f64(key, value)?,
            "d_RD" => self.d_rd = parse_f64(key, value)?,
            "alpha" => self.alpha = parse_f64(key, value)?,
            "C" => self.capacity = parse_f64(key, value)?,
            "L" => self.levels = parse_uint(key, value)?,
            "E_T" => self.e_t = parse_f64(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Reads a field back by its config key, in SI units.
    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "P_S" => self.p_s,
            "N0" => self.n0,
            "eta" => self.eta,
            "R" => self.rate,
            "N" => self.antennas as f64,
            "K" => self.k_factor,
            "d_SD" => self.d_sd,
            "d_SR" => self.d_sr,
            "d_RD" => self.d_rd,
            "alpha" => self.alpha,
            "C" => self.capacity,
            "L" => self.levels as f64,
            "E_T" => self.e_t,
            _ => return None,
        })
    }

    pub fn thresholds(&self) -> SnrThresholds {
        snr_thresholds(self.rate)
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "P_S = {}dbm", watts_to_dbm(self.p_s))?;
        writeln!(f, "N0 = {}dbm", watts_to_dbm(self.n0))?;
        for key in PARAM_KEYS.iter().skip(2) {
            let v = self.get(key).unwrap_or(f64::NAN);
            writeln!(f, "{key} = {v}")?;
        }
        Ok(())
    }
}

/// Mean per-element channel power gains of the three links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGains {
    pub omega_sd: f64,
    pub omega_sr: f64,
    pub omega_rd: f64,
}

/// `(1 + d^alpha)^-1`. Accepts `d = 0` (unit gain).
pub fn path_gain(distance: f64, alpha: f64) -> Result<f64> {
    if !(distance.is_finite() && distance >= 0.0) {
        return Err(invalid(format!("distance must be finite and >= 0, got {distance}")));
    }
    if !(2.0..=5.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [2,5], got {alpha}")));
    }
    Ok(1.0 / (1.0 + distance.powf(alpha)))
}

pub fn derive_link_gains(p: &SystemParams) -> Result<LinkGains> {
    p.validate()?;
    Ok(LinkGains {
        omega_sd: path_gain(p.d_sd, p.alpha)?,
        omega_sr: path_gain(p.d_sr, p.alpha)?,
        omega_rd: path_gain(p.d_rd, p.alpha)?,
    })
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Decoding thresholds: `gamma0` for the half-block (cooperative) links,
/// `gamma1` for a full-block direct transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrThresholds {
    pub gamma0: f64,
    pub gamma1: f64,
}

pub fn snr_thresholds(rate: f64) -> SnrThresholds {
    SnrThresholds { gamma0: (2.0 * rate).exp2() - 1.0, gamma1: rate.exp2() - 1.0 }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}` as a number")))
}

fn parse_uint<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse::<T>().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}` as an integer")))
}

/// Parses `30dbm`, `-60 dBm`, `1w`, `1e-3 W` or a bare number of watts.
pub fn parse_power(value: &str) -> Result<f64> {
    let v = value.trim();
    let lower = v.to_ascii_lowercase();
    let (number, dbm) = if let Some(n) = lower.strip_suffix("dbm") {
        (n, true)
    } else if let Some(n) = lower.strip_suffix('w') {
        (n, false)
    } else {
        (lower.as_str(), false)
    };
    let x: f64 = number.trim().parse().map_err(|_| Error::Config(format!("cannot parse power `{value}`")))?;
    Ok(if dbm { dbm_to_watts(x) } else { x })
}
