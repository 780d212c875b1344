//! Block-level Monte Carlo simulation of the protocol.
//!
//! Two battery models share one step function: a continuous battery that
//! banks the raw harvested energy and spends exactly `E_T`, and a discrete
//! battery on the `L + 1` level grid that rounds harvests down and spends
//! `ε_T`. The discrete model realizes the Markov chain exactly; the continuous
//! one is the `L → ∞` reference.
//!
//! Each block also records the outage probability conditioned on the block's
//! mode and relay-destination gain, integrating the exponential direct-link
//! gain in closed form. Its mean estimates the same outage with far less
//! variance than the 0/1 flags.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::battery::{discretize_harvest, BatteryGrid};
use crate::error::{invalid, Result};
use crate::fading::{ChannelDraw, ChannelSampler};
use crate::params::{LinkGains, SnrThresholds, SystemParams};

/// Blocks per batch for the batch-means standard error.
pub const BATCH_BLOCKS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Mode {
    /// Harvest only; the source transmits alone.
    I,
    /// Failed decode at the relay; the source repeats in the second slot.
    II,
    /// Decode-and-forward by the relay.
    III,
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::I => 0,
            Mode::II => 1,
            Mode::III => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatteryModel {
    Continuous,
    Discrete,
}

impl std::str::FromStr for BatteryModel {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(BatteryModel::Continuous),
            "discrete" => Ok(BatteryModel::Discrete),
            _ => Err(crate::Error::Config(format!("unknown battery model `{s}`"))),
        }
    }
}

/// Battery state carried between blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Battery {
    /// Energy in joules, within `[0, C]`.
    Continuous(f64),
    /// Level index in `0..=L`.
    Discrete(usize),
}

impl Battery {
    pub fn empty(model: BatteryModel) -> Self {
        match model {
            BatteryModel::Continuous => Battery::Continuous(0.0),
            BatteryModel::Discrete => Battery::Discrete(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub mode: Mode,
    pub battery: Battery,
    pub outage: bool,
    /// Outage probability given the mode and `H_RD`, over `H_SD`.
    pub conditional_outage: f64,
}

/// Protocol constants precomputed for fast stepping.
#[derive(Debug, Clone, Copy)]
pub struct Protocol {
    p_s: f64,
    n0: f64,
    eta: f64,
    capacity: f64,
    e_t: f64,
    omega_sd: f64,
    thresholds: SnrThresholds,
    grid: BatteryGrid,
}

impl Protocol {
    pub fn new(p: &SystemParams, g: &LinkGains, grid: &BatteryGrid) -> Result<Self> {
        p.validate()?;
        Ok(Protocol {
            p_s: p.p_s,
            n0: p.n0,
            eta: p.eta,
            capacity: p.capacity,
            e_t: p.e_t,
            omega_sd: g.omega_sd,
            thresholds: p.thresholds(),
            grid: *grid,
        })
    }

    pub fn grid(&self) -> &BatteryGrid {
        &self.grid
    }

    /// Advances one block.
    pub fn step(&self, battery: Battery, draw: &ChannelDraw) -> StepOutcome {
        let SnrThresholds { gamma0, gamma1 } = self.thresholds;
        let snr_sd = self.p_s * draw.h_sd / self.n0;
        let decoded = self.p_s * draw.h_sr / self.n0 >= gamma0;
        let can_forward = match battery {
            Battery::Continuous(e) => e >= self.e_t,
            Battery::Discrete(i) => i >= self.grid.transmit_index(),
        };

        let mode = match (can_forward, decoded) {
            (false, _) => Mode::I,
            (true, false) => Mode::II,
            (true, true) => Mode::III,
        };

        let harvest = match mode {
            Mode::I => self.eta * self.p_s * draw.h_sr,
            Mode::II => 0.5 * self.eta * self.p_s * draw.h_sr,
            Mode::III => 0.0,
        };
        let battery = match (battery, mode) {
            (Battery::Continuous(e), Mode::III) => Battery::Continuous((e - self.e_t).max(0.0)),
            (Battery::Continuous(e), _) => Battery::Continuous((e + harvest).min(self.capacity)),
            (Battery::Discrete(i), Mode::III) => Battery::Discrete(i - self.grid.transmit_index()),
            (Battery::Discrete(i), _) => {
                let gained = discretize_harvest(harvest, &self.grid);
                Battery::Discrete((i + gained).min(self.grid.levels()))
            }
        };

        // SNR still missing from the direct link, per mode
        let relay_snr = 2.0 * self.e_t * draw.h_rd / self.n0;
        let (outage, direct_needed) = match mode {
            Mode::I => (snr_sd < gamma1, gamma1),
            Mode::II => (2.0 * snr_sd < gamma0, 0.5 * gamma0),
            Mode::III => (snr_sd + relay_snr < gamma0, (gamma0 - relay_snr).max(0.0)),
        };
        let gbar_sd = self.p_s * self.omega_sd / self.n0;
        let conditional_outage = -(-direct_needed / gbar_sd).exp_m1();

        StepOutcome { mode, battery, outage, conditional_outage }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub blocks: u64,
    pub warmup: u64,
    pub seed: u64,
    /// Random-stream index within the seed; distinct streams are independent.
    pub stream: u64,
    pub battery_model: BatteryModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { blocks: 1_000_000, warmup: 10_000, seed: 1, stream: 0, battery_model: BatteryModel::Continuous }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blocks < 1 {
            return Err(invalid("blocks must be >= 1"));
        }
        if self.warmup >= self.blocks {
            return Err(invalid(format!("warmup ({}) must be smaller than blocks ({})", self.warmup, self.blocks)));
        }
        Ok(())
    }

    pub fn counted_blocks(&self) -> u64 {
        self.blocks - self.warmup
    }
}

/// One per-block trace record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub block: u64,
    pub mode: Mode,
    /// Energy at the start of the block, J.
    pub battery: f64,
    pub outage: bool,
}

/// Aggregated counts of a run. Merging is a sum of counts, so replications
/// combine in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub blocks: u64,
    pub outages: u64,
    pub mode_counts: [u64; 3],
    /// Start-of-block level occupancy, discrete model only.
    pub level_histogram: Option<Vec<u64>>,
    conditional_sum: f64,
    batches: u64,
    batch_sum: f64,
    batch_sum_sq: f64,
}

impl SimResult {
    fn empty(histogram_len: Option<usize>) -> Self {
        SimResult {
            blocks: 0,
            outages: 0,
            mode_counts: [0; 3],
            level_histogram: histogram_len.map(|n| vec![0; n]),
            conditional_sum: 0.0,
            batches: 0,
            batch_sum: 0.0,
            batch_sum_sq: 0.0,
        }
    }

    pub fn outage_rate(&self) -> f64 {
        if self.blocks == 0 {
            return 0.0;
        }
        self.outages as f64 / self.blocks as f64
    }

    /// Binomial `sqrt(p(1-p)/n)`; ignores the battery-induced correlation.
    pub fn standard_error(&self) -> f64 {
        if self.blocks == 0 {
            return 0.0;
        }
        let p = self.outage_rate();
        (p * (1.0 - p) / self.blocks as f64).sqrt()
    }

    /// Mean of the per-block conditional outage probabilities.
    pub fn conditional_outage(&self) -> f64 {
        if self.blocks == 0 {
            return 0.0;
        }
        self.conditional_sum / self.blocks as f64
    }

    /// Batch-means standard error of [`conditional_outage`](Self::conditional_outage);
    /// `None` with fewer than two full batches.
    pub fn conditional_standard_error(&self) -> Option<f64> {
        if self.batches < 2 {
            return None;
        }
        let k = self.batches as f64;
        let mean = self.batch_sum / k;
        let var = ((self.batch_sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
        Some((var / k).sqrt())
    }

    /// Fraction of counted blocks spent in each mode.
    pub fn mode_fractions(&self) -> [f64; 3] {
        let n = self.blocks.max(1) as f64;
        self.mode_counts.map(|c| c as f64 / n)
    }

    /// Normalized level histogram.
    pub fn level_distribution(&self) -> Option<Vec<f64>> {
        let n = self.blocks.max(1) as f64;
        self.level_histogram.as_ref().map(|h| h.iter().map(|&c| c as f64 / n).collect())
    }

    pub fn merge(mut self, other: &SimResult) -> SimResult {
        self.blocks += other.blocks;
        self.outages += other.outages;
        for (a, b) in self.mode_counts.iter_mut().zip(other.mode_counts) {
            *a += b;
        }
        self.level_histogram = match (self.level_histogram.take(), &other.level_histogram) {
            (Some(mut a), Some(b)) => {
                if a.len() < b.len() {
                    a.resize(b.len(), 0);
                }
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Some(a)
            }
            (a, None) => a,
            (None, Some(b)) => Some(b.clone()),
        };
        self.conditional_sum += other.conditional_sum;
        self.batches += other.batches;
        self.batch_sum += other.batch_sum;
        self.batch_sum_sq += other.batch_sum_sq;
        self
    }

    pub const CSV_HEADER: &'static str = "blocks,outages,outage_rate,standard_error,\
mode_i,mode_ii,mode_iii,conditional_outage,conditional_standard_error";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.blocks,
            self.outages,
            self.outage_rate(),
            self.standard_error(),
            self.mode_counts[0],
            self.mode_counts[1],
            self.mode_counts[2],
            self.conditional_outage(),
            self.conditional_standard_error().map(|v| v.to_string()).unwrap_or_default()
        )
    }
}

/// Runs one chain from an empty battery.
pub fn run(p: &SystemParams, g: &LinkGains, grid: &BatteryGrid, cfg: &SimConfig) -> Result<SimResult> {
    run_traced(p, g, grid, cfg, |_| {})
}

/// As [`run`], calling `trace` for every block, warm-up included.
pub fn run_traced<F: FnMut(&TraceRecord)>(
    p: &SystemParams,
    g: &LinkGains,
    grid: &BatteryGrid,
    cfg: &SimConfig,
    mut trace: F,
) -> Result<SimResult> {
    cfg.validate()?;
    let protocol = Protocol::new(p, g, grid)?;
    let sampler = ChannelSampler::new(p, g);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream);

    let histogram = match cfg.battery_model {
        BatteryModel::Discrete => Some(grid.states()),
        BatteryModel::Continuous => None,
    };
    let mut result = SimResult::empty(histogram);
    let mut battery = Battery::empty(cfg.battery_model);
    let mut batch_acc = 0.0;
    let mut batch_len = 0u64;

    for block in 0..cfg.blocks {
        let draw = sampler.sample(&mut rng);
        let before = battery;
        let out = protocol.step(battery, &draw);
        trace(&TraceRecord {
            block,
            mode: out.mode,
            battery: match before {
                Battery::Continuous(e) => e,
                Battery::Discrete(i) => grid.level(i),
            },
            outage: out.outage,
        });
        battery = out.battery;
        if block < cfg.warmup {
            continue;
        }
        result.blocks += 1;
        result.outages += out.outage as u64;
        result.mode_counts[out.mode.index()] += 1;
        if let (Some(h), Battery::Discrete(i)) = (result.level_histogram.as_mut(), before) {
            h[i] += 1;
        }
        result.conditional_sum += out.conditional_outage;
        batch_acc += out.conditional_outage;
        batch_len += 1;
        if batch_len == BATCH_BLOCKS {
            let m = batch_acc / BATCH_BLOCKS as f64;
            result.batches += 1;
            result.batch_sum += m;
            result.batch_sum_sq += m * m;
            batch_acc = 0.0;
            batch_len = 0;
        }
    }
    Ok(result)
}

/// Runs `replicas` independent chains, each on its own random stream and each
/// with its own warm-up, and merges them in replica order.
pub fn run_replicated(
    p: &SystemParams,
    g: &LinkGains,
    grid: &BatteryGrid,
    cfg: &SimConfig,
    replicas: u32,
) -> Result<SimResult> {
    if replicas < 1 {
        return Err(invalid("replicas must be >= 1"));
    }
    let parts: Vec<SimResult> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut c = *cfg;
            c.stream = cfg.stream.wrapping_mul(1 << 16).wrapping_add(r as u64);
            run(p, g, grid, &c)
        })
        .collect::<Result<_>>()?;
    let first = parts[0].clone();
    Ok(parts[1..].iter().fold(first, |acc, r| acc.merge(r)))
}
