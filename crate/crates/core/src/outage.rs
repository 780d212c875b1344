//! Closed-form outage probability of the accumulate-then-forward protocol and
//! of the direct-transmission baseline.

use crate::battery::{
    cooperation_probability, stationary_distribution, transition_matrix_from_table, BatteryGrid, HarvestCdfTable,
    StationaryDistribution, TransitionMatrix,
};
use crate::error::{clamp_probability, invalid, Result};
use crate::fading::{cdf_h_sd, sum_snr_cdf};
use crate::params::{derive_link_gains, LinkGains, SystemParams};

/// Total outage with its per-mode decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageReport {
    pub p_out: f64,
    /// Probability the battery holds at least `ε_T`.
    pub p_e: f64,
    /// Mode occupancies; they sum to one.
    pub p_mode_i: f64,
    pub p_mode_ii: f64,
    pub p_mode_iii: f64,
    /// Outage conditioned on each mode.
    pub phi_i: f64,
    pub phi_ii: f64,
    pub phi_iii: f64,
    pub p_direct: f64,
}

impl OutageReport {
    /// `Σ occupancy × conditional outage`.
    pub fn reassembled(&self) -> f64 {
        self.p_mode_i * self.phi_i + self.p_mode_ii * self.phi_ii + self.p_mode_iii * self.phi_iii
    }

    pub const CSV_HEADER: &'static str = "p_out,p_e,p_mode_i,p_mode_ii,p_mode_iii,phi_i,phi_ii,phi_iii,p_direct";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.p_out,
            self.p_e,
            self.p_mode_i,
            self.p_mode_ii,
            self.p_mode_iii,
            self.phi_i,
            self.phi_ii,
            self.phi_iii,
            self.p_direct
        )
    }
}

/// Mode I: the source alone over the full block, threshold `γ1`.
pub fn phi_i(p: &SystemParams, g: &LinkGains) -> Result<f64> {
    cdf_h_sd(g.omega_sd, p.thresholds().gamma1 * p.n0 / p.p_s)
}

/// Mode II: two MRC-combined copies from the source, threshold `γ0`.
pub fn phi_ii(p: &SystemParams, g: &LinkGains) -> Result<f64> {
    cdf_h_sd(g.omega_sd, p.thresholds().gamma0 * p.n0 / (2.0 * p.p_s))
}

/// Mode III: source plus relay at `P_R = 2 E_T` on the selected antenna.
pub fn phi_iii(p: &SystemParams, g: &LinkGains) -> Result<f64> {
    if p.e_t.is_nan() || p.e_t <= 0.0 {
        return Err(invalid("E_T must be > 0"));
    }
    let gbar_sd = p.p_s * g.omega_sd / p.n0;
    let gbar_rd = 2.0 * p.e_t * g.omega_rd / p.n0;
    sum_snr_cdf(p.thresholds().gamma0, gbar_sd, gbar_rd, p.antennas)
}

/// Same formula as Mode I: the baseline never involves the relay.
pub fn direct_outage(p: &SystemParams, g: &LinkGains) -> Result<f64> {
    phi_i(p, g)
}

/// Combines the chain's `P_E` with the per-mode outages. `decode_failure` is
/// `Pr{γ_SR < γ0}` from the same CDF that built the chain.
pub fn atf_outage(
    p: &SystemParams,
    g: &LinkGains,
    grid: &BatteryGrid,
    pi: &StationaryDistribution,
    decode_failure: f64,
) -> Result<OutageReport> {
    if pi.len() != grid.states() {
        return Err(invalid(format!("stationary distribution has {} states, grid has {}", pi.len(), grid.states())));
    }
    let p_e = cooperation_probability(pi, grid);
    let fail = clamp_probability(decode_failure, "Pr{γ_SR < γ0}")?;
    let phi_i = phi_i(p, g)?;
    let phi_ii = phi_ii(p, g)?;
    let phi_iii = phi_iii(p, g)?;
    let p_mode_i = 1.0 - p_e;
    let p_mode_ii = p_e * fail;
    let p_mode_iii = p_e * (1.0 - fail);
    let p_out = (1.0 - p_e) * phi_i + p_e * fail * phi_ii + p_e * (1.0 - fail) * phi_iii;
    Ok(OutageReport {
        p_out: clamp_probability(p_out, "P_out")?,
        p_e,
        p_mode_i,
        p_mode_ii,
        p_mode_iii,
        phi_i,
        phi_ii,
        phi_iii,
        p_direct: direct_outage(p, g)?,
    })
}

/// Everything the analytical pipeline produces for one parameter set.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub gains: LinkGains,
    pub grid: BatteryGrid,
    pub matrix: TransitionMatrix,
    pub stationary: StationaryDistribution,
    pub report: OutageReport,
}

/// Gains, grid, chain, stationary distribution and outage in one call.
pub fn analyze(p: &SystemParams) -> Result<Analysis> {
    let gains = derive_link_gains(p)?;
    let table = HarvestCdfTable::new(p, &gains)?;
    analyze_with_table(p, &gains, &table)
}

/// As [`analyze`], reusing a CDF table (valid for any `E_T` at fixed other
/// parameters).
pub fn analyze_with_table(p: &SystemParams, gains: &LinkGains, table: &HarvestCdfTable) -> Result<Analysis> {
    let grid = BatteryGrid::from_params(p)?;
    let matrix = transition_matrix_from_table(table, &grid)?;
    let stationary = stationary_distribution(&matrix)?;
    let report = atf_outage(p, gains, &grid, &stationary, table.decode_failure())?;
    Ok(Analysis { gains: *gains, grid, matrix, stationary, report })
}
