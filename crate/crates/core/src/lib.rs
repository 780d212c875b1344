//! Outage analysis and simulation of a wireless-powered relay that
//! accumulates harvested energy in a finite battery and forwards only once it
//! holds enough charge.
//!
//! The analytical path is [`analyze`]: link gains, a discretized battery
//! Markov chain, its stationary distribution, and the per-mode outage mix.
//! [`sim`] runs the same protocol block by block for cross-checks.
//!
//! ```
//! use atf_core::{analyze, SystemParams};
//!
//! let p = SystemParams::paper_defaults();
//! let a = analyze(&p).unwrap();
//! assert!(a.report.p_out < a.report.p_direct);
//! ```

pub mod battery;
pub mod config;
mod error;
pub mod experiments;
pub mod fading;
pub mod outage;
pub mod params;
pub mod sim;

pub use battery::{
    build_transition_matrix, cooperation_probability, discretize_harvest, stationary_distribution, BatteryGrid,
    HarvestCdfTable, StationaryDistribution, TransitionMatrix,
};
pub use config::Config;
pub use error::{Error, Result};
pub use experiments::{compare_direct, optimal_et, sweep, Method, OptimalEt, SweepSpec, SweepVariable};
pub use outage::{analyze, atf_outage, direct_outage, Analysis, OutageReport};
pub use params::{dbm_to_watts, derive_link_gains, watts_to_dbm, LinkGains, SystemParams};
pub use sim::{run, run_replicated, BatteryModel, SimConfig, SimResult};
