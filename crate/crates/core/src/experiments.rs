//! Parameter sweeps, the exhaustive `E_T` search and the comparison against
//! direct transmission. Results are long-format CSV rows.

use std::cmp::Ordering;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::battery::{BatteryGrid, HarvestCdfTable};
use crate::error::{invalid, Error, Result};
use crate::outage::{analyze, analyze_with_table, direct_outage};
use crate::params::{dbm_to_watts, derive_link_gains, parse_power, watts_to_dbm, SystemParams};
use crate::sim::{run_replicated, BatteryModel, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    SourcePower,
    EnergyThreshold,
    Antennas,
    Levels,
}

impl SweepVariable {
    pub fn key(self) -> &'static str {
        match self {
            SweepVariable::SourcePower => "P_S",
            SweepVariable::EnergyThreshold => "E_T",
            SweepVariable::Antennas => "N",
            SweepVariable::Levels => "L",
        }
    }

    fn parse_value(self, token: &str) -> Result<f64> {
        match self {
            SweepVariable::SourcePower => parse_power(token),
            _ => token.trim().parse().map_err(|_| Error::Config(format!("cannot parse grid value `{token}`"))),
        }
    }

    pub fn apply(self, p: &mut SystemParams, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<u64> {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(invalid(format!("{} must be a positive integer, got {v}", self.key())));
            }
            Ok(v as u64)
        };
        match self {
            SweepVariable::SourcePower => p.p_s = value,
            SweepVariable::EnergyThreshold => p.e_t = value,
            SweepVariable::Antennas => {
                p.antennas = u32::try_from(as_count(value)?).map_err(|_| invalid("N too large"))?
            }
            SweepVariable::Levels => p.levels = as_count(value)? as usize,
        }
        Ok(())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P_S" => Ok(SweepVariable::SourcePower),
            "E_T" => Ok(SweepVariable::EnergyThreshold),
            "N" => Ok(SweepVariable::Antennas),
            "L" => Ok(SweepVariable::Levels),
            _ => Err(Error::Config(format!("cannot sweep `{s}`; use P_S, E_T, N or L"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    SimContinuous,
    SimDiscrete,
    Direct,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "analytic" => Ok(Method::Analytic),
            "sim-continuous" => Ok(Method::SimContinuous),
            "sim-discrete" => Ok(Method::SimDiscrete),
            "direct" => Ok(Method::Direct),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

pub fn parse_methods(text: &str) -> Result<Vec<Method>> {
    let methods = text.split(',').map(str::parse).collect::<Result<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    Ok(methods)
}

/// Parses `a,b,c` (values in the variable's config syntax) or
/// `start:stop:step`, where a trailing `dbm` puts all three in dBm / dB.
pub fn parse_grid(variable: SweepVariable, text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let grid = if text.contains(':') {
        let lower = text.to_ascii_lowercase();
        let (body, dbm) = match lower.strip_suffix("dbm") {
            Some(b) => (b.to_string(), true),
            None => (lower.clone(), false),
        };
        if dbm && variable != SweepVariable::SourcePower {
            return Err(Error::Config("dBm ranges only apply to P_S".into()));
        }
        let parts: Vec<f64> = body
            .split(':')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("bad range `{text}`")))?;
        let [start, stop, step] = parts[..] else {
            return Err(Error::Config(format!("range `{text}` needs start:stop:step")));
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(Error::Config(format!("range `{text}` is empty or has a non-positive step")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| {
                let v = start + k as f64 * step;
                if dbm {
                    dbm_to_watts(v)
                } else {
                    v
                }
            })
            .collect()
    } else {
        text.split(',').filter(|t| !t.trim().is_empty()).map(|t| variable.parse_value(t)).collect::<Result<Vec<_>>>()?
    };
    validate_grid(&grid)?;
    Ok(grid)
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("sweep grid is empty"));
    }
    if grid.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater)) {
        return Err(invalid("sweep grid must be strictly increasing"));
    }
    Ok(())
}

/// One baseline per point of the cartesian product of `series`, each axis a
/// config key with a comma-separated value list.
pub fn expand_series(baseline: &SystemParams, series: &[(String, String)]) -> Result<Vec<SystemParams>> {
    let mut out = vec![*baseline];
    for (key, values) in series {
        let mut next = Vec::new();
        for p in &out {
            for v in values.split(',').filter(|v| !v.trim().is_empty()) {
                let mut q = *p;
                q.set(key, v)?;
                next.push(q);
            }
        }
        out = next;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub baseline: SystemParams,
    /// Extra axes crossed with the baseline, e.g. `("N", "2,4,6")`.
    pub series: Vec<(String, String)>,
    pub methods: Vec<Method>,
    /// Block count, warm-up and seed for the simulated methods.
    pub sim: SimConfig,
    pub replicas: u32,
    /// Fill the wall-time column. Off keeps the CSV byte-reproducible.
    pub timing: bool,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, grid: Vec<f64>, baseline: SystemParams) -> Self {
        SweepSpec {
            variable,
            grid,
            baseline,
            series: Vec::new(),
            methods: vec![Method::Analytic, Method::Direct],
            sim: SimConfig::default(),
            replicas: 1,
            timing: false,
        }
    }
}

/// One long-format output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variable: &'static str,
    pub value: f64,
    #[serde(rename = "N")]
    pub antennas: u32,
    #[serde(rename = "L")]
    pub levels: usize,
    #[serde(rename = "P_S_dBm")]
    pub p_s_dbm: f64,
    #[serde(rename = "E_T")]
    pub e_t: f64,
    pub method: Method,
    pub outage: Option<f64>,
    pub standard_error: Option<f64>,
    pub conditional_outage: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub error: Option<String>,
}

pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    validate_grid(&spec.grid)?;
    if spec.methods.is_empty() {
        return Err(invalid("no methods requested"));
    }
    spec.sim.validate()?;
    let baselines = expand_series(&spec.baseline, &spec.series)?;
    let points: Vec<(usize, SystemParams, f64)> = baselines
        .iter()
        .flat_map(|b| spec.grid.iter().map(move |&v| (*b, v)))
        .enumerate()
        .map(|(i, (b, v))| (i, b, v))
        .collect();

    let rows: Vec<Vec<SweepRow>> =
        points.par_iter().map(|(index, base, value)| sweep_point(spec, *index as u64, base, *value)).collect();
    Ok(rows.into_iter().flatten().collect())
}

fn sweep_point(spec: &SweepSpec, index: u64, base: &SystemParams, value: f64) -> Vec<SweepRow> {
    let mut p = *base;
    let applied = spec.variable.apply(&mut p, value).and_then(|_| p.validate());
    let template = SweepRow {
        variable: spec.variable.key(),
        value,
        antennas: p.antennas,
        levels: p.levels,
        p_s_dbm: watts_to_dbm(p.p_s),
        e_t: p.e_t,
        method: Method::Analytic,
        outage: None,
        standard_error: None,
        conditional_outage: None,
        wall_time_s: None,
        error: None,
    };
    spec.methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = applied.clone().and_then(|_| evaluate(spec, index, &p, method));
            let mut row = SweepRow { method, ..template.clone() };
            match outcome {
                Ok((outage, se, cond)) => {
                    row.outage = Some(outage);
                    row.standard_error = se;
                    row.conditional_outage = cond;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            if spec.timing {
                row.wall_time_s = Some(start.elapsed().as_secs_f64());
            }
            row
        })
        .collect()
}

type Estimate = (f64, Option<f64>, Option<f64>);

fn evaluate(spec: &SweepSpec, index: u64, p: &SystemParams, method: Method) -> Result<Estimate> {
    match method {
        Method::Analytic => Ok((analyze(p)?.report.p_out, None, None)),
        Method::Direct => Ok((direct_outage(p, &derive_link_gains(p)?)?, None, None)),
        Method::SimContinuous | Method::SimDiscrete => {
            let g = derive_link_gains(p)?;
            let grid = BatteryGrid::from_params(p)?;
            let (battery_model, lane) = match method {
                Method::SimContinuous => (BatteryModel::Continuous, 0),
                _ => (BatteryModel::Discrete, 1),
            };
            let cfg = SimConfig { battery_model, stream: 2 * index + lane, ..spec.sim };
            let r = run_replicated(p, &g, &grid, &cfg, spec.replicas)?;
            Ok((r.outage_rate(), Some(r.standard_error()), Some(r.conditional_outage())))
        }
    }
}

pub fn write_csv<S: Serialize, W: Write>(rows: &[S], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("CSV write failed: {e}")))?;
    }
    w.flush().map_err(|e| Error::Config(format!("CSV write failed: {e}")))?;
    Ok(())
}

/// Minimizer of the analytical outage over `E_T ∈ {ε_1, …, ε_L}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalEt {
    pub index: usize,
    pub e_t: f64,
    pub outage: f64,
    /// `(E_T, outage)` for every candidate whose chain could be solved.
    pub curve: Vec<(f64, f64)>,
    /// Candidates dropped because their stationary system was singular.
    pub skipped: usize,
}

/// Exhaustive search over the battery levels; ties go to the smaller `E_T`.
pub fn optimal_et(p: &SystemParams) -> Result<OptimalEt> {
    p.validate()?;
    let g = derive_link_gains(p)?;
    let table = HarvestCdfTable::new(p, &g)?;
    let grid = BatteryGrid::from_params(p)?;
    let mut best: Option<(usize, f64, f64)> = None;
    let mut curve = Vec::with_capacity(p.levels);
    let mut skipped = 0;
    let mut first_error = None;
    for k in 1..=p.levels {
        let mut q = *p;
        q.e_t = grid.level(k);
        match analyze_with_table(&q, &g, &table) {
            Ok(a) => {
                let v = a.report.p_out;
                curve.push((q.e_t, v));
                if best.map_or(true, |(_, _, b)| v < b) {
                    best = Some((k, q.e_t, v));
                }
            }
            Err(Error::SingularSystem(msg)) => {
                skipped += 1;
                first_error.get_or_insert(Error::SingularSystem(msg));
            }
            Err(e) => return Err(e),
        }
    }
    match best {
        Some((index, e_t, outage)) => Ok(OptimalEt { index, e_t, outage, curve, skipped }),
        None => Err(first_error.unwrap_or_else(|| invalid("no E_T candidates"))),
    }
}

/// Direct transmission against the protocol at its optimal `E_T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    #[serde(rename = "P_S_dBm")]
    pub p_s_dbm: f64,
    #[serde(rename = "N")]
    pub antennas: u32,
    #[serde(rename = "L")]
    pub levels: usize,
    pub direct: Option<f64>,
    pub atf_optimal: Option<f64>,
    #[serde(rename = "E_T_opt")]
    pub e_t_opt: Option<f64>,
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

pub fn compare_direct(p: &SystemParams, p_s_grid: &[f64]) -> Result<Vec<CompareRow>> {
    validate_grid(p_s_grid)?;
    Ok(p_s_grid
        .par_iter()
        .map(|&p_s| {
            let mut q = *p;
            q.p_s = p_s;
            let mut row = CompareRow {
                p_s_dbm: watts_to_dbm(p_s),
                antennas: q.antennas,
                levels: q.levels,
                direct: None,
                atf_optimal: None,
                e_t_opt: None,
                ratio: None,
                error: None,
            };
            let result =
                derive_link_gains(&q).and_then(|g| direct_outage(&q, &g)).and_then(|d| optimal_et(&q).map(|o| (d, o)));
            match result {
                Ok((direct, opt)) => {
                    row.direct = Some(direct);
                    row.atf_optimal = Some(opt.outage);
                    row.e_t_opt = Some(opt.e_t);
                    row.ratio = Some(opt.outage / direct);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect())
}
