use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use atf_core::experiments::{parse_grid, parse_methods, write_csv};
use atf_core::sim::run_traced;
use atf_core::{
    analyze, compare_direct, derive_link_gains, optimal_et, run_replicated, sweep, watts_to_dbm, BatteryGrid,
    BatteryModel, Config, OutageReport, SimConfig, SimResult, SweepSpec, SweepVariable, SystemParams,
};

#[derive(Parser, Debug)]
#[command(name = "atf", version, about = "Outage of an energy-accumulating wireless-powered relay")]
struct Cli {
    /// `key = value` file; system keys plus experiment presets.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set P_S=20dbm`. Repeatable, applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Base seed; each run derives its own stream from it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Total simulated blocks per run, warm-up included.
    #[arg(long, global = true)]
    blocks: Option<u64>,
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form outage with its per-mode breakdown.
    Analytic {
        /// Also write the battery transition matrix as CSV
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        /// Also write the stationary battery distribution as CSV
        #[arg(long)]
        dump_pi: Option<PathBuf>,
    },
    /// Monte Carlo estimate.
    Simulate {
        /// `continuous` or `discrete` (quantized to the L levels)
        #[arg(long)]
        battery: Option<BatteryModel>,
        /// Leading blocks discarded from the estimate
        #[arg(long)]
        warmup: Option<u64>,
        /// Independent runs pooled into one estimate
        #[arg(long)]
        replicas: Option<u32>,
        /// Per-block trace of the first replica.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Outage over a grid of one parameter.
    Sweep {
        /// P_S, E_T, N or L.
        #[arg(long)]
        var: Option<String>,
        /// `a,b,c` or `start:stop:step`, with a `dbm` suffix for P_S in dBm.
        #[arg(long)]
        grid: Option<String>,
        /// Comma list of analytic, sim-continuous, sim-discrete, direct.
        #[arg(long)]
        methods: Option<String>,
        /// Extra axis, e.g. `--series N=2,4,6`. Repeatable.
        #[arg(long, value_name = "KEY=LIST")]
        series: Vec<String>,
        /// Leading blocks discarded from the estimate
        #[arg(long)]
        warmup: Option<u64>,
        /// Independent runs pooled into one estimate
        #[arg(long)]
        replicas: Option<u32>,
        /// Record wall time per row.
        #[arg(long)]
        timing: bool,
    },
    /// Best `E_T` over the battery levels.
    OptimalEt {
        /// Print the whole outage curve instead of the minimizer.
        #[arg(long)]
        curve: bool,
    },
    /// Direct transmission against the protocol at its optimal `E_T`.
    Compare {
        /// P_S grid, same syntax as `sweep --grid`.
        #[arg(long)]
        grid: Option<String>,
        /// Extra axis, e.g. `--series N=2,4,6`. Repeatable
        #[arg(long, value_name = "KEY=LIST")]
        series: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn experiment<T: std::str::FromStr>(cfg: &Config, key: &str) -> Result<Option<T>> {
    cfg.experiment_value(key)
        .map(|v| v.trim().parse::<T>().map_err(|_| anyhow::anyhow!("bad value for `{key}`: {v}")))
        .transpose()
}

fn sim_config(cli: &Cli, cfg: &Config, warmup: Option<u64>, battery: Option<BatteryModel>) -> Result<SimConfig> {
    let d = SimConfig::default();
    let blocks = cli.blocks.or(experiment(cfg, "blocks")?).unwrap_or(d.blocks);
    let warmup = warmup.or(experiment(cfg, "warmup")?).unwrap_or(d.warmup.min(blocks.saturating_sub(1)));
    let battery_model = match battery {
        Some(b) => b,
        None => experiment::<String>(cfg, "battery")?.map(|s| s.parse()).transpose()?.unwrap_or(d.battery_model),
    };
    Ok(SimConfig {
        blocks,
        warmup,
        seed: cli.seed.or(experiment(cfg, "seed")?).unwrap_or(d.seed),
        stream: 0,
        battery_model,
    })
}

fn series(cfg: &Config, extra: &[String]) -> Result<Vec<(String, String)>> {
    let mut s = cfg.series();
    for item in extra {
        let Some((k, v)) = item.split_once('=') else {
            bail!("series `{item}` is not KEY=LIST");
        };
        let k = k.trim().to_string();
        s.retain(|(key, _)| *key != k);
        s.push((k, v.trim().to_string()));
    }
    Ok(s)
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    let p = cfg.params;
    p.validate()?;

    match &cli.command {
        Command::Analytic { dump_matrix, dump_pi } => {
            let a = analyze(&p)?;
            if let Some(path) = dump_matrix {
                a.matrix
                    .write_csv(BufWriter::new(File::create(path)?))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = dump_pi {
                a.stationary
                    .write_csv(BufWriter::new(File::create(path)?))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let mut w = output(&cli.out)?;
            writeln!(w, "P_S_dBm,N,L,E_T,{}", OutageReport::CSV_HEADER)?;
            writeln!(w, "{},{},{},{},{}", watts_to_dbm(p.p_s), p.antennas, p.levels, p.e_t, a.report.csv_row())?;
            w.flush()?;
        }
        Command::Simulate { battery, warmup, replicas, trace } => {
            let sim = sim_config(&cli, &cfg, *warmup, *battery)?;
            let replicas = replicas.or(experiment(&cfg, "replicas")?).unwrap_or(1);
            let g = derive_link_gains(&p)?;
            let grid = BatteryGrid::from_params(&p)?;
            let result = match trace {
                Some(path) => traced(&p, &grid, &sim, replicas, path)?,
                None => run_replicated(&p, &g, &grid, &sim, replicas)?,
            };
            let mut w = output(&cli.out)?;
            writeln!(w, "{}", SimResult::CSV_HEADER)?;
            writeln!(w, "{}", result.csv_row())?;
            w.flush()?;
        }
        Command::Sweep { var, grid, methods, series: extra, warmup, replicas, timing } => {
            let var = var
                .clone()
                .or_else(|| cfg.experiment_value("var").map(String::from))
                .context("sweep needs --var or `var` in the config")?;
            let variable: SweepVariable = var.parse()?;
            let grid_text = grid
                .clone()
                .or_else(|| cfg.experiment_value("grid").map(String::from))
                .context("sweep needs --grid or `grid` in the config")?;
            let methods = methods
                .clone()
                .or_else(|| cfg.experiment_value("methods").map(String::from))
                .unwrap_or_else(|| "analytic,direct".into());
            let spec = SweepSpec {
                variable,
                grid: parse_grid(variable, &grid_text)?,
                baseline: p,
                series: series(&cfg, extra)?,
                methods: parse_methods(&methods)?,
                sim: sim_config(&cli, &cfg, *warmup, None)?,
                replicas: replicas.or(experiment(&cfg, "replicas")?).unwrap_or(1),
                timing: *timing,
            };
            let rows = sweep(&spec)?;
            write_csv(&rows, output(&cli.out)?)?;
        }
        Command::OptimalEt { curve } => {
            let o = optimal_et(&p)?;
            let mut w = output(&cli.out)?;
            if *curve {
                writeln!(w, "E_T,outage")?;
                for (e, v) in &o.curve {
                    writeln!(w, "{e},{v}")?;
                }
            } else {
                writeln!(w, "P_S_dBm,N,L,index,E_T,outage,skipped")?;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    watts_to_dbm(p.p_s),
                    p.antennas,
                    p.levels,
                    o.index,
                    o.e_t,
                    o.outage,
                    o.skipped
                )?;
            }
            w.flush()?;
        }
        Command::Compare { grid, series: extra } => {
            let grid_text = grid
                .clone()
                .or_else(|| cfg.experiment_value("grid").map(String::from))
                .unwrap_or_else(|| "10:36:2dbm".into());
            let ps = parse_grid(SweepVariable::SourcePower, &grid_text)?;
            let mut rows = Vec::new();
            for base in atf_core::experiments::expand_series(&p, &series(&cfg, extra)?)? {
                rows.extend(compare_direct(&base, &ps)?);
            }
            write_csv(&rows, output(&cli.out)?)?;
        }
    }
    Ok(())
}

fn traced(p: &SystemParams, grid: &BatteryGrid, sim: &SimConfig, replicas: u32, path: &PathBuf) -> Result<SimResult> {
    let g = derive_link_gains(p)?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ));
    // replica 0's stream, so the trace belongs to the reported run
    let mut first_cfg = *sim;
    first_cfg.stream = sim.stream.wrapping_mul(1 << 16);
    let mut failure = None;
    let first = run_traced(p, &g, grid, &first_cfg, |rec| {
        if failure.is_none() {
            if let Err(e) = writer.serialize(rec) {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = failure {
        bail!("writing trace: {e}");
    }
    writer.flush()?;
    if replicas <= 1 {
        Ok(first)
    } else {
        Ok(run_replicated(p, &g, grid, sim, replicas)?)
    }
}
