//! Command-line front end for `aoi-harq`: `evaluate`, `simulate`, `optimize`
//! and `sweep`, with JSON configs, CSV/JSON outputs and run manifests.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration, 3 numeric
//! failure, 4 runaway simulation cycle, 5 exhaustive search too wide.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod manifest;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{
    parse_delays, parse_grid_f64, parse_grid_u64, parse_grid_usize, parse_list, CaseKind,
    CaseParams, ChannelParams, Method, Params, Preset, ProtocolChoice, RatelessParams,
    SearchParams, SimParams, SweepParams, SweepTask,
};
use error::{CliError, CliResult};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "AOI_HARQ_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "aoi-harq",
    version,
    about = "Age of Information of reactive and proactive HARQ"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form average and peak AoI.
    Evaluate(EvaluateArgs),
    /// Monte Carlo simulation checked against the closed form.
    Simulate(SimulateArgs),
    /// Age-optimal block assignment.
    Optimize(OptimizeArgs),
    /// Grid sweeps and figure presets.
    Sweep(SweepArgs),
}

#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// JSON config or run manifest; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolChoice>,
}

#[derive(Debug, Default, Args)]
pub struct BundleArgs {
    /// Cumulative block lengths, e.g. 100,110,120.
    #[arg(long)]
    pub n: Option<String>,
    /// Error probabilities per round; derived from the channel when absent.
    #[arg(long)]
    pub eps: Option<String>,
    /// tau_c,tau_p,tau_d,tau_f in channel uses.
    #[arg(long)]
    pub delays: Option<String>,
}

#[derive(Debug, Default, Args)]
pub struct ChannelArgs {
    /// SNR in dB (gamma = 10^(x/10)).
    #[arg(long, allow_negative_numbers = true, conflicts_with = "gamma")]
    pub snr_db: Option<f64>,
    /// Linear SNR.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Message length in bits.
    #[arg(long)]
    pub k: Option<u64>,
}

#[derive(Debug, Default, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub bundle: BundleArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Evaluate a classical special case instead of the unified form.
    #[arg(long, value_enum)]
    pub case: Option<CaseKind>,
    #[arg(long)]
    pub n1: Option<u64>,
    #[arg(long)]
    pub eps1: Option<f64>,
    /// Transmission limit of truncated ARQ.
    #[arg(long)]
    pub m: Option<u32>,
    /// Rateless code: unbounded proactive schedule n1, n1+step, ...
    #[arg(long)]
    pub rateless: bool,
    #[arg(long)]
    pub step: Option<u64>,
    /// Relative truncation tolerance of the rateless series.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also write evaluate.csv and manifest.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub bundle: BundleArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Renewal cycles after the warm-up cycle.
    #[arg(long)]
    pub cycles: Option<u64>,
    /// Write the per-slot age trace (one row per channel use).
    #[arg(long)]
    pub trace: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Default, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub n_min: Option<u64>,
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Largest search width the exhaustive method accepts.
    #[arg(long)]
    pub width_cap: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// tau_c,tau_p,tau_d,tau_f in channel uses.
    #[arg(long)]
    pub delays: Option<String>,
    /// Also write optimize.json and manifest.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, value_enum)]
    pub task: Option<SweepTask>,
    /// SNR grid in dB: a,b,c or start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db_grid: Option<String>,
    /// Propagation delay grid: a,b,c or start:stop:step.
    #[arg(long)]
    pub tau_p_grid: Option<String>,
    /// Number of rounds grid for the evaluate task.
    #[arg(long)]
    pub m_grid: Option<String>,
    /// tau_c,tau_p,tau_d,tau_f; tau_p and tau_f are replaced by the grid.
    #[arg(long)]
    pub delays: Option<String>,
    /// Sets tau_f = tau_p + offset at every point.
    #[arg(long)]
    pub tau_f_offset: Option<u64>,
    /// First length of the finest-grained assignments.
    #[arg(long)]
    pub n1: Option<u64>,
    #[arg(long)]
    pub step: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn flag<T>(
    value: Option<&str>,
    parse: impl Fn(&str) -> Result<T, String>,
    name: &str,
) -> CliResult<Option<T>> {
    value
        .map(|s| parse(s).map_err(|e| CliError::config(format!("--{name}: {e}"))))
        .transpose()
}

fn some_if<T: Default + PartialEq>(value: T) -> Option<T> {
    (value != T::default()).then_some(value)
}

impl ChannelArgs {
    fn params(&self) -> Option<ChannelParams> {
        some_if(ChannelParams {
            snr_db: self.snr_db,
            gamma: self.gamma,
            k: self.k,
        })
    }
}

impl BundleArgs {
    fn apply(&self, p: &mut Params) -> CliResult<()> {
        p.n = flag(self.n.as_deref(), parse_list::<u64>, "n")?;
        p.e = flag(self.eps.as_deref(), parse_list::<f64>, "eps")?;
        p.delays = flag(self.delays.as_deref(), parse_delays, "delays")?;
        Ok(())
    }
}

impl SearchArgs {
    fn params(&self) -> Option<SearchParams> {
        some_if(SearchParams {
            n_min: self.n_min,
            n_max: self.n_max,
            method: self.method,
            width_cap: self.width_cap,
        })
    }
}

/// File settings (if any) with the flags laid over them.
fn resolve(config: &ConfigArgs, flags: Params) -> CliResult<Params> {
    let flags = Params {
        protocol: config.protocol,
        ..flags
    };
    Ok(match &config.config {
        Some(path) => Params::load(path)?.overlay(flags),
        None => flags,
    })
}

impl EvaluateArgs {
    pub fn params(&self) -> CliResult<Params> {
        let mut p = Params {
            channel: self.channel.params(),
            ..Default::default()
        };
        self.bundle.apply(&mut p)?;
        p.case = some_if(CaseParams {
            kind: self.case,
            n1: self.n1,
            eps1: self.eps1,
            m: self.m,
        });
        if self.rateless {
            p.rateless = Some(RatelessParams {
                n1: self.n1,
                step: self.step,
                tol: self.tol,
                round_cap: None,
            });
            p.case = None;
        }
        resolve(&self.config, p)
    }
}

impl SimulateArgs {
    pub fn params(&self) -> CliResult<Params> {
        let mut p = Params {
            channel: self.channel.params(),
            sim: some_if(SimParams {
                seed: self.seed,
                cycles: self.cycles,
                trace: self.trace.then_some(true),
            }),
            ..Default::default()
        };
        self.bundle.apply(&mut p)?;
        resolve(&self.config, p)
    }
}

impl OptimizeArgs {
    pub fn params(&self) -> CliResult<Params> {
        let p = Params {
            channel: self.channel.params(),
            search: self.search.params(),
            delays: flag(self.delays.as_deref(), parse_delays, "delays")?,
            ..Default::default()
        };
        resolve(&self.config, p)
    }
}

impl SweepArgs {
    pub fn params(&self) -> CliResult<Params> {
        let p = Params {
            channel: self.channel.params(),
            search: self.search.params(),
            delays: flag(self.delays.as_deref(), parse_delays, "delays")?,
            sweep: some_if(SweepParams {
                preset: self.preset,
                task: self.task,
                snr_db: flag(self.snr_db_grid.as_deref(), parse_grid_f64, "snr-db-grid")?,
                tau_p: flag(self.tau_p_grid.as_deref(), parse_grid_u64, "tau-p-grid")?,
                m: flag(self.m_grid.as_deref(), parse_grid_usize, "m-grid")?,
                tau_f_offset: self.tau_f_offset,
                n1: self.n1,
                step: self.step,
            }),
            ..Default::default()
        };
        Ok(commands::sweep::with_preset(resolve(&self.config, p)?))
    }
}

/// Caps the global worker pool from `AOI_HARQ_THREADS`, if set.
pub fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::config(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    // Fails only if a pool already exists, in which case it is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Executes one parsed command line.
pub fn run<W: Write>(cli: &Cli, mut stdout: W) -> CliResult<()> {
    match &cli.command {
        Command::Evaluate(args) => {
            commands::evaluate::run(&args.params()?, args.out.as_deref(), stdout)
        }
        Command::Simulate(args) => {
            let summary = commands::simulate::run(&args.params()?, &args.out)?;
            write!(stdout, "{}", commands::simulate::report(&summary))
                .map_err(error::io_err("<stdout>"))
        }
        Command::Optimize(args) => {
            commands::optimize::run(&args.params()?, args.out.as_deref(), stdout).map(drop)
        }
        Command::Sweep(args) => {
            let rows = commands::sweep::run(&args.params()?, &args.out)?;
            let path = args.out.join(commands::sweep::OUTPUT_FILE);
            writeln!(stdout, "{rows} rows -> {}", path.display()).map_err(error::io_err("<stdout>"))
        }
    }
}
