use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use porolbm::driver::{self, OutputFormat, ProblemKind, PseudoSteps, RunConfig, SweepAxes};
use porolbm::output;
use porolbm::problems::DtRule;
use porolbm::Parallelism;

#[derive(Parser)]
#[command(name = "porolbm", version, about = "Coupled lattice Boltzmann solver for poroelastic consolidation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its outputs.
    Run(RunArgs),
    /// Run a grid of configurations and tabulate relative errors and orders.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse::<ProblemKind>)]
    problem: Option<ProblemKind>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Time-step rule: viscous, scaled:C or nt:N.
    #[arg(long, value_parser = parse::<DtRule>)]
    dt_rule: Option<DtRule>,
    #[arg(long)]
    tf: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse::<Parallelism>)]
    parallelism: Option<Parallelism>,
    /// Time steps between progress messages.
    #[arg(long)]
    progress_every: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    nx: Option<usize>,
    /// Pseudo-steps per time step: N, xC (C nx) or q:C (C nx^2).
    #[arg(long, value_parser = parse::<PseudoSteps>)]
    ne: Option<PseudoSteps>,
    /// Comma-separated output times.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
    #[arg(long, value_parser = parse::<OutputFormat>)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated lattice widths.
    #[arg(long, value_delimiter = ',')]
    nx: Vec<usize>,
    /// Comma-separated pseudo-step rules.
    #[arg(long, value_delimiter = ',', value_parser = parse::<PseudoSteps>)]
    ne: Vec<PseudoSteps>,
    /// Comma-separated values of r.
    #[arg(long = "r-list", value_delimiter = ',')]
    r_list: Vec<f64>,
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

fn base_config(c: &Common) -> porolbm::Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = c.problem {
        cfg.problem = v;
    }
    if c.alpha.is_some() {
        cfg.alpha = c.alpha;
    }
    if let Some(v) = c.r {
        cfg.r = v;
    }
    if c.dt_rule.is_some() {
        cfg.dt_rule = c.dt_rule;
    }
    if c.tf.is_some() {
        cfg.tf = c.tf;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    if let Some(v) = c.parallelism {
        cfg.parallelism = v;
    }
    if c.progress_every.is_some() {
        cfg.progress_every = c.progress_every;
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> porolbm::Result<bool> {
    let mut cfg = base_config(&args.common)?;
    if let Some(v) = args.nx {
        cfg.nx = v;
    }
    if let Some(v) = args.ne {
        cfg.ne = v;
    }
    if let Some(v) = args.snapshots {
        cfg.snapshots = v;
    }
    if let Some(v) = args.format {
        cfg.format = v;
    }
    let out = driver::run(&cfg)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    output::write_run(&dir, &out, cfg.format)?;
    let s = &out.summary;
    for (name, e) in [("p", s.errors.p), ("eta", s.errors.eta), ("sigma", s.errors.sigma), ("subsidence", s.errors.subsidence)] {
        if let Some(rel) = e.and_then(|e| e.relative) {
            log::info!("relative error {name}: {rel:.6e}");
        }
    }
    log::info!("wrote {} in {:.3} s", dir.display(), s.wall_time_s);
    if let Some(reason) = &s.divergence {
        log::error!("diverged after {} steps: {reason}", s.steps_completed);
    }
    Ok(!s.diverged)
}

fn sweep(args: SweepArgs) -> porolbm::Result<bool> {
    let base = base_config(&args.common)?;
    let axes = SweepAxes { nx: args.nx, ne: args.ne, r: args.r_list };
    let rows = driver::sweep(&base, &axes)?;
    let dir = base.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let path = dir.join("sweep.csv");
    output::write_sweep_csv(&path, &rows)?;
    log::info!("wrote {}", path.display());
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (porolbm::Error::Config(_) | porolbm::Error::InvalidArgument(_))) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(1)
        }
    }
}
