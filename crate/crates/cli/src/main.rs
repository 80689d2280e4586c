//! `topofront` command-line driver.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use topofront::simp::{FilterKind, InitialDesign};

use crate::config::{ProblemRef, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "topofront", version, about = "Compliance/volume-fraction fronts, meta-models and material selection")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand; flags win over the config file.
#[derive(Debug, Args)]
struct Global {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Preset name (mbb, mbb-deep, bridge, complex) or path to a problem JSON.
    #[arg(long, global = true)]
    problem: Option<String>,

    /// Preset resolution as NELXxNELY, e.g. 60x20.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<[usize; 2]>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    penal: Option<f64>,

    #[arg(long, global = true)]
    rmin: Option<f64>,

    #[arg(long, global = true, value_enum)]
    filter: Option<FilterArg>,

    #[arg(long, global = true)]
    max_iters: Option<usize>,

    #[arg(long, global = true)]
    vf_min: Option<f64>,

    #[arg(long, global = true)]
    vf_max: Option<f64>,

    /// Number of volume fractions in a sweep.
    #[arg(long, global = true)]
    points: Option<usize>,

    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cache directory; also settable through TOPOFRONT_CACHE.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Keep results in memory only.
    #[arg(long, global = true)]
    no_cache: bool,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FilterArg {
    Density,
    Sensitivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Baseline,
    Multistart,
    Refine,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize one volume fraction and write the design.
    Optimize {
        #[arg(long)]
        vf: f64,
        /// Starting design.
        #[arg(long, default_value = "uniform", value_parser = parse_init)]
        init: InitialDesign,
    },
    /// Build a Pareto front over the configured volume-fraction grid.
    Pareto {
        #[arg(long, value_enum, default_value = "refine")]
        strategy: Strategy,
    },
    /// Raw and filtered efficiency ratio of a front CSV.
    Er {
        #[arg(long)]
        front: PathBuf,
        /// Smoothing width in volume fraction.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Fit the two-parameter front model from the solid design and one anchor.
    Fit,
    /// Screen materials and pick the lightest one for a load case.
    Select {
        /// CSV with header name,E_GPa,rho_kgm3.
        #[arg(long)]
        materials: PathBuf,
        /// Load case JSON {force, delta_max, thickness, length, height} in SI units.
        #[arg(long)]
        load: PathBuf,
        /// Existing model JSON; fitted on demand when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Multiplies the load case force.
        #[arg(long, default_value_t = 1.0)]
        load_factor: f64,
        /// Relative index gap below which the two best are re-scored.
        #[arg(long)]
        tie_tol: Option<f64>,
    },
}

fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NELXxNELY, got `{s}`"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok([n(a)?, n(b)?])
}

fn parse_init(s: &str) -> Result<InitialDesign, String> {
    s.parse().map_err(|e: topofront::Error| e.to_string())
}

impl Global {
    fn run_config(&self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.problem {
            c.problem = if p.ends_with(".json") {
                ProblemRef::Inline(topofront::fem2d::ProblemSpec::load(p.as_ref())?)
            } else {
                ProblemRef::Preset(p.clone())
            };
        }
        if self.grid.is_some() {
            c.grid = self.grid;
        }
        let o = &mut c.optimizer;
        o.penal = self.penal.unwrap_or(o.penal);
        o.rmin = self.rmin.or(o.rmin);
        o.max_iters = self.max_iters.unwrap_or(o.max_iters);
        if let Some(f) = self.filter {
            o.filter_kind = match f {
                FilterArg::Density => FilterKind::Density,
                FilterArg::Sensitivity => FilterKind::Sensitivity,
            };
        }
        c.sweep.vf_min = self.vf_min.unwrap_or(c.sweep.vf_min);
        c.sweep.vf_max = self.vf_max.unwrap_or(c.sweep.vf_max);
        c.sweep.points = self.points.unwrap_or(c.sweep.points);
        c.seed = self.seed.unwrap_or(c.seed);
        if self.out.is_some() {
            c.paths.output_dir = self.out.clone();
        }
        c.optimizer.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = cli.global.run_config()?;
    let env = commands::Env::new(cfg, cli.global.cache_dir.as_deref(), cli.global.no_cache)?;
    match cli.command {
        Command::Optimize { vf, init } => env.optimize(vf, init),
        Command::Pareto { strategy } => env.pareto(strategy),
        Command::Er { front, sigma } => env.er(&front, sigma),
        Command::Fit => env.fit().map(|_| ()),
        Command::Select { materials, load, model, load_factor, tie_tol } => {
            env.select(&materials, &load, model.as_deref(), load_factor, tie_tol)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // messages already embed their causes
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
