mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;
use error::{CliError, CliResult};

/// Optimal dividend barriers for the dual risk model.
#[derive(Parser, Debug)]
#[command(name = "dualdiv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Barrier value by every applicable method, plus their agreement.
    SolveBarrier,
    /// Optimal barrier, existence and optimality checks, gamma curve.
    FindOptimal,
    /// Optimal barriers for the published parameter tables.
    ReproduceTables,
    /// Optimal barrier against one parameter for p1, p2 and p3.
    Sweep {
        #[arg(long)]
        param: Option<String>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Monte Carlo estimate of the barrier value.
    Simulate {
        /// Also dump the event log of path 0.
        #[arg(long)]
        path_log: bool,
    },
    /// HJB residuals of the barrier value.
    VerifyHjb {
        /// Take β* and the model from a find-optimal output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Classical-model exit functions under the mirror map.
    ExitFunctions,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CostKind {
    P1,
    P2,
    P3,
    Constant,
    File,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[arg(long = "grid-step", global = true)]
    grid_step: Option<f64>,
    #[arg(long, global = true, value_enum)]
    cost: Option<CostKind>,
    #[arg(long = "cost-file", global = true)]
    cost_file: Option<PathBuf>,
    #[arg(long = "density-file", global = true)]
    density_file: Option<PathBuf>,
    #[arg(long, global = true)]
    c: Option<f64>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    x0: Option<f64>,
}

impl Common {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(kind) = self.cost {
            cfg.cost = match kind {
                CostKind::P1 => "p1",
                CostKind::P2 => "p2",
                CostKind::P3 => "p3",
                CostKind::Constant => "constant",
                CostKind::File => "file",
            }
            .into();
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = self.$field.clone() { cfg.$field = v.into(); } )* };
        }
        take!(seed, paths, c, lambda, q, mu);
        macro_rules! take_opt {
            ($($field:ident),*) => { $( if let Some(v) = self.$field.clone() { cfg.$field = Some(v); } )* };
        }
        take_opt!(grid_step, cost_file, density_file, beta, x0);
        Ok(cfg)
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(raw) = std::env::var("DUALDIV_THREADS") {
        let n: usize = raw.trim().parse().map_err(|_| CliError::Config(format!("DUALDIV_THREADS must be a positive integer, got {raw:?}")))?;
        if n == 0 {
            return Err(CliError::Config("DUALDIV_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<String> {
    configure_threads()?;
    let mut cfg = cli.common.resolve()?;
    let out = &cli.common.out;
    std::fs::create_dir_all(out)?;
    match cli.command {
        Command::SolveBarrier => commands::solve_barrier(&cfg, out),
        Command::FindOptimal => commands::find_optimal(&cfg, out).map(|(_, line)| line),
        Command::ReproduceTables => commands::reproduce_tables(&cfg, out),
        Command::Sweep { param, from, to, points } => {
            if let Some(p) = param {
                cfg.sweep_param = p;
            }
            cfg.sweep_from = from.unwrap_or(cfg.sweep_from);
            cfg.sweep_to = to.unwrap_or(cfg.sweep_to);
            cfg.sweep_points = points.unwrap_or(cfg.sweep_points);
            commands::sweep(&cfg, out)
        }
        Command::Simulate { path_log } => commands::simulate(&cfg, out, path_log),
        Command::VerifyHjb { report } => {
            if let Some(path) = report {
                cfg = commands::config_from_report(&path)?;
            }
            commands::verify(&cfg, out)
        }
        Command::ExitFunctions => commands::exit_functions(&cfg, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dualdiv: {e}");
            ExitCode::FAILURE
        }
    }
}
