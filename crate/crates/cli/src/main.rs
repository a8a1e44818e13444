use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use herdsim_cli::commands::{self, DiagnoseOptions};
use herdsim_cli::{finish, parse_config, resolve_threads, CliResult};

#[derive(Parser)]
#[command(name = "herdsim", version, about = "Monte Carlo simulation of action-driven opinion dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment: trials.csv, summary.json, trajectory.csv.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Overrides run.master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (HERDSIM_THREADS takes precedence).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Repeat the experiment over a grid of initial mean beliefs.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long)]
        p0: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Martingale drift and conditional-variance tables at probe states.
    Diagnose {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also compare sampled one-step laws against exact enumeration.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        states: usize,
        #[arg(long, default_value_t = 1_000_000)]
        oracle_samples: usize,
    },
    /// Write a seeded random graph in herdsim-graph format.
    GenGraph {
        /// er:<n>:<p>, ring:<n>:<k> or complete:<n>
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Run { config, out, seed, threads } => {
            let cfg = parse_config(&config)?;
            commands::cmd_run(cfg, &out, seed, resolve_threads(threads)?)
        }
        Command::Sweep { config, out, p0, seed, threads } => {
            let grid = commands::parse_grid(&p0)?;
            let cfg = parse_config(&config)?;
            commands::cmd_sweep(cfg, &grid, &out, seed, resolve_threads(threads)?)
        }
        Command::Diagnose { config, out, oracle, samples, states, oracle_samples } => {
            let cfg = parse_config(&config)?;
            let opts = DiagnoseOptions { samples, random_states: states, oracle_samples: oracle.then_some(oracle_samples) };
            commands::cmd_diagnose(cfg, &out, opts)
        }
        Command::GenGraph { model, seed, out } => commands::cmd_gen_graph(&model, seed, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    finish(dispatch(cli.command))
}
