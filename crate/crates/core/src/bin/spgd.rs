use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lowrank_spgd::alloc_track::TrackingAllocator;
use lowrank_spgd::cli::{run_check, run_solve, CheckName, CheckOptions, CliError, Overrides};
use lowrank_spgd::Distribution;

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

/// Stochastic proximal gradient descent for nuclear-norm regularized problems.
#[derive(Parser)]
#[command(name = "spgd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Solve {
        config: PathBuf,
        /// Run a single seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        trace_every: Option<usize>,
    },
    /// Run a verification suite: prox-oracle, isotropy, kkt, incsvd-reconstruction.
    Check {
        name: String,
        #[arg(long)]
        dist: Option<Distribution>,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// KKT: draw inactive-constraint instances instead.
        #[arg(long, conflicts_with = "active")]
        inactive: bool,
        /// KKT: draw active-constraint instances (the default).
        #[arg(long)]
        active: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            config,
            seed,
            out_dir,
            trace_every,
        } => {
            let overrides = Overrides {
                seed,
                out_dir,
                trace_every,
            };
            let summary = run_solve(&config, &overrides)?;
            for r in &summary.runs {
                println!(
                    "seed={} T={} lambda={} rank={} objective={} dist={} ({:.2}s) -> {}",
                    r.seed,
                    r.iterations,
                    r.lambda,
                    r.final_rank,
                    r.final_objective.map_or("-".into(), |x| format!("{x:.6e}")),
                    r.final_dist_to_ref.map_or("-".into(), |x| format!("{x:.6e}")),
                    r.wall_time_secs,
                    r.trace_file,
                );
            }
            for fit in &summary.rates {
                println!(
                    "lambda={} {} log-log slope vs T: {:.3}",
                    fit.lambda, fit.quantity, fit.slope
                );
            }
            println!(
                "largest allocation: {} bytes; summary: {}",
                summary.memory.largest_allocation_bytes,
                summary.summary_file.display()
            );
            Ok(())
        }
        Command::Check {
            name,
            dist,
            n,
            k,
            samples,
            trials,
            inactive,
            active: _,
            seed,
        } => {
            let check: CheckName = name.parse()?;
            let opts = CheckOptions {
                dist,
                n,
                k,
                samples,
                trials,
                active: !inactive,
                seed,
            };
            let report = run_check(check, &opts)?;
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::CheckFailed(check.to_string()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
