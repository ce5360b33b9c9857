//! `spgd solve`: run every sweep point, write one CSV trace per run and a
//! `summary.toml` aggregating the results.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Overrides, Problem, RunPoint};
use super::{fmt_float, CliError, TRACE_HEADER};
use crate::alloc_track;
use crate::solver::{spgd_solve, SolveResult, TraceRecord};

/// Result of one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub iterations: usize,
    pub lambda: f64,
    pub trace_file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_objective: Option<f64>,
    pub final_rank: usize,
    pub max_rank: usize,
    pub wall_time_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_dist_to_ref: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_objective: Option<f64>,
    pub max_grad_sq_norm: f64,
}

/// Log-log fit of a final quantity, averaged over seeds, against `T`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub lambda: f64,
    pub quantity: String,
    pub horizons: Vec<usize>,
    pub means: Vec<f64>,
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MemoryReport {
    pub tracked: bool,
    pub largest_allocation_bytes: usize,
    pub peak_live_bytes: usize,
    pub dense_iterate_bytes: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub summary_file: PathBuf,
    pub runs: Vec<RunOutcome>,
    pub rates: Vec<RateFit>,
    pub memory: MemoryReport,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    #[serde(flatten)]
    config: &'a ExperimentConfig,
    runs: &'a [RunOutcome],
    memory: &'a MemoryReport,
    #[serde(skip_serializing_if = "<[RateFit]>::is_empty")]
    rate: &'a [RateFit],
}

/// Loads `config_path`, applies `overrides`, runs the sweep and writes the
/// artifacts. The first failing run's error is returned after every other
/// run has finished and written its trace.
pub fn run_solve(config_path: &Path, overrides: &Overrides) -> Result<RunSummary, CliError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    cfg.apply_overrides(overrides)?;
    cfg.resolve();
    run_resolved(&cfg)
}

/// Runs an already-resolved config.
pub fn run_resolved(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let out_dir = cfg.output.dir.clone();
    ensure_writable(&out_dir)?;
    let problem = cfg.build_problem()?;
    let points = cfg.run_points();
    // Build every solver config up front so bad settings fail before any run.
    let configs = points
        .iter()
        .map(|p| cfg.solver_config(&problem, p))
        .collect::<crate::Result<Vec<_>>>()?;

    let workers = cfg.sweep.workers.unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let config_text = cfg.to_toml();

    alloc_track::reset();
    let results: Vec<Result<RunOutcome, CliError>> = pool.install(|| {
        points
            .par_iter()
            .zip(configs.par_iter())
            .map(|(point, solver_cfg)| {
                let result = spgd_solve(problem.oracle(), solver_cfg)?;
                let file = trace_file_name(point);
                write_trace(&out_dir.join(&file), &config_text, point, &result.trace)?;
                Ok(outcome(&problem, point, solver_cfg, file, &result))
            })
            .collect()
    });

    let mut runs = Vec::with_capacity(results.len());
    let mut first_error = None;
    for r in results {
        match r {
            Ok(o) => runs.push(o),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }

    let memory = MemoryReport {
        tracked: alloc_track::is_active(),
        largest_allocation_bytes: alloc_track::largest_allocation(),
        peak_live_bytes: alloc_track::peak_live_bytes(),
        dense_iterate_bytes: cfg.problem.m as f64 * cfg.problem.n as f64 * 8.0,
    };
    let rates = fit_rates(&runs);
    let summary_file = out_dir.join("summary.toml");
    write_summary(&summary_file, cfg, &runs, &memory, &rates)?;

    if let Some(e) = first_error {
        return Err(e);
    }
    Ok(RunSummary {
        out_dir,
        summary_file,
        runs,
        rates,
        memory,
    })
}

fn ensure_writable(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".spgd-write-probe");
    File::create(&probe)
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| CliError::Usage(format!("{} is not writable: {e}", dir.display())))
}

fn trace_file_name(p: &RunPoint) -> String {
    format!("trace_lambda{}_T{}_seed{}.csv", p.lambda, p.iterations, p.seed)
}

fn comment_header(w: &mut impl Write, config_text: &str, point: &RunPoint) -> std::io::Result<()> {
    writeln!(w, "# seed = {}", point.seed)?;
    writeln!(w, "# iterations = {}", point.iterations)?;
    writeln!(w, "# lambda = {}", point.lambda)?;
    writeln!(w, "#")?;
    for line in config_text.lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn write_trace(
    path: &Path,
    config_text: &str,
    point: &RunPoint,
    trace: &[TraceRecord],
) -> Result<(), CliError> {
    let mut file = BufWriter::new(File::create(path)?);
    comment_header(&mut file, config_text, point)?;
    let mut csv = csv::Writer::from_writer(file);
    let to_err = |e: csv::Error| CliError::Usage(format!("{}: {e}", path.display()));
    csv.write_record(TRACE_HEADER).map_err(to_err)?;
    for r in trace {
        csv.write_record([
            r.t.to_string(),
            opt(r.eta),
            opt(r.objective),
            r.rank.to_string(),
            opt(r.grad_sq_norm),
            opt(r.dist_to_ref),
        ])
        .map_err(to_err)?;
    }
    csv.flush()?;
    Ok(())
}

fn outcome(
    problem: &Problem,
    point: &RunPoint,
    solver_cfg: &crate::SolverConfig,
    trace_file: String,
    result: &SolveResult,
) -> RunOutcome {
    let last = result.trace.last();
    let reference_objective = solver_cfg.reference.as_ref().and_then(|r| {
        problem
            .oracle()
            .exact_objective(r)
            .ok()
            .map(|f| f + point.lambda * r.nuclear_norm())
    });
    RunOutcome {
        seed: point.seed,
        iterations: point.iterations,
        lambda: point.lambda,
        trace_file,
        final_objective: last.and_then(|r| r.objective),
        final_rank: result.final_iterate.rank(),
        max_rank: result.stats.max_rank,
        wall_time_secs: result.stats.elapsed.as_secs_f64(),
        final_dist_to_ref: last.and_then(|r| r.dist_to_ref),
        reference_objective,
        max_grad_sq_norm: result.stats.max_grad_sq_norm,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Per λ with at least two horizons: slopes of the seed-averaged squared
/// distance and objective gap to the reference.
fn fit_rates(runs: &[RunOutcome]) -> Vec<RateFit> {
    let mut lambdas: Vec<f64> = Vec::new();
    for r in runs {
        if !lambdas.contains(&r.lambda) {
            lambdas.push(r.lambda);
        }
    }
    let mut fits = Vec::new();
    for lambda in lambdas {
        let mut horizons: Vec<usize> = runs
            .iter()
            .filter(|r| r.lambda == lambda)
            .map(|r| r.iterations)
            .collect();
        horizons.sort_unstable();
        horizons.dedup();
        if horizons.len() < 2 {
            continue;
        }
        type Pick = fn(&RunOutcome) -> Option<f64>;
        let quantities: [(&str, Pick); 2] = [
            ("dist_sq_to_ref", |r| r.final_dist_to_ref.map(|d| d * d)),
            ("objective_gap", |r| {
                Some(r.final_objective? - r.reference_objective?)
            }),
        ];
        for (name, pick) in quantities {
            let means: Option<Vec<f64>> = horizons
                .iter()
                .map(|&t| {
                    let vals: Option<Vec<f64>> = runs
                        .iter()
                        .filter(|r| r.lambda == lambda && r.iterations == t)
                        .map(pick)
                        .collect();
                    let vals = vals?;
                    Some(vals.iter().sum::<f64>() / vals.len() as f64)
                })
                .collect();
            let Some(means) = means else { continue };
            if means.iter().any(|&m| !(m > 0.0)) {
                continue;
            }
            let xs: Vec<f64> = horizons.iter().map(|&t| t as f64).collect();
            fits.push(RateFit {
                lambda,
                quantity: name.to_string(),
                slope: log_log_slope(&xs, &means),
                horizons: horizons.clone(),
                means,
            });
        }
    }
    fits
}

fn write_summary(
    path: &Path,
    cfg: &ExperimentConfig,
    runs: &[RunOutcome],
    memory: &MemoryReport,
    rates: &[RateFit],
) -> Result<(), CliError> {
    let body = toml::to_string(&SummaryFile {
        config: cfg,
        runs,
        memory,
        rate: rates,
    })
    .map_err(|e| CliError::Usage(format!("cannot serialize summary: {e}")))?;
    let mut file = BufWriter::new(File::create(path)?);
    let seeds: Vec<String> = cfg.sweep.seeds.iter().map(u64::to_string).collect();
    writeln!(file, "# spgd solve summary")?;
    writeln!(file, "# seeds = [{}]", seeds.join(", "))?;
    writeln!(file, "# Rerun with the tables up to [[runs]] as the config file.")?;
    file.write_all(body.as_bytes())?;
    file.flush()?;
    Ok(())
}
