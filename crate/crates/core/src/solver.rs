//! The SPGD loop.
//!
//! Starting from `W₁ = 0`, each iteration draws a low-rank gradient sketch
//! `Ĝ_t = A_t B_tᵀ`, forms the thin SVD of `W_t - η_t Ĝ_t` incrementally and
//! applies the nuclear-norm prox with threshold `λη_t`. The last iterate
//! `W_{T+1}` is returned; iterates are never averaged.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::factored::FactoredMatrix;
use crate::incsvd::{incremental_update, reorthonormalize, UpdateConfig};
use crate::problems::GradientOracle;
use crate::prox::{prox_nuclear, Domain};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepKind {
    /// `η_t = c / √T` for every t.
    ConstantOverSqrtT { c: f64 },
    /// `η_t = 1 / (μ t)`.
    InverseMuT { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    kind: StepKind,
    horizon: usize,
}

impl StepSchedule {
    pub fn new(kind: StepKind, horizon: usize) -> Result<Self> {
        let ok = match kind {
            StepKind::ConstantOverSqrtT { c } => c > 0.0 && c.is_finite(),
            StepKind::InverseMuT { mu } => mu > 0.0 && mu.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "step schedule constant must be positive and finite: {kind:?}"
            )));
        }
        Ok(StepSchedule { kind, horizon })
    }

    pub fn constant_over_sqrt_t(c: f64, horizon: usize) -> Result<Self> {
        Self::new(StepKind::ConstantOverSqrtT { c }, horizon)
    }

    pub fn inverse_mu_t(mu: f64, horizon: usize) -> Result<Self> {
        Self::new(StepKind::InverseMuT { mu }, horizon)
    }

    pub fn kind(&self) -> StepKind {
        self.kind
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn with_horizon(&self, horizon: usize) -> Self {
        StepSchedule {
            kind: self.kind,
            horizon,
        }
    }

    /// `η_t` for `1 ≤ t ≤ T`.
    pub fn step_size(&self, t: usize) -> Result<f64> {
        if t < 1 || t > self.horizon {
            return Err(Error::InvalidArgument(format!(
                "iteration {t} outside 1..={}",
                self.horizon
            )));
        }
        Ok(match self.kind {
            StepKind::ConstantOverSqrtT { c } => c / (self.horizon as f64).sqrt(),
            StepKind::InverseMuT { mu } => 1.0 / (mu * t as f64),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub lambda: f64,
    pub domain: Domain,
    pub schedule: StepSchedule,
    pub sketch_width: usize,
    /// Abort when an iterate's rank exceeds this.
    pub rank_budget: usize,
    pub seed: u64,
    /// Record every `trace_every`-th iterate (plus the final one).
    pub trace_every: usize,
    /// Re-orthonormalize the factors every this many iterations; 0 disables.
    pub reorth_every: usize,
    pub update: UpdateConfig,
    /// Optional known optimum `W*`, for distance tracing.
    pub reference: Option<FactoredMatrix>,
}

impl SolverConfig {
    pub fn new(lambda: f64, domain: Domain, schedule: StepSchedule) -> Self {
        SolverConfig {
            lambda,
            domain,
            schedule,
            sketch_width: crate::probing::DEFAULT_SKETCH_WIDTH,
            rank_budget: usize::MAX,
            seed: 0,
            trace_every: 10,
            reorth_every: 256,
            update: UpdateConfig::default(),
            reference: None,
        }
    }

    pub fn validate(&self, shape: (usize, usize)) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        self.domain.validate()?;
        if self.sketch_width < 1 {
            return Err(Error::InvalidArgument("sketch_width must be at least 1".into()));
        }
        if self.trace_every < 1 {
            return Err(Error::InvalidArgument("trace_every must be at least 1".into()));
        }
        let max_rank = shape.0.min(shape.1);
        if self.rank_budget != usize::MAX && self.rank_budget > max_rank {
            return Err(Error::InvalidArgument(format!(
                "rank_budget {} exceeds min(m, n) = {max_rank}",
                self.rank_budget
            )));
        }
        if let Some(r) = &self.reference {
            if r.shape() != shape {
                return Err(Error::dims(
                    "reference solution",
                    format!("{shape:?}"),
                    format!("{:?}", r.shape()),
                ));
            }
        }
        Ok(())
    }
}

/// State of one iterate `W_t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: usize,
    /// Step size used to leave `W_t`; absent for the returned iterate.
    pub eta: Option<f64>,
    /// `F(W_t) = f(W_t) + λ‖W_t‖_*`, when computable.
    pub objective: Option<f64>,
    pub rank: usize,
    /// `‖Ĝ_t‖_F²`; absent for the returned iterate.
    pub grad_sq_norm: Option<f64>,
    /// `‖W_t - W*‖_F` when a reference is supplied.
    pub dist_to_ref: Option<f64>,
}

/// Quantities tracked on every iteration, independent of the trace stride.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub iterations: usize,
    /// `max_t rank(W_t)` over all iterates including the returned one.
    pub max_rank: usize,
    /// Largest rank of an intermediate `W_t - η_t Ĝ_t` before shrinkage.
    pub max_update_rank: usize,
    /// `max_t ‖Ĝ_t‖_F²`.
    pub max_grad_sq_norm: f64,
    /// Mean of `‖Ĝ_t‖_F²` over the run.
    pub mean_grad_sq_norm: f64,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// `W_{T+1}`.
    pub final_iterate: FactoredMatrix,
    pub trace: Vec<TraceRecord>,
    pub stats: RunStats,
}

/// Runs SPGD for `config.schedule.horizon()` iterations.
pub fn spgd_solve<P: GradientOracle + ?Sized>(
    problem: &P,
    config: &SolverConfig,
) -> Result<SolveResult> {
    let (m, n) = problem.shape();
    config.validate((m, n))?;
    let started = Instant::now();
    let horizon = config.schedule.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut w = FactoredMatrix::zeros(m, n);
    let mut trace = Vec::new();
    let mut stats = RunStats::default();
    let mut grad_sq_total = 0.0;

    for t in 1..=horizon {
        let eta = config.schedule.step_size(t)?;
        let grad = problem.stochastic_grad(&w, config.sketch_width, rng.next_u64())?;
        if grad.shape() != (m, n) {
            return Err(Error::dims(
                "stochastic_grad",
                format!("{:?}", (m, n)),
                format!("{:?}", grad.shape()),
            ));
        }
        if grad.width() > config.sketch_width.max(1) {
            return Err(Error::InvalidArgument(format!(
                "gradient sketch width {} exceeds the configured maximum {}",
                grad.width(),
                config.sketch_width
            )));
        }
        let grad_sq = grad.frobenius_norm_sq();
        if !grad_sq.is_finite() {
            return Err(Error::NonFinite("stochastic gradient"));
        }
        stats.max_grad_sq_norm = stats.max_grad_sq_norm.max(grad_sq);
        grad_sq_total += grad_sq;

        if (t - 1) % config.trace_every == 0 {
            trace.push(record(problem, config, &w, t, Some(eta), Some(grad_sq))?);
        }

        let stepped = incremental_update(&w, &grad, -eta, &config.update)?;
        stats.max_update_rank = stats.max_update_rank.max(stepped.rank());
        w = prox_nuclear(&stepped, config.lambda, eta, &config.domain)?;
        if config.reorth_every > 0 && t % config.reorth_every == 0 {
            w = reorthonormalize(&w, &config.update)?;
        }

        stats.max_rank = stats.max_rank.max(w.rank());
        if w.rank() > config.rank_budget {
            return Err(Error::RankBudgetExceeded {
                t,
                rank: w.rank(),
                budget: config.rank_budget,
            });
        }
    }

    if horizon > 0 {
        trace.push(record(problem, config, &w, horizon + 1, None, None)?);
        stats.mean_grad_sq_norm = grad_sq_total / horizon as f64;
    }
    stats.iterations = horizon;
    stats.elapsed = started.elapsed();

    Ok(SolveResult {
        final_iterate: w,
        trace,
        stats,
    })
}

fn record<P: GradientOracle + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    w: &FactoredMatrix,
    t: usize,
    eta: Option<f64>,
    grad_sq_norm: Option<f64>,
) -> Result<TraceRecord> {
    let objective = match problem.exact_objective(w) {
        Ok(f) => Some(f + config.lambda * w.nuclear_norm()),
        Err(Error::DenseCapExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    if objective.is_some_and(|f| !f.is_finite()) {
        return Err(Error::NonFiniteObjective { t });
    }
    let dist_to_ref = match &config.reference {
        Some(r) => Some(w.distance_sq(r)?.sqrt()),
        None => None,
    };
    Ok(TraceRecord {
        t,
        eta,
        objective,
        rank: w.rank(),
        grad_sq_norm,
        dist_to_ref,
    })
}

/// Runs one independent solve per seed, in parallel.
pub fn solve_seeds<P: GradientOracle + ?Sized>(
    problem: &P,
    config: &SolverConfig,
    seeds: &[u64],
) -> Vec<Result<SolveResult>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut cfg = config.clone();
            cfg.seed = seed;
            spgd_solve(problem, &cfg)
        })
        .collect()
}

/// `G² + 16 r λ² + 4 λ G √r`, the constant shared by the convergence bounds.
pub fn rate_constant(grad_sq_bound: f64, rank: usize, lambda: f64) -> f64 {
    let g = grad_sq_bound.sqrt();
    let r = rank as f64;
    grad_sq_bound + 16.0 * r * lambda * lambda + 4.0 * lambda * g * r.sqrt()
}

/// `E‖W_t - W*‖_F² ≤ 4 (G² + 16rλ² + 4λG√r) / (μ² t)` for `η_t = 1/(μt)`.
pub fn strongly_convex_distance_bound(
    grad_sq_bound: f64,
    rank: usize,
    lambda: f64,
    mu: f64,
    t: usize,
) -> f64 {
    4.0 * rate_constant(grad_sq_bound, rank, lambda) / (mu * mu * t as f64)
}

/// `(D²/c + c (G² + 16rλ² + 4λG√r)) (2 + log T) / √T` for `η_t = c/√T`.
pub fn general_convex_gap_bound(
    diameter: f64,
    c: f64,
    grad_sq_bound: f64,
    rank: usize,
    lambda: f64,
    horizon: usize,
) -> f64 {
    let t = horizon as f64;
    (diameter * diameter / c + c * rate_constant(grad_sq_bound, rank, lambda)) * (2.0 + t.ln())
        / t.sqrt()
}

const BASELINE_TOL: f64 = 1e-10;
const BASELINE_MAX_ITERS: usize = 100_000;

/// Deterministic full-gradient proximal descent at desk scale, with step
/// `1/L` and the same prox as SPGD. Stops when `‖W_{k+1} - W_k‖_F ≤ 1e-10`.
pub fn dense_baseline_solve<P: GradientOracle + ?Sized>(
    problem: &P,
    config: &SolverConfig,
) -> Result<DMatrix<f64>> {
    let (m, n) = problem.shape();
    crate::factored::check_dense_cap(m, n)?;
    config.validate((m, n))?;
    let lipschitz = problem.smoothness().ok_or_else(|| {
        Error::InvalidArgument("dense baseline needs the gradient Lipschitz constant".into())
    })?;
    let step = 1.0 / lipschitz;

    let mut w = DMatrix::zeros(m, n);
    for _ in 0..BASELINE_MAX_ITERS {
        let grad = problem.dense_gradient(&w)?;
        let stepped = FactoredMatrix::from_dense(&(&w - grad * step), 0.0)?;
        let next = prox_nuclear(&stepped, config.lambda, step, &config.domain)?.to_dense()?;
        let moved = (&next - &w).norm();
        w = next;
        if moved <= BASELINE_TOL {
            return Ok(w);
        }
    }
    Err(Error::NoConvergence {
        what: "dense baseline",
        iterations: BASELINE_MAX_ITERS,
    })
}
