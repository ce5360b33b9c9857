//! Experiment configuration.
//!
//! One TOML file describes the problem, the solver and an optional sweep
//! over seeds, horizons and regularization weights. Unset fields get
//! defaults during [`ExperimentConfig::resolve`]; the resolved form is what
//! gets embedded in every output file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::factored::FactoredMatrix;
use crate::probing::Distribution;
use crate::problems::{FactoredLeastSquares, GradientOracle, MultivariateRegression};
use crate::prox::Domain;
use crate::solver::{SolverConfig, StepKind, StepSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    FactoredLeastSquares,
    MultivariateRegression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub m: usize,
    pub n: usize,
    pub target_rank: usize,
    /// Singular values of the target; defaults to `(r, r-1, ..., 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "default_feature_std")]
    pub feature_std: f64,
    #[serde(default = "default_probing")]
    pub probing: Distribution,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Unbounded,
    FrobeniusBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    InverseMuT,
    ConstantOverSqrtT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub lambda: f64,
    #[serde(default = "default_domain")]
    pub domain: DomainKind,
    /// Ball radius; alternatively `radius_factor` times `‖target‖_F`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_factor: Option<f64>,
    pub schedule: ScheduleKind,
    /// For `inverse_mu_t`; defaults to the problem's strong convexity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// For `constant_over_sqrt_t`; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub iterations: usize,
    #[serde(default = "default_sketch_width")]
    pub sketch_width: usize,
    /// Defaults to `min(m, n)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_budget: Option<usize>,
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
    #[serde(default = "default_reorth_every")]
    pub reorth_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Horizon grid; defaults to `[solver.iterations]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<Vec<usize>>,
    /// Regularization grid; defaults to `[solver.lambda]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            seeds: default_seeds(),
            iterations: None,
            lambdas: None,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_out_dir(),
        }
    }
}

fn default_feature_std() -> f64 {
    1.0
}
fn default_probing() -> Distribution {
    Distribution::Rademacher
}
fn default_domain() -> DomainKind {
    DomainKind::Unbounded
}
fn default_sketch_width() -> usize {
    crate::probing::DEFAULT_SKETCH_WIDTH
}
fn default_trace_every() -> usize {
    10
}
fn default_reorth_every() -> usize {
    256
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("spgd-out")
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub trace_every: Option<usize>,
}

/// One point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPoint {
    pub seed: u64,
    pub iterations: usize,
    pub lambda: f64,
}

pub enum Problem {
    LeastSquares(FactoredLeastSquares),
    Regression(MultivariateRegression),
}

impl Problem {
    pub fn oracle(&self) -> &dyn GradientOracle {
        match self {
            Problem::LeastSquares(p) => p,
            Problem::Regression(p) => p,
        }
    }

    fn target(&self) -> &FactoredMatrix {
        match self {
            Problem::LeastSquares(p) => p.target(),
            Problem::Regression(p) => p.truth(),
        }
    }
}

impl ExperimentConfig {
    /// Reads and parses a config file. Syntax errors carry the TOML line and
    /// column; semantic errors are anchored to the offending key's line.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Usage(e.to_string().trim().to_string()))?;
        cfg.validate().map_err(|(section, key, msg)| {
            let anchor = match find_key_line(text, section, key) {
                Some(line) => format!("line {line}: "),
                None => String::new(),
            };
            CliError::Usage(format!("{anchor}[{section}] {key}: {msg}"))
        })?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), (&'static str, &'static str, String)> {
        let p = &self.problem;
        let s = &self.solver;
        if p.m < 1 || p.n < 1 {
            let key = if p.m < 1 { "m" } else { "n" };
            return Err(("problem", key, "dimensions must be at least 1".into()));
        }
        if p.target_rank > p.m.min(p.n) {
            return Err((
                "problem",
                "target_rank",
                format!("must not exceed min(m, n) = {}", p.m.min(p.n)),
            ));
        }
        if let Some(spec) = &p.spectrum {
            if spec.len() != p.target_rank {
                return Err((
                    "problem",
                    "spectrum",
                    format!("has {} values but target_rank is {}", spec.len(), p.target_rank),
                ));
            }
            if spec.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(("problem", "spectrum", "values must be positive".into()));
            }
        }
        if !(p.noise >= 0.0 && p.noise.is_finite()) {
            return Err(("problem", "noise", "must be non-negative".into()));
        }
        if !(p.feature_std > 0.0 && p.feature_std.is_finite()) {
            return Err(("problem", "feature_std", "must be positive".into()));
        }
        if !(s.lambda >= 0.0 && s.lambda.is_finite()) {
            return Err(("solver", "lambda", "must be non-negative".into()));
        }
        match s.domain {
            DomainKind::Unbounded => {
                if s.radius.is_some() || s.radius_factor.is_some() {
                    return Err((
                        "solver",
                        "domain",
                        "radius given but domain is unbounded".into(),
                    ));
                }
            }
            DomainKind::FrobeniusBall => match (s.radius, s.radius_factor) {
                (Some(r), None) if r > 0.0 && r.is_finite() => {}
                (None, Some(f)) if f > 0.0 && f.is_finite() => {}
                (Some(_), Some(_)) => {
                    return Err((
                        "solver",
                        "radius",
                        "give either radius or radius_factor, not both".into(),
                    ))
                }
                _ => {
                    return Err((
                        "solver",
                        "radius",
                        "frobenius_ball needs a positive radius or radius_factor".into(),
                    ))
                }
            },
        }
        if let Some(mu) = s.mu {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(("solver", "mu", "must be positive".into()));
            }
        }
        if let Some(c) = s.c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(("solver", "c", "must be positive".into()));
            }
        }
        if s.sketch_width < 1 {
            return Err(("solver", "sketch_width", "must be at least 1".into()));
        }
        if s.trace_every < 1 {
            return Err(("solver", "trace_every", "must be at least 1".into()));
        }
        if let Some(b) = s.rank_budget {
            if b < 1 || b > p.m.min(p.n) {
                return Err((
                    "solver",
                    "rank_budget",
                    format!("must be in 1..={}", p.m.min(p.n)),
                ));
            }
        }
        if self.sweep.seeds.is_empty() {
            return Err(("sweep", "seeds", "grid must not be empty".into()));
        }
        if let Some(grid) = &self.sweep.iterations {
            if grid.is_empty() {
                return Err(("sweep", "iterations", "grid must not be empty".into()));
            }
        }
        if let Some(grid) = &self.sweep.lambdas {
            if grid.is_empty() {
                return Err(("sweep", "lambdas", "grid must not be empty".into()));
            }
            if grid.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
                return Err(("sweep", "lambdas", "values must be non-negative".into()));
            }
        }
        if self.sweep.workers == Some(0) {
            return Err(("sweep", "workers", "must be at least 1".into()));
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(seed) = o.seed {
            self.sweep.seeds = vec![seed];
        }
        if let Some(dir) = &o.out_dir {
            self.output.dir = dir.clone();
        }
        if let Some(every) = o.trace_every {
            if every < 1 {
                return Err(CliError::Usage("--trace-every must be at least 1".into()));
            }
            self.solver.trace_every = every;
        }
        Ok(())
    }

    /// Fills every defaulted field so the config reproduces itself exactly.
    pub fn resolve(&mut self) {
        let p = &mut self.problem;
        if p.spectrum.is_none() {
            p.spectrum = Some((1..=p.target_rank).rev().map(|i| i as f64).collect());
        }
        let mu = match p.kind {
            ProblemKind::FactoredLeastSquares => 1.0,
            ProblemKind::MultivariateRegression => p.feature_std * p.feature_std,
        };
        let s = &mut self.solver;
        match s.schedule {
            ScheduleKind::InverseMuT => {
                s.mu.get_or_insert(mu);
            }
            ScheduleKind::ConstantOverSqrtT => {
                s.c.get_or_insert(1.0);
            }
        }
        s.rank_budget.get_or_insert(p.m.min(p.n));
        self.sweep
            .iterations
            .get_or_insert_with(|| vec![s.iterations]);
        self.sweep.lambdas.get_or_insert_with(|| vec![s.lambda]);
        self.sweep.workers.get_or_insert_with(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        });
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Every `(seed, T, λ)` of the sweep, in file order. Call after `resolve`.
    pub fn run_points(&self) -> Vec<RunPoint> {
        let horizons = self
            .sweep
            .iterations
            .clone()
            .unwrap_or_else(|| vec![self.solver.iterations]);
        let lambdas = self
            .sweep
            .lambdas
            .clone()
            .unwrap_or_else(|| vec![self.solver.lambda]);
        let mut out = Vec::new();
        for &lambda in &lambdas {
            for &iterations in &horizons {
                for &seed in &self.sweep.seeds {
                    out.push(RunPoint {
                        seed,
                        iterations,
                        lambda,
                    });
                }
            }
        }
        out
    }

    pub fn build_problem(&self) -> crate::Result<Problem> {
        let p = &self.problem;
        let spectrum = p
            .spectrum
            .clone()
            .unwrap_or_else(|| (1..=p.target_rank).rev().map(|i| i as f64).collect());
        Ok(match p.kind {
            ProblemKind::FactoredLeastSquares => Problem::LeastSquares(
                FactoredLeastSquares::random(p.m, p.n, &spectrum, p.probing, p.seed)?,
            ),
            ProblemKind::MultivariateRegression => {
                Problem::Regression(MultivariateRegression::random(
                    p.m,
                    p.n,
                    &spectrum,
                    p.feature_std,
                    p.noise,
                    p.seed,
                )?)
            }
        })
    }

    pub fn domain(&self, problem: &Problem) -> crate::Result<Domain> {
        let s = &self.solver;
        match s.domain {
            DomainKind::Unbounded => Ok(Domain::Unbounded),
            DomainKind::FrobeniusBall => {
                let radius = match (s.radius, s.radius_factor) {
                    (Some(r), _) => r,
                    (None, Some(f)) => f * problem.target().frobenius_norm(),
                    (None, None) => 0.0,
                };
                Domain::frobenius_ball(radius)
            }
        }
    }

    /// Solver settings for one sweep point, with the closed-form optimum
    /// attached as the distance reference when the problem has one.
    pub fn solver_config(&self, problem: &Problem, point: &RunPoint) -> crate::Result<SolverConfig> {
        let s = &self.solver;
        let kind = match s.schedule {
            ScheduleKind::InverseMuT => StepKind::InverseMuT {
                mu: s.mu.unwrap_or_else(|| problem.oracle().strong_convexity()),
            },
            ScheduleKind::ConstantOverSqrtT => StepKind::ConstantOverSqrtT {
                c: s.c.unwrap_or(1.0),
            },
        };
        let domain = self.domain(problem)?;
        let mut cfg = SolverConfig::new(
            point.lambda,
            domain,
            StepSchedule::new(kind, point.iterations)?,
        );
        cfg.sketch_width = s.sketch_width;
        cfg.rank_budget = s
            .rank_budget
            .unwrap_or(self.problem.m.min(self.problem.n));
        cfg.seed = point.seed;
        cfg.trace_every = s.trace_every;
        cfg.reorth_every = s.reorth_every;
        cfg.reference = problem.oracle().reference_solution(point.lambda, &domain);
        Ok(cfg)
    }
}

/// 1-based line of `key = ...` inside `[section]`, if present.
fn find_key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut section_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == section {
                section_line = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    section_line
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[problem]
kind = "factored_least_squares"
m = 20
n = 20
target_rank = 2
seed = 1

[solver]
lambda = 0.1
schedule = "inverse_mu_t"
iterations = 100
"#;

    #[test]
    fn parses_and_resolves_minimal() {
        let mut cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        cfg.resolve();
        assert_eq!(cfg.problem.spectrum, Some(vec![2.0, 1.0]));
        assert_eq!(cfg.solver.mu, Some(1.0));
        assert_eq!(cfg.solver.rank_budget, Some(20));
        assert_eq!(cfg.run_points().len(), 1);
        // the resolved form parses back to itself
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn semantic_errors_are_line_anchored() {
        let text = MINIMAL.replace("target_rank = 2", "target_rank = 30");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 6"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let text = MINIMAL.replace("lambda = 0.1", "lambda = ");
        let msg = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn unknown_enum_and_key_rejected() {
        let text = MINIMAL.replace("inverse_mu_t", "adagrad");
        assert!(ExperimentConfig::parse(&text).is_err());
        let text = MINIMAL.replace("seed = 1", "seed = 1\nbogus = 3");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn ball_needs_radius() {
        let text = MINIMAL.replace("lambda = 0.1", "lambda = 0.1\ndomain = \"frobenius_ball\"");
        assert!(ExperimentConfig::parse(&text).is_err());
        let text = MINIMAL.replace(
            "lambda = 0.1",
            "lambda = 0.1\ndomain = \"frobenius_ball\"\nradius_factor = 2.0",
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        let problem = cfg.build_problem().unwrap();
        let r = cfg.domain(&problem).unwrap().radius().unwrap();
        assert!((r - 2.0 * 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_grid_rejected() {
        let text = format!("{MINIMAL}\n[sweep]\nseeds = []\n");
        let msg = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(msg.contains("seeds"), "{msg}");
    }
}
