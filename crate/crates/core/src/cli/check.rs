//! `spgd check`: verification suites against independent dense oracles.
//!
//! The oracles here use nalgebra's dense SVD and plain dense arithmetic,
//! never the factored code paths under test.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::CliError;
use crate::factored::{FactoredMatrix, LowRankGradient};
use crate::incsvd::{incremental_update, reorthonormalize, UpdateConfig};
use crate::probing::{check_isotropy, Distribution};
use crate::prox::{kkt_dual_check, prox_nuclear, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckName {
    ProxOracle,
    Isotropy,
    Kkt,
    IncsvdReconstruction,
}

impl CheckName {
    pub const ALL: [CheckName; 4] = [
        CheckName::ProxOracle,
        CheckName::Isotropy,
        CheckName::Kkt,
        CheckName::IncsvdReconstruction,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CheckName::ProxOracle => "prox-oracle",
            CheckName::Isotropy => "isotropy",
            CheckName::Kkt => "kkt",
            CheckName::IncsvdReconstruction => "incsvd-reconstruction",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = CheckName::ALL.iter().map(|c| c.name()).collect();
                CliError::Usage(format!(
                    "unknown check '{s}' (expected one of: {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    /// Isotropy: a single distribution, or all three.
    pub dist: Option<Distribution>,
    pub n: usize,
    /// Isotropy: a single sketch width, or both 2 and `n`.
    pub k: Option<usize>,
    pub samples: usize,
    pub trials: usize,
    /// KKT: draw instances whose ball constraint is active.
    pub active: bool,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            dist: None,
            n: 8,
            k: None,
            samples: 100_000,
            trials: 100,
            active: true,
            seed: 0,
        }
    }
}

/// One measured property.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub property: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check: CheckName,
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    fn new(check: CheckName) -> Self {
        CheckReport {
            check,
            lines: Vec::new(),
        }
    }

    /// Records `measured <= tolerance`.
    fn at_most(&mut self, property: impl Into<String>, measured: f64, tolerance: f64) {
        self.lines.push(CheckLine {
            property: property.into(),
            measured,
            tolerance,
            pass: measured <= tolerance,
        });
    }

    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(
                f,
                "{} {}: {:.3e} (tolerance {:.3e})",
                if l.pass { "PASS" } else { "FAIL" },
                l.property,
                l.measured,
                l.tolerance
            )?;
        }
        let failed = self.lines.iter().filter(|l| !l.pass).count();
        write!(
            f,
            "{}: {} of {} properties passed",
            self.check,
            self.lines.len() - failed,
            self.lines.len()
        )
    }
}

pub fn run_check(name: CheckName, opts: &CheckOptions) -> Result<CheckReport, CliError> {
    if opts.trials < 1 || opts.samples < 1 || opts.n < 1 {
        return Err(CliError::Usage(
            "trials, samples and n must be at least 1".into(),
        ));
    }
    match name {
        CheckName::ProxOracle => prox_oracle(opts),
        CheckName::Isotropy => isotropy(opts),
        CheckName::Kkt => kkt(opts),
        CheckName::IncsvdReconstruction => incsvd_reconstruction(opts),
    }
}

fn gaussian(m: usize, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
}

/// Dense `P_R[D_τ[Y]]` by full SVD.
fn dense_prox(y: &DMatrix<f64>, tau: f64, radius: Option<f64>) -> DMatrix<f64> {
    let svd = y.clone().svd(true, true);
    let mut s = svd.singular_values.map(|x| (x - tau).max(0.0));
    if let Some(r) = radius {
        let norm = s.norm();
        if norm > r {
            s *= r / norm;
        }
    }
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    u * DMatrix::from_diagonal(&s) * vt
}

fn prox_oracle(opts: &CheckOptions) -> Result<CheckReport, CliError> {
    let (m, n) = (20, 15);
    // (λ, η, radius) covering both the interior and the boundary case.
    let settings: [(f64, f64, Option<f64>); 10] = [
        (0.0, 1.0, None),
        (0.5, 1.0, None),
        (1.0, 2.0, None),
        (3.0, 1.0, None),
        (20.0, 1.0, None),
        (0.5, 1.0, Some(100.0)),
        (0.5, 1.0, Some(1.0)),
        (1.0, 0.5, Some(5.0)),
        (2.0, 1.0, Some(0.1)),
        (0.0, 1.0, Some(3.0)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = 0.0f64;
    let mut worst_feasibility = 0.0f64;
    for _ in 0..opts.trials {
        let d = gaussian(m, n, &mut rng);
        let f = FactoredMatrix::from_dense(&d, 0.0)?;
        for &(lambda, eta, radius) in &settings {
            let domain = match radius {
                Some(r) => Domain::frobenius_ball(r)?,
                None => Domain::Unbounded,
            };
            let ours = prox_nuclear(&f, lambda, eta, &domain)?;
            let oracle = dense_prox(&d, lambda * eta, radius);
            let err = (ours.to_dense()? - &oracle).norm() / oracle.norm().max(1.0);
            worst = worst.max(err);
            if let Some(r) = radius {
                worst_feasibility = worst_feasibility.max(ours.frobenius_norm() - r);
            }
        }
    }
    let mut report = CheckReport::new(CheckName::ProxOracle);
    report.at_most(
        format!(
            "relative deviation from dense prox ({} instances x {} settings)",
            opts.trials,
            settings.len()
        ),
        worst,
        1e-9,
    );
    report.at_most("ball feasibility excess", worst_feasibility.max(0.0), 1e-12);
    Ok(report)
}

fn isotropy(opts: &CheckOptions) -> Result<CheckReport, CliError> {
    let dists: Vec<Distribution> = match opts.dist {
        Some(d) => vec![d],
        None => Distribution::ALL.to_vec(),
    };
    let widths: Vec<usize> = match opts.k {
        Some(k) => vec![k],
        None => {
            let mut w = vec![2.min(opts.n), opts.n];
            w.dedup();
            w
        }
    };
    // Reference tolerances are for 10⁵ samples; they scale as 1/√samples.
    let scale = (100_000.0 / opts.samples as f64).sqrt();
    let mut report = CheckReport::new(CheckName::Isotropy);
    let mut seed = opts.seed;
    for &dist in &dists {
        for &k in &widths {
            let base = match dist {
                Distribution::Gaussian => 0.08,
                _ => 0.05,
            };
            let dev = check_isotropy(dist, opts.n, k, opts.samples, seed)?;
            seed = seed.wrapping_add(1);
            report.at_most(
                format!(
                    "{dist} n={} k={k} samples={}: max |mean(YYᵀ) - I|",
                    opts.n, opts.samples
                ),
                dev,
                base * scale,
            );
        }
    }
    Ok(report)
}

/// Dual function of the ball-constrained shrinkage problem.
fn dual(shrunk_sq: f64, y_sq: f64, radius: f64, mu: f64) -> f64 {
    -shrunk_sq / (2.0 * (1.0 + 2.0 * mu)) - mu * radius * radius + 0.5 * y_sq
}

/// Maximizes the concave dual over `μ ≥ 0` by bisection on the sign of its
/// derivative `‖D‖²/(1+2μ)² - R²`.
fn dual_search(shrunk_sq: f64, radius: f64) -> f64 {
    let slope = |mu: f64| shrunk_sq / (1.0 + 2.0 * mu).powi(2) - radius * radius;
    if slope(0.0) <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while slope(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn kkt(opts: &CheckOptions) -> Result<CheckReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut boundary = 0.0f64;
    let mut gap = 0.0f64;
    let mut mu_dev = 0.0f64;
    let mut inactive_mu = 0.0f64;
    for _ in 0..opts.trials {
        let d = gaussian(12, 9, &mut rng);
        let f = FactoredMatrix::from_dense(&d, 0.0)?;
        let lambda = rng.random_range(0.0..1.5);
        let svd = d.clone().svd(false, false);
        let shrunk_sq: f64 = svd
            .singular_values
            .iter()
            .map(|s| (s - lambda).max(0.0).powi(2))
            .sum();
        let shrunk = shrunk_sq.sqrt();
        let radius = if opts.active {
            shrunk * rng.random_range(0.05..0.95)
        } else {
            shrunk * rng.random_range(1.05..3.0) + 1e-3
        };
        let report = kkt_dual_check(&f, lambda, radius)?;
        if opts.active {
            boundary = boundary.max((report.scale * report.shrunk_norm - radius).abs());
            gap = gap.max(report.relative_gap());
            let searched = dual_search(shrunk_sq, radius);
            let best = dual(shrunk_sq, d.norm_squared(), radius, searched);
            gap = gap.max((report.dual_value - best).abs() / (1.0 + best.abs()));
            mu_dev = mu_dev.max((report.mu_star - searched).abs() / (1.0 + searched));
        } else {
            inactive_mu = inactive_mu.max(report.mu_star.abs() + report.primal_dual_gap.abs());
        }
    }
    let mut report = CheckReport::new(CheckName::Kkt);
    if opts.active {
        report.at_most("|scale·‖D_λ[Y]‖_F - R|", boundary, 1e-12);
        report.at_most("relative primal-dual gap, and dual value vs searched maximum", gap, 1e-9);
        report.at_most("|μ* - argmax L(μ)| relative (1-D search)", mu_dev, 1e-9);
    } else {
        report.at_most("μ* and gap on inactive instances", inactive_mu, 0.0);
    }
    Ok(report)
}

fn incsvd_reconstruction(opts: &CheckOptions) -> Result<CheckReport, CliError> {
    let (m, n, steps) = (30, 25, 50);
    let cfg = UpdateConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst_err = 0.0f64;
    let mut worst_orth = 0.0f64;
    let mut degenerate = [0usize; 2];
    for _ in 0..opts.trials {
        let rank = rng.random_range(0..=8);
        let spectrum: Vec<f64> = (0..rank).map(|_| rng.random_range(0.5..5.0)).collect();
        let mut f = FactoredMatrix::random_with_spectrum(m, n, &spectrum, rng.random())?;
        let mut dense = f.to_dense()?;
        for step in 0..steps {
            let c = rng.random_range(1..=4);
            let mut a = gaussian(m, c, &mut rng);
            let mut b = gaussian(n, c, &mut rng);
            // Every few steps put A or B inside the current span.
            if f.rank() > 0 {
                match step % 5 {
                    1 => {
                        a = f.u() * gaussian(f.rank(), c, &mut rng);
                        degenerate[0] += 1;
                    }
                    3 => {
                        b = f.v() * gaussian(f.rank(), c, &mut rng);
                        degenerate[1] += 1;
                    }
                    _ => {}
                }
            }
            let scale = rng.random_range(-1.0..1.0);
            dense += (&a * b.transpose()) * scale;
            f = incremental_update(&f, &LowRankGradient::new(a, b)?, scale, &cfg)?;
            worst_orth = worst_orth.max(f.orthonormality_error());
        }
        let err = (f.to_dense()? - &dense).norm() / dense.norm().max(1e-300);
        worst_err = worst_err.max(err);
        let f = reorthonormalize(&f, &cfg)?;
        worst_orth = worst_orth.max(f.orthonormality_error());
    }
    let mut report = CheckReport::new(CheckName::IncsvdReconstruction);
    report.at_most(
        format!(
            "relative reconstruction error after {steps} updates ({} chains, {} in-span A, {} in-span B)",
            opts.trials, degenerate[0], degenerate[1]
        ),
        worst_err,
        1e-8,
    );
    report.at_most("max |UᵀU - I|, |VᵀV - I| entry", worst_orth, 1e-9);
    Ok(report)
}
