//! Proximal operators for the nuclear norm, acting on factored matrices.
//!
//! * [`svs`] is singular value shrinkage `D_λ`: the minimizer of
//!   `½‖X - Y‖_F² + λ‖X‖_*`.
//! * [`project_frobenius`] is the Euclidean projection onto `‖X‖_F ≤ R`.
//! * [`prox_nuclear`] composes them in shrink-then-project order, which
//!   solves the ball-constrained problem exactly.
//! * [`kkt_dual_check`] recovers the optimal multiplier of the ball
//!   constraint in closed form and reports the primal-dual gap.
//!
//! None of these recompute singular vectors: shrinkage selects columns and
//! projection rescales `σ`, so each costs `O(r)` beyond copying the blocks.

use serde::{Deserialize, Serialize};

use crate::factored::FactoredMatrix;
use crate::{Error, Result};

/// Feasible set for the iterates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Unbounded,
    FrobeniusBall { radius: f64 },
}

impl Domain {
    pub fn frobenius_ball(radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Domain::FrobeniusBall { radius })
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            Domain::Unbounded => None,
            Domain::FrobeniusBall { radius } => Some(*radius),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Unbounded => Ok(()),
            Domain::FrobeniusBall { radius } => check_radius(*radius),
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ball radius must be positive and finite, got {radius}"
        )));
    }
    Ok(())
}

fn check_threshold(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "shrinkage threshold must be non-negative and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Singular value shrinkage: `σ_i ← σ_i - λ`, dropping every direction with
/// `σ_i ≤ λ` (an exact tie shrinks to zero and is truncated).
pub fn svs(f: &FactoredMatrix, lambda: f64) -> Result<FactoredMatrix> {
    check_threshold(lambda)?;
    if lambda == 0.0 {
        return Ok(f.clone());
    }
    // σ is non-increasing, so the survivors are a prefix.
    let keep = f.sigma().iter().take_while(|&&s| s > lambda).count();
    let shrunk = f.sigma().rows(0, keep).map(|s| s - lambda);
    Ok(f.with_leading(shrunk))
}

/// Projection onto the Frobenius ball of radius `R`.
pub fn project_frobenius(f: &FactoredMatrix, radius: f64) -> Result<FactoredMatrix> {
    check_radius(radius)?;
    let norm = f.frobenius_norm();
    if norm <= radius {
        return Ok(f.clone());
    }
    Ok(f.scale_sigma(radius / norm))
}

/// Solves `argmin_{X ∈ domain} ½‖X - F‖_F² + λη‖X‖_*`, where `F` is already
/// the gradient-stepped point.
pub fn prox_nuclear(
    f: &FactoredMatrix,
    lambda: f64,
    eta: f64,
    domain: &Domain,
) -> Result<FactoredMatrix> {
    check_threshold(lambda)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive and finite, got {eta}"
        )));
    }
    let shrunk = svs(f, lambda * eta)?;
    match domain {
        Domain::Unbounded => Ok(shrunk),
        Domain::FrobeniusBall { radius } => project_frobenius(&shrunk, *radius),
    }
}

/// Closed-form dual certificate for `min_{‖X‖_F ≤ R} ½‖X - Y‖_F² + λ‖X‖_*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktReport {
    /// Optimal multiplier of the constraint `‖X‖_F² ≤ R²`.
    pub mu_star: f64,
    /// `‖D_λ[Y]‖_F`.
    pub shrunk_norm: f64,
    /// `1 / (1 + 2 μ*)`, the factor applied to `D_λ[Y]`.
    pub scale: f64,
    /// Primal objective at the recovered `X*`.
    pub primal_value: f64,
    /// Lagrange dual function at `μ*`.
    pub dual_value: f64,
    /// `primal_value - dual_value`.
    pub primal_dual_gap: f64,
    /// Whether the ball constraint binds.
    pub active: bool,
}

impl KktReport {
    /// Gap relative to `1 + |primal|`.
    pub fn relative_gap(&self) -> f64 {
        self.primal_dual_gap.abs() / (1.0 + self.primal_value.abs())
    }
}

/// Lagrange dual function of the ball-constrained shrinkage problem:
/// `L(μ) = -‖D_λ[Y]‖_F² / (2(1+2μ)) - μR² + ½‖Y‖_F²`.
pub fn dual_value(shrunk_norm_sq: f64, y_norm_sq: f64, radius: f64, mu: f64) -> f64 {
    -shrunk_norm_sq / (2.0 * (1.0 + 2.0 * mu)) - mu * radius * radius + 0.5 * y_norm_sq
}

pub fn kkt_dual_check(f: &FactoredMatrix, lambda: f64, radius: f64) -> Result<KktReport> {
    check_threshold(lambda)?;
    check_radius(radius)?;

    let shrunk_sq: f64 = f
        .sigma()
        .iter()
        .map(|&s| (s - lambda).max(0.0).powi(2))
        .sum();
    let shrunk_norm = shrunk_sq.sqrt();
    let active = shrunk_norm > radius;

    let (mu_star, scale) = if active {
        ((shrunk_norm / radius - 1.0) / 2.0, radius / shrunk_norm)
    } else {
        (0.0, 1.0)
    };

    // X* = scale · D_λ[Y] shares the singular vectors of Y.
    let mut primal = 0.0;
    for &s in f.sigma().iter() {
        let x = scale * (s - lambda).max(0.0);
        primal += 0.5 * (x - s).powi(2) + lambda * x;
    }

    let (dual, gap) = if active {
        let d = dual_value(shrunk_sq, f.frobenius_norm_sq(), radius, mu_star);
        (d, primal - d)
    } else {
        (primal, 0.0)
    };

    Ok(KktReport {
        mu_star,
        shrunk_norm,
        scale,
        primal_value: primal,
        dual_value: dual,
        primal_dual_gap: gap,
        active,
    })
}
