//! Thin SVD of `X + A Bᵀ` from the thin SVD of `X`.
//!
//! With `X = U Σ Vᵀ` (rank r) and `A`, `B` of width c:
//!
//! ```text
//! P R_A = (I - U Uᵀ) A        Q R_B = (I - V Vᵀ) B
//! K = [Σ 0; 0 0] + [UᵀA; R_A] [VᵀB; R_B]ᵀ        (r+p) x (r+q)
//! K = Û Σ̂ V̂ᵀ   =>   X + A Bᵀ = ([U P] Û) Σ̂ ([V Q] V̂)ᵀ
//! ```
//!
//! Time is `O((m+n)(r+c)² + (r+c)³)` and nothing of size `m x n` is formed.

use nalgebra::{DMatrix, DVector};

use crate::factored::{FactoredMatrix, LowRankGradient};
use crate::ortho;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateConfig {
    /// Residual columns with norm below `residual_tol * ‖A‖_F` are treated as
    /// already inside the existing span.
    pub residual_tol: f64,
    /// Singular values below `trunc_tol * σ_max` are dropped after the update.
    pub trunc_tol: f64,
    /// Largest allowed dimension of the core matrix `K`.
    pub core_cap: usize,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        UpdateConfig {
            residual_tol: 1e-12,
            trunc_tol: 1e-12,
            core_cap: 512,
        }
    }
}

/// The intermediate blocks of one incremental update.
#[derive(Debug, Clone)]
pub struct UpdateDecomposition {
    /// Orthonormal basis of `(I - U Uᵀ) A`, m x p.
    pub p: DMatrix<f64>,
    /// `Pᵀ (I - U Uᵀ) A`, p x c.
    pub r_a: DMatrix<f64>,
    /// Orthonormal basis of `(I - V Vᵀ) B`, n x q.
    pub q: DMatrix<f64>,
    /// `Qᵀ (I - V Vᵀ) B`, q x c.
    pub r_b: DMatrix<f64>,
    /// `Uᵀ A`, r x c.
    pub ut_a: DMatrix<f64>,
    /// `Vᵀ B`, r x c.
    pub vt_b: DMatrix<f64>,
    /// The (r+p) x (r+q) core matrix.
    pub k: DMatrix<f64>,
}

/// Economy SVD of a small core matrix.
#[derive(Debug, Clone)]
pub struct CoreSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// Orthonormal basis of the part of `A` outside `span(U)`, with coefficients.
///
/// Returns `(P, R_A)` with `P R_A = (I - U Uᵀ) A` and `Uᵀ P = 0`. `P` has no
/// columns when `A` already lies in `span(U)`.
pub fn orthogonal_complement_basis(
    u: &DMatrix<f64>,
    a: &DMatrix<f64>,
    tol: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if u.nrows() != a.nrows() {
        return Err(Error::dims(
            "orthogonal_complement_basis",
            format!("{} rows", u.nrows()),
            format!("{} rows", a.nrows()),
        ));
    }
    debug_assert!(
        ortho::orthonormality_error(u) <= crate::factored::ORTHONORMALITY_TOL,
        "basis is not orthonormal"
    );
    Ok(ortho::complement_basis(u, a, tol))
}

/// Builds every block of the update `F + scale * A Bᵀ`.
pub fn decompose(
    f: &FactoredMatrix,
    g: &LowRankGradient,
    scale: f64,
    residual_tol: f64,
) -> Result<UpdateDecomposition> {
    check_inputs(f, g)?;
    let a = g.a() * scale;
    let b = g.b();
    let r = f.rank();

    let ut_a = f.u().tr_mul(&a);
    let vt_b = f.v().tr_mul(b);
    let (p, r_a) = ortho::complement_basis(f.u(), &a, residual_tol);
    let (q, r_b) = ortho::complement_basis(f.v(), b, residual_tol);

    let rows = r + p.ncols();
    let cols = r + q.ncols();
    let mut left = DMatrix::zeros(rows, a.ncols());
    left.rows_mut(0, r).copy_from(&ut_a);
    left.rows_mut(r, p.ncols()).copy_from(&r_a);
    let mut right = DMatrix::zeros(cols, b.ncols());
    right.rows_mut(0, r).copy_from(&vt_b);
    right.rows_mut(r, q.ncols()).copy_from(&r_b);

    let mut k = &left * right.transpose();
    for i in 0..r {
        k[(i, i)] += f.sigma()[i];
    }

    Ok(UpdateDecomposition {
        p,
        r_a,
        q,
        r_b,
        ut_a,
        vt_b,
        k,
    })
}

fn check_inputs(f: &FactoredMatrix, g: &LowRankGradient) -> Result<()> {
    if f.shape() != g.shape() {
        return Err(Error::dims(
            "incremental_update",
            format!("{:?}", f.shape()),
            format!("{:?}", g.shape()),
        ));
    }
    if !g.is_finite() {
        return Err(Error::NonFinite("low-rank update factors"));
    }
    Ok(())
}

/// SVD of the small core matrix by one-sided Jacobi. Numerically-zero
/// singular values are dropped, so `K = 0` gives empty factors.
pub fn core_svd(k: &DMatrix<f64>, cap: usize) -> Result<CoreSvd> {
    if k.nrows() > cap || k.ncols() > cap {
        return Err(Error::CoreCapExceeded {
            rows: k.nrows(),
            cols: k.ncols(),
            cap,
        });
    }
    if k.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("core matrix"));
    }
    let svd = ortho::jacobi_svd(k);
    Ok(CoreSvd {
        u: svd.u,
        sigma: svd.sigma,
        v: svd.v,
    })
}

/// Thin SVD of `F + scale * A Bᵀ`.
///
/// `scale = 0` returns `F` unchanged.
pub fn incremental_update(
    f: &FactoredMatrix,
    g: &LowRankGradient,
    scale: f64,
    config: &UpdateConfig,
) -> Result<FactoredMatrix> {
    check_inputs(f, g)?;
    if !scale.is_finite() {
        return Err(Error::NonFinite("update scale"));
    }
    if scale == 0.0 || g.width() == 0 {
        return Ok(f.clone());
    }

    let parts = decompose(f, g, scale, config.residual_tol)?;
    let core = core_svd(&parts.k, config.core_cap)?;

    let smax = core.sigma.iter().copied().fold(0.0, f64::max);
    let keep = core
        .sigma
        .iter()
        .take_while(|&&s| s >= config.trunc_tol * smax && s > 0.0)
        .count();

    let r = f.rank();
    let u_hat = core.u.columns(0, keep);
    let v_hat = core.v.columns(0, keep);
    let new_u = lift(f.u(), &parts.p, &u_hat.clone_owned(), r);
    let new_v = lift(f.v(), &parts.q, &v_hat.clone_owned(), r);
    let sigma = core.sigma.rows(0, keep).clone_owned();

    Ok(FactoredMatrix::from_parts_unchecked(new_u, sigma, new_v))
}

/// `[basis extra] * coeffs` without concatenating the two blocks.
fn lift(
    basis: &DMatrix<f64>,
    extra: &DMatrix<f64>,
    coeffs: &DMatrix<f64>,
    r: usize,
) -> DMatrix<f64> {
    let mut out = basis * coeffs.rows(0, r);
    if extra.ncols() > 0 {
        out.gemm(1.0, extra, &coeffs.rows(r, extra.ncols()), 1.0);
    }
    out
}

/// Re-orthonormalizes `U` and `V` and re-diagonalizes, bounding the slow
/// loss of orthogonality over long chains of updates.
///
/// `U = Q_u R_u`, `V = Q_v R_v`, then the SVD of `R_u Σ R_vᵀ` rotates the
/// new bases.
pub fn reorthonormalize(f: &FactoredMatrix, config: &UpdateConfig) -> Result<FactoredMatrix> {
    if f.rank() == 0 {
        return Ok(f.clone());
    }
    let (m, n) = f.shape();
    let (qu, ru) = ortho::complement_basis(&DMatrix::zeros(m, 0), f.u(), 0.0);
    let (qv, rv) = ortho::complement_basis(&DMatrix::zeros(n, 0), f.v(), 0.0);
    let mut middle = ru.clone();
    for (j, s) in f.sigma().iter().enumerate() {
        middle.column_mut(j).scale_mut(*s);
    }
    let core = core_svd(&(middle * rv.transpose()), config.core_cap)?;
    let smax = core.sigma.iter().copied().fold(0.0, f64::max);
    let keep = core
        .sigma
        .iter()
        .take_while(|&&s| s >= config.trunc_tol * smax)
        .count();
    let u = &qu * core.u.columns(0, keep);
    let v = &qv * core.v.columns(0, keep);
    Ok(FactoredMatrix::from_parts_unchecked(
        u,
        core.sigma.rows(0, keep).clone_owned(),
        v,
    ))
}
