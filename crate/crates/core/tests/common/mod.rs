//! Dense reference computations shared by the integration tests. Everything
//! here goes through nalgebra's own SVD and plain dense arithmetic.
#![allow(dead_code)]

use lowrank_spgd::FactoredMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(m: usize, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
}

pub fn singular_values(d: &DMatrix<f64>) -> DVector<f64> {
    let mut s = d.clone().svd(false, false).singular_values;
    s.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn nuclear_norm(d: &DMatrix<f64>) -> f64 {
    singular_values(d).sum()
}

/// `P_R[D_τ[Y]]` by full dense SVD; `radius = None` is the unbounded case.
pub fn dense_prox(y: &DMatrix<f64>, tau: f64, radius: Option<f64>) -> DMatrix<f64> {
    let svd = y.clone().svd(true, true);
    let mut s = svd.singular_values.map(|x| (x - tau).max(0.0));
    if let Some(r) = radius {
        let norm = s.norm();
        if norm > r {
            s *= r / norm;
        }
    }
    svd.u.unwrap() * DMatrix::from_diagonal(&s) * svd.v_t.unwrap()
}

/// `½‖X - Y‖_F² + τ‖X‖_*`.
pub fn prox_objective(x: &DMatrix<f64>, y: &DMatrix<f64>, tau: f64) -> f64 {
    0.5 * (x - y).norm_squared() + tau * nuclear_norm(x)
}

/// Random point of the Frobenius ball of radius `r`.
pub fn ball_point(m: usize, n: usize, r: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let d = gaussian(m, n, rng);
    let target = r * rng.random::<f64>().sqrt();
    &d * (target / d.norm())
}

/// Max-entry deviation of `QᵀQ` from the identity.
pub fn orthonormality(q: &DMatrix<f64>) -> f64 {
    let g = q.transpose() * q;
    (g - DMatrix::identity(q.ncols(), q.ncols())).amax()
}

pub fn factored_orthonormality(f: &FactoredMatrix) -> f64 {
    orthonormality(f.u()).max(orthonormality(f.v()))
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
