//! Stochastic gradient oracles.
//!
//! A [`GradientOracle`] hands the solver an unbiased low-rank gradient
//! estimate `Ĝ = A Bᵀ` at a factored iterate. Problems that can apply their
//! gradient to a thin block (`G Y`) without forming `G` implement
//! [`SketchApply`] and get the probing construction `Ĝ = (G Y) Yᵀ` from
//! [`sketch_subgradient`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::factored::{check_dense_cap, FactoredMatrix, LowRankGradient};
use crate::probing::{Distribution, ProbingMatrix};
use crate::prox::{prox_nuclear, Domain};
use crate::{Error, Result};

pub trait GradientOracle: Sync {
    fn shape(&self) -> (usize, usize);

    /// A low-rank `Ĝ` with `E[Ĝ] ∈ ∂f(W)`, determined by `seed`. Problems
    /// that probe use `sketch_width` columns; others may ignore it.
    fn stochastic_grad(
        &self,
        w: &FactoredMatrix,
        sketch_width: usize,
        seed: u64,
    ) -> Result<LowRankGradient>;

    /// `f(W)` (the smooth part only).
    fn exact_objective(&self, w: &FactoredMatrix) -> Result<f64>;

    /// Strong convexity modulus `μ` of `f`; 0 when merely convex.
    fn strong_convexity(&self) -> f64;

    /// Lipschitz constant of `∇f`, if known. Needed by the dense baseline.
    fn smoothness(&self) -> Option<f64> {
        None
    }

    /// Full gradient at a dense point, for desk-scale baselines.
    fn dense_gradient(&self, _w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Err(Error::InvalidArgument(
            "this problem has no dense gradient".into(),
        ))
    }

    /// `f` at a dense point, for desk-scale baselines.
    fn dense_objective(&self, _w: &DMatrix<f64>) -> Result<f64> {
        Err(Error::InvalidArgument(
            "this problem has no dense objective".into(),
        ))
    }

    /// Closed-form minimizer of `f + λ‖·‖_*` over `domain`, when one exists.
    fn reference_solution(&self, _lambda: f64, _domain: &Domain) -> Option<FactoredMatrix> {
        None
    }

    /// Monte Carlo estimate of `E[‖Ĝ‖_F²]^{1/2}` at `w`.
    fn grad_bound_estimate(
        &self,
        w: &FactoredMatrix,
        sketch_width: usize,
        samples: usize,
        seed: u64,
    ) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut total = 0.0;
        for _ in 0..samples.max(1) {
            let g = self.stochastic_grad(w, sketch_width, rng.random())?;
            total += g.frobenius_norm_sq();
        }
        Ok((total / samples.max(1) as f64).sqrt())
    }
}

/// Problems that can evaluate `G Y` for a (sub)gradient `G` at `W` without
/// materializing `G`.
pub trait SketchApply {
    fn apply_gradient(&self, w: &FactoredMatrix, probe: &ProbingMatrix) -> Result<DMatrix<f64>>;
}

/// `Ĝ = A Bᵀ` with `A = G Y` and `B = Y`, unbiased because `E[Y Yᵀ] = I`.
pub fn sketch_subgradient<P: SketchApply + ?Sized>(
    problem: &P,
    w: &FactoredMatrix,
    probe: &ProbingMatrix,
) -> Result<LowRankGradient> {
    if probe.n() != w.ncols() {
        return Err(Error::dims(
            "sketch_subgradient",
            format!("probing matrix with {} rows", w.ncols()),
            probe.n(),
        ));
    }
    let a = problem.apply_gradient(w, probe)?;
    LowRankGradient::new(a, probe.matrix().clone())
}

/// `f(W) = ½‖W - M‖_F²` for a factored target `M`.
///
/// Strongly convex with `μ = 1`, and the regularized optimum is known in
/// closed form: `P_R[D_λ[M]]`.
#[derive(Debug, Clone)]
pub struct FactoredLeastSquares {
    target: FactoredMatrix,
    probing: Distribution,
}

impl FactoredLeastSquares {
    pub fn new(target: FactoredMatrix, probing: Distribution) -> Self {
        FactoredLeastSquares { target, probing }
    }

    /// Target with the given singular values and random singular vectors.
    pub fn random(
        m: usize,
        n: usize,
        spectrum: &[f64],
        probing: Distribution,
        seed: u64,
    ) -> Result<Self> {
        let target = FactoredMatrix::random_with_spectrum(m, n, spectrum, seed)?;
        Ok(Self::new(target, probing))
    }

    pub fn target(&self) -> &FactoredMatrix {
        &self.target
    }

    pub fn probing(&self) -> Distribution {
        self.probing
    }
}

impl SketchApply for FactoredLeastSquares {
    fn apply_gradient(&self, w: &FactoredMatrix, probe: &ProbingMatrix) -> Result<DMatrix<f64>> {
        if w.shape() != self.target.shape() {
            return Err(Error::dims(
                "FactoredLeastSquares::apply_gradient",
                format!("{:?}", self.target.shape()),
                format!("{:?}", w.shape()),
            ));
        }
        // Scaled-identity probes only need a few columns of G = W - M.
        if let Some(idx) = probe.column_indices() {
            let scale = probe.column_scale();
            return Ok(w.scaled_columns(idx, scale)? - self.target.scaled_columns(idx, scale)?);
        }
        Ok(w.multiply_right(probe.matrix())? - self.target.multiply_right(probe.matrix())?)
    }
}

impl GradientOracle for FactoredLeastSquares {
    fn shape(&self) -> (usize, usize) {
        self.target.shape()
    }

    fn stochastic_grad(
        &self,
        w: &FactoredMatrix,
        sketch_width: usize,
        seed: u64,
    ) -> Result<LowRankGradient> {
        let probe = ProbingMatrix::generate(self.probing, w.ncols(), sketch_width, seed)?;
        sketch_subgradient(self, w, &probe)
    }

    /// `½(‖W‖² - 2⟨W, M⟩ + ‖M‖²)` through small blocks, valid at any scale.
    fn exact_objective(&self, w: &FactoredMatrix) -> Result<f64> {
        Ok(0.5 * w.distance_sq(&self.target)?)
    }

    fn strong_convexity(&self) -> f64 {
        1.0
    }

    fn smoothness(&self) -> Option<f64> {
        Some(1.0)
    }

    fn dense_gradient(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_shape(w, self.shape())?;
        Ok(w - self.target.to_dense()?)
    }

    fn dense_objective(&self, w: &DMatrix<f64>) -> Result<f64> {
        check_shape(w, self.shape())?;
        Ok(0.5 * (w - self.target.to_dense()?).norm_squared())
    }

    fn reference_solution(&self, lambda: f64, domain: &Domain) -> Option<FactoredMatrix> {
        prox_nuclear(&self.target, lambda, 1.0, domain).ok()
    }
}

fn check_shape(w: &DMatrix<f64>, shape: (usize, usize)) -> Result<()> {
    if w.shape() != shape {
        return Err(Error::dims("dense point", format!("{shape:?}"), format!("{:?}", w.shape())));
    }
    check_dense_cap(shape.0, shape.1)
}

/// Multi-output linear regression `f(W) = E[½‖Wᵀx - y‖²]` with
/// `x ~ N(0, s² I_m)` and `y = W̄ᵀx + ε`, `ε ~ N(0, noise² I_n)`.
///
/// One sample gives the exact rank-one gradient `x (Wᵀx - y)ᵀ`, so no probing
/// is needed. The population objective is `½ s²‖W - W̄‖_F² + ½ n noise²`.
#[derive(Debug, Clone)]
pub struct MultivariateRegression {
    truth: FactoredMatrix,
    feature_std: f64,
    noise: f64,
}

impl MultivariateRegression {
    pub fn new(truth: FactoredMatrix, feature_std: f64, noise: f64) -> Result<Self> {
        if !(feature_std > 0.0 && feature_std.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "feature_std must be positive, got {feature_std}"
            )));
        }
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise must be non-negative, got {noise}"
            )));
        }
        Ok(MultivariateRegression {
            truth,
            feature_std,
            noise,
        })
    }

    pub fn random(
        m: usize,
        n: usize,
        spectrum: &[f64],
        feature_std: f64,
        noise: f64,
        seed: u64,
    ) -> Result<Self> {
        let truth = FactoredMatrix::random_with_spectrum(m, n, spectrum, seed)?;
        Self::new(truth, feature_std, noise)
    }

    pub fn truth(&self) -> &FactoredMatrix {
        &self.truth
    }

    fn curvature(&self) -> f64 {
        self.feature_std * self.feature_std
    }
}

impl GradientOracle for MultivariateRegression {
    fn shape(&self) -> (usize, usize) {
        self.truth.shape()
    }

    fn stochastic_grad(
        &self,
        w: &FactoredMatrix,
        _sketch_width: usize,
        seed: u64,
    ) -> Result<LowRankGradient> {
        let (m, n) = self.shape();
        if w.shape() != (m, n) {
            return Err(Error::dims(
                "MultivariateRegression::stochastic_grad",
                format!("{:?}", (m, n)),
                format!("{:?}", w.shape()),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DVector::from_fn(m, |_, _| {
            self.feature_std * rng.sample::<f64, _>(StandardNormal)
        });
        let eps = DVector::from_fn(n, |_, _| self.noise * rng.sample::<f64, _>(StandardNormal));
        let y = self.truth.transpose_multiply_vec(&x)? + eps;
        let residual = w.transpose_multiply_vec(&x)? - y;
        LowRankGradient::new(
            DMatrix::from_column_slice(m, 1, x.as_slice()),
            DMatrix::from_column_slice(n, 1, residual.as_slice()),
        )
    }

    fn exact_objective(&self, w: &FactoredMatrix) -> Result<f64> {
        let n = self.shape().1 as f64;
        Ok(0.5 * self.curvature() * w.distance_sq(&self.truth)? + 0.5 * n * self.noise.powi(2))
    }

    fn strong_convexity(&self) -> f64 {
        self.curvature()
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.curvature())
    }

    fn dense_gradient(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_shape(w, self.shape())?;
        Ok((w - self.truth.to_dense()?) * self.curvature())
    }

    fn dense_objective(&self, w: &DMatrix<f64>) -> Result<f64> {
        check_shape(w, self.shape())?;
        let n = self.shape().1 as f64;
        Ok(0.5 * self.curvature() * (w - self.truth.to_dense()?).norm_squared()
            + 0.5 * n * self.noise.powi(2))
    }

    fn reference_solution(&self, lambda: f64, domain: &Domain) -> Option<FactoredMatrix> {
        prox_nuclear(&self.truth, lambda / self.curvature(), 1.0, domain).ok()
    }
}
