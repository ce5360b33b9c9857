//! Thin-SVD matrix representation and the algebra that never leaves it.
//!
//! A [`FactoredMatrix`] stores `W = U diag(σ) Vᵀ` with column-orthonormal
//! `U` (m x r), `V` (n x r) and strictly positive, non-increasing `σ`. Rank 0
//! is the zero matrix with empty blocks. Only [`FactoredMatrix::from_dense`]
//! and [`FactoredMatrix::to_dense`] touch `m * n` storage, and both are fenced
//! by a global dense-size cap.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ortho;
use crate::{Error, Result};

/// Max-entry tolerance on `UᵀU - I` and `VᵀV - I`.
pub const ORTHONORMALITY_TOL: f64 = 1e-10;

/// Default cap on `m * n` for the dense bridges.
pub const DEFAULT_DENSE_CAP: usize = 4_000_000;

static DENSE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DENSE_CAP);

pub fn dense_cap() -> usize {
    DENSE_CAP.load(Ordering::Relaxed)
}

/// Changes the global dense-size cap. Intended for tests and tooling.
pub fn set_dense_cap(entries: usize) {
    DENSE_CAP.store(entries, Ordering::Relaxed);
}

pub(crate) fn check_dense_cap(m: usize, n: usize) -> Result<()> {
    let entries = m.saturating_mul(n);
    let cap = dense_cap();
    if entries > cap {
        return Err(Error::DenseCapExceeded { entries, cap });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactoredMatrix {
    m: usize,
    n: usize,
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    v: DMatrix<f64>,
}

impl FactoredMatrix {
    /// The `m x n` zero matrix (rank 0).
    pub fn zeros(m: usize, n: usize) -> Self {
        assert!(m >= 1 && n >= 1, "matrix dimensions must be positive");
        FactoredMatrix {
            m,
            n,
            u: DMatrix::zeros(m, 0),
            sigma: DVector::zeros(0),
            v: DMatrix::zeros(n, 0),
        }
    }

    /// Builds a factored matrix from explicit factors.
    ///
    /// Singular values are sorted non-increasing (columns permuted to match)
    /// and zeros are dropped. Negative or non-finite values and
    /// non-orthonormal blocks are rejected.
    pub fn from_parts(u: DMatrix<f64>, sigma: DVector<f64>, v: DMatrix<f64>) -> Result<Self> {
        let r = sigma.len();
        if u.ncols() != r || v.ncols() != r {
            return Err(Error::dims(
                "from_parts",
                format!("{r} columns in U and V"),
                format!("{} and {}", u.ncols(), v.ncols()),
            ));
        }
        if u.nrows() == 0 || v.nrows() == 0 {
            return Err(Error::InvalidArgument("matrix dimensions must be positive".into()));
        }
        if sigma.iter().chain(u.iter()).chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("factors"));
        }
        if sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidArgument("singular values must be non-negative".into()));
        }

        let mut order: Vec<usize> = (0..r).filter(|&i| sigma[i] > 0.0).collect();
        order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
        let f = Self::select(u.nrows(), v.nrows(), &u, &sigma, &v, &order);
        f.validate()?;
        Ok(f)
    }

    /// Internal constructor for factors already known to satisfy the
    /// invariants; checked in debug builds only.
    pub(crate) fn from_parts_unchecked(
        u: DMatrix<f64>,
        sigma: DVector<f64>,
        v: DMatrix<f64>,
    ) -> Self {
        let f = FactoredMatrix {
            m: u.nrows(),
            n: v.nrows(),
            u,
            sigma,
            v,
        };
        debug_assert!(f.validate().is_ok(), "{:?}", f.validate());
        f
    }

    fn select(
        m: usize,
        n: usize,
        u: &DMatrix<f64>,
        sigma: &DVector<f64>,
        v: &DMatrix<f64>,
        idx: &[usize],
    ) -> Self {
        FactoredMatrix {
            m,
            n,
            u: u.select_columns(idx),
            sigma: DVector::from_iterator(idx.len(), idx.iter().map(|&i| sigma[i])),
            v: v.select_columns(idx),
        }
    }

    /// A random matrix with the given singular values and Haar-like random
    /// singular vectors (orthonormalized Gaussian blocks).
    pub fn random_with_spectrum(m: usize, n: usize, spectrum: &[f64], seed: u64) -> Result<Self> {
        let r = spectrum.len();
        if r > m.min(n) {
            return Err(Error::InvalidArgument(format!(
                "rank {r} exceeds min({m}, {n})"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_orthonormal(m, r, &mut rng);
        let v = random_orthonormal(n, r, &mut rng);
        Self::from_parts(u, DVector::from_column_slice(spectrum), v)
    }

    /// Thin SVD of a dense matrix, dropping singular values below
    /// `tol * σ_max`. Test and tooling bridge only: refuses inputs above the
    /// dense-size cap.
    pub fn from_dense(d: &DMatrix<f64>, tol: f64) -> Result<Self> {
        let (m, n) = d.shape();
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("matrix dimensions must be positive".into()));
        }
        check_dense_cap(m, n)?;
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("dense input"));
        }
        let svd = ortho::jacobi_svd(d);
        let smax = svd.sigma.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..svd.sigma.len())
            .filter(|&i| svd.sigma[i] >= tol * smax && svd.sigma[i] > 0.0)
            .collect();
        Ok(Self::select(m, n, &svd.u, &svd.sigma, &svd.v, &keep))
    }

    /// `U diag(σ) Vᵀ` as a dense matrix. Refuses inputs above the dense-size cap.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        check_dense_cap(self.m, self.n)?;
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        Ok(us * self.v.transpose())
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        (self.u, self.sigma, self.v)
    }

    /// Sum of singular values.
    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }

    /// Largest singular value (spectral norm); 0 for rank 0.
    pub fn spectral_norm(&self) -> f64 {
        self.sigma.iter().copied().next().unwrap_or(0.0)
    }

    /// `W Y` computed as `U (diag(σ) (Vᵀ Y))`, never forming `W`.
    pub fn multiply_right(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if y.nrows() != self.n {
            return Err(Error::dims(
                "multiply_right",
                format!("{} rows", self.n),
                format!("{} rows", y.nrows()),
            ));
        }
        let mut core = self.v.tr_mul(y);
        for (i, s) in self.sigma.iter().enumerate() {
            core.row_mut(i).scale_mut(*s);
        }
        Ok(&self.u * core)
    }

    /// `Wᵀ x` for a single vector, as `V (diag(σ) (Uᵀ x))`.
    pub fn transpose_multiply_vec(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.m {
            return Err(Error::dims(
                "transpose_multiply_vec",
                format!("length {}", self.m),
                format!("length {}", x.len()),
            ));
        }
        let coeff = self.u.tr_mul(x).component_mul(&self.sigma);
        Ok(&self.v * coeff)
    }

    /// `scale * W[:, indices]`: selected columns of `W`, each scaled.
    pub fn scaled_columns(&self, indices: &[usize], scale: f64) -> Result<DMatrix<f64>> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::dims(
                "scaled_columns",
                format!("column index < {}", self.n),
                bad,
            ));
        }
        let mut core = DMatrix::zeros(self.rank(), indices.len());
        for (l, &i) in indices.iter().enumerate() {
            for j in 0..self.rank() {
                core[(j, l)] = scale * self.sigma[j] * self.v[(i, j)];
            }
        }
        Ok(&self.u * core)
    }

    /// Frobenius inner product `⟨W, Z⟩ = tr(Wᵀ Z)` through `r x r` blocks.
    pub fn inner_product(&self, other: &FactoredMatrix) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                "inner_product",
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        let uu = self.u.tr_mul(&other.u);
        let vv = self.v.tr_mul(&other.v);
        let mut acc = 0.0;
        for i in 0..self.rank() {
            for j in 0..other.rank() {
                acc += self.sigma[i] * other.sigma[j] * uu[(i, j)] * vv[(i, j)];
            }
        }
        Ok(acc)
    }

    /// `‖W - Z‖_F²` without forming either matrix.
    pub fn distance_sq(&self, other: &FactoredMatrix) -> Result<f64> {
        let cross = self.inner_product(other)?;
        Ok((self.frobenius_norm_sq() + other.frobenius_norm_sq() - 2.0 * cross).max(0.0))
    }

    /// Same singular vectors, every singular value multiplied by `factor > 0`.
    pub(crate) fn scale_sigma(&self, factor: f64) -> Self {
        debug_assert!(factor > 0.0);
        FactoredMatrix {
            m: self.m,
            n: self.n,
            u: self.u.clone(),
            sigma: &self.sigma * factor,
            v: self.v.clone(),
        }
    }

    /// Keeps the leading `count` singular triplets, replacing their values.
    pub(crate) fn with_leading(&self, sigma: DVector<f64>) -> Self {
        let count = sigma.len();
        FactoredMatrix {
            m: self.m,
            n: self.n,
            u: self.u.columns(0, count).clone_owned(),
            sigma,
            v: self.v.columns(0, count).clone_owned(),
        }
    }

    /// Max-entry deviation of `UᵀU` and `VᵀV` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        ortho::orthonormality_error(&self.u).max(ortho::orthonormality_error(&self.v))
    }

    /// Checks every representation invariant.
    pub fn validate(&self) -> Result<()> {
        let r = self.rank();
        if self.u.shape() != (self.m, r) || self.v.shape() != (self.n, r) {
            return Err(Error::dims(
                "validate",
                format!("U {}x{r}, V {}x{r}", self.m, self.n),
                format!("U {:?}, V {:?}", self.u.shape(), self.v.shape()),
            ));
        }
        if r > self.m.min(self.n) {
            return Err(Error::InvalidArgument(format!(
                "rank {r} exceeds min({}, {})",
                self.m, self.n
            )));
        }
        if self.sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument("singular values must be positive and finite".into()));
        }
        if self.sigma.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("singular values must be non-increasing".into()));
        }
        let deviation = self.orthonormality_error();
        if deviation > ORTHONORMALITY_TOL {
            return Err(Error::NotOrthonormal {
                deviation,
                tolerance: ORTHONORMALITY_TOL,
            });
        }
        Ok(())
    }
}

fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    loop {
        let g = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
        let (q, _) = ortho::complement_basis(&DMatrix::zeros(rows, 0), &g, 1e-10);
        if q.ncols() == cols {
            return q;
        }
    }
}

/// A stochastic gradient sketch `Ĝ = A Bᵀ`, kept as its two thin factors.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankGradient {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LowRankGradient {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.ncols() != b.ncols() {
            return Err(Error::dims(
                "LowRankGradient::new",
                format!("{} columns in B", a.ncols()),
                b.ncols(),
            ));
        }
        Ok(LowRankGradient { a, b })
    }

    /// The zero gradient, with width 0.
    pub fn zeros(m: usize, n: usize) -> Self {
        LowRankGradient {
            a: DMatrix::zeros(m, 0),
            b: DMatrix::zeros(n, 0),
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn width(&self) -> usize {
        self.a.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.a.nrows(), self.b.nrows())
    }

    /// `‖A Bᵀ‖_F² = Σ (AᵀA) ∘ (BᵀB)`.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.a.tr_mul(&self.a).component_mul(&self.b.tr_mul(&self.b)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(self.b.iter()).all(|x| x.is_finite())
    }

    /// `A Bᵀ` as a dense matrix, subject to the dense-size cap.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let (m, n) = self.shape();
        check_dense_cap(m, n)?;
        Ok(&self.a * self.b.transpose())
    }
}
