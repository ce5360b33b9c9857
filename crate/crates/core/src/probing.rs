//! Random probing matrices: `n x k` matrices `Y` with `E[Y Yᵀ] = I`.
//!
//! Each family draws `Z` and returns `Y = Z / √k`:
//!
//! * [`Distribution::Rademacher`]: iid ±1 entries.
//! * [`Distribution::Gaussian`]: iid standard normal entries.
//! * [`Distribution::ScaledIdentityColumns`]: each column an independent,
//!   uniformly chosen `√n e_i` (with replacement).
//!
//! All draws are reproducible from an explicit seed.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default sketch width.
pub const DEFAULT_SKETCH_WIDTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Rademacher,
    Gaussian,
    #[serde(rename = "scaled_identity")]
    ScaledIdentityColumns,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [
        Distribution::Rademacher,
        Distribution::Gaussian,
        Distribution::ScaledIdentityColumns,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Rademacher => "rademacher",
            Distribution::Gaussian => "gaussian",
            Distribution::ScaledIdentityColumns => "scaled_identity",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "rademacher" => Ok(Distribution::Rademacher),
            "gaussian" | "normal" => Ok(Distribution::Gaussian),
            "scaled_identity" | "scaled_identity_columns" => {
                Ok(Distribution::ScaledIdentityColumns)
            }
            other => Err(Error::InvalidArgument(format!(
                "unknown probing distribution `{other}` \
                 (expected rademacher, gaussian or scaled_identity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbingMatrix {
    y: DMatrix<f64>,
    distribution: Distribution,
    seed: u64,
    /// Nonzero row of each column, for the scaled-identity family.
    indices: Option<Vec<usize>>,
}

impl ProbingMatrix {
    /// An `n x k` probing matrix from `distribution`, fully determined by `seed`.
    pub fn generate(distribution: Distribution, n: usize, k: usize, seed: u64) -> Result<Self> {
        check_shape(n, k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (y, indices) = draw(distribution, n, k, k, &mut rng);
        Ok(ProbingMatrix {
            y,
            distribution,
            seed,
            indices,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.y
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn k(&self) -> usize {
        self.y.ncols()
    }

    /// For the scaled-identity family: the row index of each column's single
    /// nonzero, which equals `√(n/k)`.
    pub fn column_indices(&self) -> Option<&[usize]> {
        self.indices.as_deref()
    }

    /// The common nonzero value `√(n/k)` of a scaled-identity column.
    pub fn column_scale(&self) -> f64 {
        (self.n() as f64 / self.k() as f64).sqrt()
    }
}

fn check_shape(n: usize, k: usize) -> Result<()> {
    if n < 1 || k < 1 {
        return Err(Error::InvalidArgument(format!(
            "probing matrix needs n >= 1 and k >= 1, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// `cols` columns of independent width-`k` probes, i.e. `cols / k` draws
/// side by side when `cols` is a multiple of `k`.
fn draw(
    distribution: Distribution,
    n: usize,
    k: usize,
    cols: usize,
    rng: &mut ChaCha8Rng,
) -> (DMatrix<f64>, Option<Vec<usize>>) {
    let inv_sqrt_k = 1.0 / (k as f64).sqrt();
    match distribution {
        Distribution::Rademacher => {
            let y = DMatrix::from_fn(n, cols, |_, _| {
                if rng.random::<bool>() {
                    inv_sqrt_k
                } else {
                    -inv_sqrt_k
                }
            });
            (y, None)
        }
        Distribution::Gaussian => {
            let y = DMatrix::from_fn(n, cols, |_, _| {
                let z: f64 = rng.sample(StandardNormal);
                z * inv_sqrt_k
            });
            (y, None)
        }
        Distribution::ScaledIdentityColumns => {
            let value = (n as f64).sqrt() * inv_sqrt_k;
            let indices: Vec<usize> = (0..cols).map(|_| rng.random_range(0..n)).collect();
            let mut y = DMatrix::zeros(n, cols);
            for (col, &row) in indices.iter().enumerate() {
                y[(row, col)] = value;
            }
            (y, Some(indices))
        }
    }
}

const ISOTROPY_BATCH_COLUMNS: usize = 4096;

/// Max-entry deviation of the sample mean of `Y Yᵀ` from the identity over
/// `num_samples` independent draws.
pub fn check_isotropy(
    distribution: Distribution,
    n: usize,
    k: usize,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_shape(n, k)?;
    if num_samples < 1 {
        return Err(Error::InvalidArgument("num_samples must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = DMatrix::<f64>::zeros(n, n);
    // Draws are generated in batches; Σ_i Y_i Y_iᵀ = Z Zᵀ for Z = [Y_1 ... Y_b].
    let batch = (ISOTROPY_BATCH_COLUMNS / k).max(1);
    let mut remaining = num_samples;
    while remaining > 0 {
        let b = batch.min(remaining);
        let (z, _) = draw(distribution, n, k, b * k, &mut rng);
        acc.gemm(1.0, &z, &z.transpose(), 1.0);
        remaining -= b;
    }
    acc /= num_samples as f64;
    for i in 0..n {
        acc[(i, i)] -= 1.0;
    }
    Ok(acc.amax())
}
