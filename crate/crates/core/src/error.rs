use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("dense bridge refused: {entries} entries exceeds the dense-size cap of {cap}")]
    DenseCapExceeded { entries: usize, cap: usize },

    #[error("core SVD refused: {rows}x{cols} core exceeds the small-core cap of {cap}")]
    CoreCapExceeded { rows: usize, cols: usize, cap: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("factors not orthonormal: max deviation {deviation:e} exceeds {tolerance:e}")]
    NotOrthonormal { deviation: f64, tolerance: f64 },

    #[error(
        "iterate rank {rank} exceeds the rank budget {budget} at iteration {t}; \
         increase lambda or the budget"
    )]
    RankBudgetExceeded { t: usize, rank: usize, budget: usize },

    #[error("non-finite objective at iteration {t}")]
    NonFiniteObjective { t: usize },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
}

impl Error {
    pub(crate) fn dims(
        op: &'static str,
        expected: impl std::fmt::Display,
        found: impl std::fmt::Display,
    ) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    /// Numerical failures mid-run, as opposed to bad inputs.
    pub fn is_numerical_abort(&self) -> bool {
        matches!(
            self,
            Error::RankBudgetExceeded { .. }
                | Error::NonFiniteObjective { .. }
                | Error::NonFinite(_)
                | Error::CoreCapExceeded { .. }
                | Error::NoConvergence { .. }
        )
    }
}
