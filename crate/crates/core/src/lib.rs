//! Stochastic proximal gradient descent for nuclear-norm regularized problems
//! over `m x n` matrices, run entirely in low-rank factored form.
//!
//! Every iterate is a thin SVD ([`FactoredMatrix`]) and every stochastic
//! gradient is an outer-product pair ([`LowRankGradient`]), so one iteration
//! needs `O((m + n) * rank)` memory instead of `O(m * n)`.
//!
//! The pieces, bottom-up:
//!
//! * [`factored`]: the thin-SVD representation and its algebra.
//! * [`incsvd`]: thin SVD of `X + A Bᵀ` from the thin SVD of `X`.
//! * [`prox`]: singular value shrinkage, Frobenius-ball projection and the
//!   dual/KKT diagnostic for their composition.
//! * [`probing`]: random probing matrices with `E[Y Yᵀ] = I`.
//! * [`problems`]: the stochastic gradient oracle trait and two synthetic
//!   problems with closed-form optima.
//! * [`solver`]: the SPGD loop, step-size schedules and a dense baseline.
//! * [`cli`]: experiment configs, CSV traces and verification checks behind
//!   the `spgd` binary.
//!
//! Runnable walkthroughs of each capability live in `examples/`.

pub mod alloc_track;
pub mod cli;
mod error;
pub mod factored;
pub mod incsvd;
mod ortho;
pub mod probing;
pub mod problems;
pub mod prox;
pub mod solver;

pub use error::{Error, Result};
pub use factored::{FactoredMatrix, LowRankGradient};
pub use incsvd::{incremental_update, UpdateConfig};
pub use probing::{Distribution, ProbingMatrix};
pub use problems::{FactoredLeastSquares, GradientOracle, MultivariateRegression};
pub use prox::{kkt_dual_check, prox_nuclear, Domain, KktReport};
pub use solver::{dense_baseline_solve, spgd_solve, SolveResult, SolverConfig, StepSchedule};
