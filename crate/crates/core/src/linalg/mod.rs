//! Small dense real linear algebra: the numerical substrate for plant,
//! gain and Riccati computations. Sized for matrices up to roughly 16x16.

mod decomp;
mod eigen;
mod expm;
mod lyapunov;
mod matrix;
mod solve;

pub use decomp::{rank, singular_values, sqrt_psd, symmetric_eigen};
pub use eigen::{eigenvalues, Spectrum};
pub use expm::expm;
pub use lyapunov::{lyapunov_residual, solve_lyapunov};
pub use matrix::Matrix;
pub use solve::{inverse, solve_linear, Lu};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is numerically singular (pivot {pivot_index})")]
    Singular { pivot_index: usize },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("Lyapunov equation has no unique solution (eigenvalue pair sums to zero)")]
    NoUniqueSolution,
    #[error("matrix is not positive semi-definite")]
    NotPositiveSemidefinite,
}
