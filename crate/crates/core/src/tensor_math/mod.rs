//! Deterministic dense and sparse linear-algebra kernels.

mod eig;
mod matrix;
mod ridge;
mod rng;
mod sparse;
mod spectral;

pub use eig::{general_eigenvalues, sym_eig, SymEigen};
pub(crate) use eig::sign_of_dominant;
pub use matrix::{dot, norm2, Matrix};
pub use ridge::{solve_ridge, Cholesky};
pub use rng::SeededRng;
pub use sparse::{random_dense, random_sparse, SparseMatrix};
pub use spectral::{spectral_radius, SquareOperator};
