//! Spectral radius by block power iteration.
//!
//! A random non-symmetric matrix frequently has a complex-conjugate pair as its
//! dominant eigenvalues, on which single-vector power iteration oscillates
//! forever. Iterating a small orthonormal block instead and reading the
//! dominant modulus off the block's Rayleigh quotient (Rayleigh-Ritz) converges
//! for real and complex dominant eigenvalues alike.

use crate::error::{Error, Result};
use crate::tensor_math::eig::general_eigenvalues;
use crate::tensor_math::matrix::{dot, Matrix};
use crate::tensor_math::rng::SeededRng;
use crate::tensor_math::sparse::SparseMatrix;

const BLOCK: usize = 16;
/// Iterations without a new smallest relative change before a restart.
const STALL_WINDOW: usize = 1000;
/// Consecutive iterations that must satisfy the tolerance.
const CONFIRMATIONS: usize = 2;
const START_SEED: u64 = 0x5e_ed0f_b10c;

/// A square linear map that can be applied to vectors.
pub trait SquareOperator {
    fn dim(&self) -> Result<usize>;

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// True when the nonzero pattern alone forces every eigenvalue to zero.
    fn is_structurally_nilpotent(&self) -> bool {
        false
    }
}

impl SquareOperator for Matrix {
    fn dim(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows())
        } else {
            Err(Error::Shape(format!(
                "spectral radius needs a square matrix, got {}x{}",
                self.rows(),
                self.cols()
            )))
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (out, row) in y.iter_mut().zip(self.iter_rows()) {
            *out = dot(row, x);
        }
    }

    fn is_structurally_nilpotent(&self) -> bool {
        let n = self.rows();
        let entries = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self[(i, j)] != 0.0)
            .map(|(i, j)| (i, j, self[(i, j)]))
            .collect();
        SparseMatrix::from_triplets(n.max(1), entries).is_ok_and(|s| !s.has_cycle())
    }
}

impl SquareOperator for SparseMatrix {
    fn dim(&self) -> Result<usize> {
        Ok(SparseMatrix::dim(self))
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y);
    }

    fn is_structurally_nilpotent(&self) -> bool {
        !self.has_cycle()
    }
}

/// Largest absolute eigenvalue of `m`, iterated until the relative change of
/// the estimate stays below `tol`.
///
/// The starting block is drawn from a fixed seed, so the result is a pure
/// function of `m`. When progress stalls the block is redrawn from the next
/// substream.
pub fn spectral_radius<M: SquareOperator + ?Sized>(m: &M, tol: f64, max_iter: usize) -> Result<f64> {
    let n = m.dim()?;
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    if n == 0 {
        return Err(Error::Parameter("spectral radius of an empty matrix".into()));
    }
    if m.is_structurally_nilpotent() {
        return Ok(0.0);
    }
    let k = n.min(BLOCK);
    let mut restarts = 0u64;
    let mut rng = SeededRng::with_stream(START_SEED, restarts);
    let mut basis = random_block(&mut rng, n, k);
    orthonormalize(&mut basis, &mut rng);

    let mut image = vec![vec![0.0; n]; k];
    let mut estimate = f64::NAN;
    let mut confirmed = 0;
    let mut best_change = f64::INFINITY;
    let mut since_best = 0;

    for _ in 0..max_iter {
        for (q, z) in basis.iter().zip(image.iter_mut()) {
            m.apply(q, z);
        }
        if image.iter().all(|z| z.iter().all(|&v| v == 0.0)) {
            // A annihilates a generic block: the zero matrix.
            return Ok(0.0);
        }

        let mut rayleigh = Matrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                rayleigh[(i, j)] = dot(&basis[i], &image[j]);
            }
        }
        let next = general_eigenvalues(&rayleigh)?
            .into_iter()
            .map(|(re, im)| re.hypot(im))
            .fold(0.0, f64::max);

        let change = (next - estimate).abs() / next.max(f64::MIN_POSITIVE);
        estimate = next;
        if change < tol {
            confirmed += 1;
            if confirmed >= CONFIRMATIONS {
                return Ok(estimate);
            }
        } else {
            confirmed = 0;
        }

        if change < best_change {
            best_change = change;
            since_best = 0;
        } else {
            since_best += 1;
        }

        if since_best >= STALL_WINDOW {
            restarts += 1;
            rng = SeededRng::with_stream(START_SEED, restarts);
            basis = random_block(&mut rng, n, k);
            best_change = f64::INFINITY;
            since_best = 0;
            confirmed = 0;
        } else {
            std::mem::swap(&mut basis, &mut image);
        }
        orthonormalize(&mut basis, &mut rng);
    }
    Err(Error::Convergence {
        iterations: max_iter,
        last_estimate: estimate,
    })
}

fn random_block(rng: &mut SeededRng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .collect()
}

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns that
/// collapse numerically are replaced with fresh random directions.
fn orthonormalize(block: &mut [Vec<f64>], rng: &mut SeededRng) {
    let n = block.first().map_or(0, Vec::len);
    for j in 0..block.len() {
        let mut attempts = 0;
        loop {
            let original = dot(&block[j], &block[j]).sqrt();
            for _ in 0..2 {
                for i in 0..j {
                    let (done, rest) = block.split_at_mut(j);
                    let proj = dot(&done[i], &rest[0]);
                    for (v, q) in rest[0].iter_mut().zip(&done[i]) {
                        *v -= proj * q;
                    }
                }
            }
            let norm = dot(&block[j], &block[j]).sqrt();
            if norm > 1e-10 * original && norm > 0.0 {
                for v in &mut block[j] {
                    *v /= norm;
                }
                break;
            }
            attempts += 1;
            block[j] = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
            if attempts > 8 {
                // Only possible when j >= n, which BLOCK <= n rules out.
                break;
            }
        }
    }
}
