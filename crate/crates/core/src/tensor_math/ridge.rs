use crate::error::{Error, Result};
use crate::tensor_math::matrix::Matrix;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Fails with [`Error::Singular`] when a pivot is not safely positive.
    pub fn factor(g: &Matrix) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::Shape(format!(
                "Cholesky needs a square matrix, got {}x{}",
                g.rows(),
                g.cols()
            )));
        }
        let n = g.rows();
        let max_diag = (0..n).map(|i| g[(i, i)].abs()).fold(0.0, f64::max);
        let floor = (n.max(1) as f64) * f64::EPSILON * max_diag;
        let mut lower = vec![0.0; n * n];
        for j in 0..n {
            let row_j = &lower[j * n..j * n + j];
            let pivot = g[(j, j)] - row_j.iter().map(|v| v * v).sum::<f64>();
            if !(pivot > floor) {
                return Err(Error::Singular(format!(
                    "normal matrix is not positive definite (pivot {pivot:e} at column {j})"
                )));
            }
            let d = pivot.sqrt();
            lower[j * n + j] = d;
            for i in j + 1..n {
                let s: f64 = (0..j).map(|k| lower[i * n + k] * lower[j * n + k]).sum();
                lower[i * n + j] = (g[(i, j)] - s) / d;
            }
        }
        Ok(Self { n, lower })
    }

    /// Solves `L Lᵀ X = B` column by column.
    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        let n = self.n;
        if b.rows() != n {
            return Err(Error::Shape(format!(
                "right-hand side has {} rows, factor is {n}x{n}",
                b.rows()
            )));
        }
        let k = b.cols();
        let mut x = b.clone();
        let data = x.as_mut_slice();
        for c in 0..k {
            for i in 0..n {
                let mut s = data[i * k + c];
                for j in 0..i {
                    s -= self.lower[i * n + j] * data[j * k + c];
                }
                data[i * k + c] = s / self.lower[i * n + i];
            }
            for i in (0..n).rev() {
                let mut s = data[i * k + c];
                for j in i + 1..n {
                    s -= self.lower[j * n + i] * data[j * k + c];
                }
                data[i * k + c] = s / self.lower[i * n + i];
            }
        }
        Ok(x)
    }
}

/// Minimizer of `‖a W − b‖² + λ‖W‖²`, solved through the normal equations
/// `(aᵀa + λI) W = aᵀb` by Cholesky plus one step of iterative refinement.
pub fn solve_ridge(a: &Matrix, b: &Matrix, lambda: f64) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::Shape(format!(
            "design has {} rows but targets have {}",
            a.rows(),
            b.rows()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("ridge lambda must be >= 0, got {lambda}")));
    }
    let mut gram = a.t_matmul(a)?;
    for i in 0..gram.rows() {
        gram[(i, i)] += lambda;
    }
    let rhs = a.t_matmul(b)?;
    let chol = Cholesky::factor(&gram)?;
    let mut w = chol.solve(&rhs)?;
    let residual = rhs.sub(&gram.matmul(&w)?)?;
    let correction = chol.solve(&residual)?;
    for (v, d) in w.as_mut_slice().iter_mut().zip(correction.as_slice()) {
        *v += d;
    }
    Ok(w)
}
