//! PCA compression of reservoir embeddings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_math::{dot, sign_of_dominant, sym_eig, Matrix};

/// Eigenvalues at or below this fraction of the largest one count as zero.
const RANK_RTOL: f64 = 1e-12;

/// A fitted linear or non-linear reduction from `input_dim` to `output_dim`
/// coordinates. PCA is the only implementation; kernel variants slot in here.
pub trait DimReducer {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn transform(&self, x: &Matrix) -> Result<Matrix>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `D × d`, orthonormal columns.
    components: Matrix,
    /// Descending, length `d`.
    eigenvalues: Vec<f64>,
}

/// Fits PCA on the rows of `x` (`n × D`) keeping `d` components.
///
/// Components are the top eigenvectors of the sample covariance (`1/(n−1)`).
/// When `n < D` the `n × n` Gram matrix is decomposed instead and its
/// eigenvectors are mapped back, which yields the same subspace at a fraction
/// of the cost. Each component's largest-magnitude entry is positive.
pub fn pca_fit(x: &Matrix, d: usize) -> Result<PcaModel> {
    let (n, dim) = x.shape();
    if n < 2 {
        return Err(Error::Input(format!("PCA needs at least 2 samples, got {n}")));
    }
    if d == 0 || d > n.min(dim) {
        return Err(Error::Parameter(format!(
            "PCA dimension must lie in 1..={}, got {d}",
            n.min(dim)
        )));
    }

    let mut mean = vec![0.0; dim];
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = center(x, &mean);
    let denom = (n - 1) as f64;

    let (eigenvalues, mut columns) = if n >= dim {
        let cov = centered.t_matmul(&centered)?.scaled(1.0 / denom);
        let eig = sym_eig(&symmetrize(cov))?;
        check_rank(&eig.values, d)?;
        let cols = (0..d).map(|j| eig.vectors.column(j)).collect::<Vec<_>>();
        (eig.values[..d].to_vec(), cols)
    } else {
        let gram = centered.matmul_t(&centered)?.scaled(1.0 / denom);
        let eig = sym_eig(&symmetrize(gram))?;
        check_rank(&eig.values, d)?;
        let ct = centered.transpose();
        let cols = (0..d)
            .map(|j| {
                let u = eig.vectors.column(j);
                let scale = 1.0 / (denom * eig.values[j]).sqrt();
                ct.matvec(&u).map(|v| v.into_iter().map(|c| c * scale).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        (eig.values[..d].to_vec(), cols)
    };

    // Polish orthonormality; the Gram route loses a little for small eigenvalues.
    for j in 0..columns.len() {
        for _ in 0..2 {
            for i in 0..j {
                let proj = dot(&columns[i], &columns[j]);
                let (done, rest) = columns.split_at_mut(j);
                for (v, q) in rest[0].iter_mut().zip(&done[i]) {
                    *v -= proj * q;
                }
            }
        }
        let norm = dot(&columns[j], &columns[j]).sqrt();
        let sign = sign_of_dominant(&columns[j]);
        for v in &mut columns[j] {
            *v *= sign / norm;
        }
    }

    let mut components = Matrix::zeros(dim, d);
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            components[(i, j)] = v;
        }
    }
    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
    })
}

fn check_rank(values: &[f64], d: usize) -> Result<()> {
    let top = values.first().copied().unwrap_or(0.0);
    let floor = top.max(0.0) * RANK_RTOL;
    if !(top > 0.0) || values[d - 1] <= floor {
        let rank = values.iter().take_while(|&&v| v > floor && top > 0.0).count();
        return Err(Error::Parameter(format!(
            "PCA dimension {d} exceeds the numerical rank {rank} of the training embeddings"
        )));
    }
    Ok(())
}

fn symmetrize(m: Matrix) -> Matrix {
    let mut s = m;
    let n = s.rows();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    s
}

fn center(x: &Matrix, mean: &[f64]) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        for (v, m) in out.row_mut(i).iter_mut().zip(mean) {
            *v -= m;
        }
    }
    out
}

impl PcaModel {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &Matrix {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn d(&self) -> usize {
        self.components.cols()
    }

    /// `(x − mean) · components`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::Shape(format!(
                "PCA expects {} columns, got {}",
                self.mean.len(),
                x.cols()
            )));
        }
        center(x, &self.mean).matmul(&self.components)
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        let m = Matrix::from_vec(1, row.len(), row.to_vec())?;
        Ok(self.transform(&m)?.into_vec())
    }

    /// Maps projected coordinates back to the input space.
    pub fn reconstruct(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.d() {
            return Err(Error::Shape(format!(
                "reconstruction expects {} columns, got {}",
                self.d(),
                z.cols()
            )));
        }
        let mut out = z.matmul_t(&self.components)?;
        for i in 0..out.rows() {
            for (v, m) in out.row_mut(i).iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(out)
    }
}

impl DimReducer for PcaModel {
    fn input_dim(&self) -> usize {
        self.mean.len()
    }

    fn output_dim(&self) -> usize {
        self.d()
    }

    fn transform(&self, x: &Matrix) -> Result<Matrix> {
        PcaModel::transform(self, x)
    }
}
