use crate::error::{Error, Result};
use crate::tensor_math::matrix::Matrix;
use crate::tensor_math::rng::SeededRng;

/// Square sparse matrix in compressed-row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    density: f64,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicates and out-of-range
    /// indices are rejected.
    pub fn from_triplets(dim: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("sparse matrix dimension must be positive".into()));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &entries {
            if r >= dim || c >= dim {
                return Err(Error::Shape(format!("entry ({r}, {c}) outside {dim}x{dim}")));
            }
            if last == Some((r, c)) {
                return Err(Error::Input(format!("duplicate sparse entry ({r}, {c})")));
            }
            if !v.is_finite() {
                return Err(Error::Input(format!("non-finite sparse entry ({r}, {c})")));
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let density = entries.len() as f64 / (dim * dim) as f64;
        Ok(Self {
            dim,
            density,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fraction of stored entries, `nnz / dim²`.
    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// `y = self · x`; lengths are the caller's responsibility.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *out = self.col_idx[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "cannot multiply {0}x{0} sparse matrix by vector of length {1}",
                self.dim,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.dim];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    pub fn scale_in_place(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Whether the directed graph of nonzero entries contains a cycle.
    ///
    /// An acyclic pattern means the matrix is nilpotent, so its spectral radius
    /// is exactly zero regardless of the stored values.
    pub fn has_cycle(&self) -> bool {
        let mut indegree = vec![0usize; self.dim];
        for (r, c, v) in self.entries() {
            if v != 0.0 && r != c {
                indegree[c] += 1;
            } else if v != 0.0 {
                return true;
            }
        }
        let mut queue: Vec<usize> = (0..self.dim).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(r) = queue.pop() {
            visited += 1;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                if self.values[k] != 0.0 && c != r {
                    indegree[c] -= 1;
                    if indegree[c] == 0 {
                        queue.push(c);
                    }
                }
            }
        }
        visited < self.dim
    }
}

/// Dense `rows × cols` matrix with i.i.d. entries uniform on `[-scale, scale]`.
pub fn random_dense(rng: &mut SeededRng, rows: usize, cols: usize, scale: f64) -> Result<Matrix> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Parameter(format!("scale must be positive and finite, got {scale}")));
    }
    let data = (0..rows * cols).map(|_| rng.uniform(-scale, scale)).collect();
    Ok(Matrix::from_raw(rows, cols, data))
}

/// Square sparse matrix with `round(density · dim²)` (at least one) nonzero
/// positions drawn without replacement and values uniform on `[-1, 1]`.
pub fn random_sparse(rng: &mut SeededRng, dim: usize, density: f64) -> Result<SparseMatrix> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Parameter(format!("density must lie in (0, 1], got {density}")));
    }
    if dim == 0 {
        return Err(Error::Parameter("sparse matrix dimension must be positive".into()));
    }
    let cells = dim * dim;
    let count = ((density * cells as f64).round() as usize).clamp(1, cells);
    let positions = rng.sample_indices(cells, count);
    let entries = positions
        .into_iter()
        .map(|p| (p / dim, p % dim, rng.uniform(-1.0, 1.0)))
        .collect();
    SparseMatrix::from_triplets(dim, entries)
}
