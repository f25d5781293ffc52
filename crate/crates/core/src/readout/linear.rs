use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_math::{solve_ridge, Matrix};

/// Linear readout trained in closed form. A constant-1 feature is appended to
/// every embedding, so `weights` is `(D + 1) × C` with the bias in the last row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeReadout {
    weights: Matrix,
    lambda: f64,
    n_classes: usize,
}

/// Fits a ridge readout mapping the rows of `h` to one-hot targets.
pub fn ridge_fit(h: &Matrix, labels: &[usize], n_classes: usize, lambda: f64) -> Result<RidgeReadout> {
    let n = h.rows();
    if labels.len() != n {
        return Err(Error::Shape(format!("{n} embeddings but {} labels", labels.len())));
    }
    if n_classes == 0 {
        return Err(Error::Parameter("need at least one class".into()));
    }
    if n < n_classes {
        return Err(Error::Input(format!(
            "ridge readout needs at least as many samples as classes ({n} < {n_classes})"
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Input(format!("label {bad} outside 0..{n_classes}")));
    }
    let design = with_bias(h);
    let mut targets = Matrix::zeros(n, n_classes);
    for (i, &c) in labels.iter().enumerate() {
        targets[(i, c)] = 1.0;
    }
    let weights = solve_ridge(&design, &targets, lambda)?;
    Ok(RidgeReadout {
        weights,
        lambda,
        n_classes,
    })
}

/// `[h, 1]`.
fn with_bias(h: &Matrix) -> Matrix {
    let (n, d) = h.shape();
    let mut out = Vec::with_capacity(n * (d + 1));
    for row in h.iter_rows() {
        out.extend_from_slice(row);
        out.push(1.0);
    }
    Matrix::from_raw(n, d + 1, out)
}

impl RidgeReadout {
    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Embedding width `D` (without the bias feature).
    pub fn input_dim(&self) -> usize {
        self.weights.rows() - 1
    }

    /// Raw class scores, `n × C`.
    pub fn outputs(&self, h: &Matrix) -> Result<Matrix> {
        if h.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "readout expects {} features, got {}",
                self.input_dim(),
                h.cols()
            )));
        }
        with_bias(h).matmul(&self.weights)
    }

    pub fn predict_linear(&self, h: &Matrix) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.outputs(h)?))
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    m.iter_rows().map(argmax).collect()
}
