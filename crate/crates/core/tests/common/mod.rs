#![allow(dead_code)]

use bdesn::tensor_math::{Matrix, SeededRng, SparseMatrix};
use nalgebra::DMatrix;

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> Matrix {
    let mut data = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            data.push(m[(i, j)]);
        }
    }
    Matrix::from_vec(m.nrows(), m.ncols(), data).unwrap()
}

/// Largest eigenvalue modulus of a dense matrix via nalgebra's Schur form.
pub fn dense_radius(m: &Matrix) -> f64 {
    to_na(m)
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn sparse_radius(m: &SparseMatrix) -> f64 {
    dense_radius(&m.to_dense())
}

pub fn gaussian(rng: &mut SeededRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

pub fn symmetric(rng: &mut SeededRng, n: usize) -> Matrix {
    let g = gaussian(rng, n, n);
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = 0.5 * (g[(i, j)] + g[(j, i)]);
        }
    }
    s
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Gradients flattened in the same order as `MlpModel::parameters`.
pub fn flat_gradients(g: &bdesn::readout::Gradients) -> Vec<f64> {
    let mut out = Vec::new();
    for (w, b) in g.weights.iter().zip(&g.biases) {
        out.extend_from_slice(w.as_slice());
        out.extend_from_slice(b);
    }
    out
}

/// `|a − b| / max(|a|, |b|, floor)`. The floor keeps entries that are zero
/// up to rounding from dominating the comparison.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Largest relative error between backprop and central differences of the
/// full loss, over every parameter. In train mode the dropout masks are
/// reproduced by reseeding for each evaluation.
pub fn fd_max_rel_error(
    model: &bdesn::readout::MlpModel,
    x: &Matrix,
    labels: &[usize],
    mode: bdesn::readout::Mode,
    mask_seed: u64,
) -> f64 {
    let (_, _, g) = model.gradients(x, labels, mode, &mut SeededRng::new(mask_seed)).unwrap();
    let analytic = flat_gradients(&g);
    let base = model.parameters();
    let mut probe = model.clone();
    let eval = |m: &bdesn::readout::MlpModel| {
        m.gradients(x, labels, mode, &mut SeededRng::new(mask_seed)).unwrap().1
    };
    let step = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..base.len() {
        let mut p = base.clone();
        p[k] = base[k] + step;
        probe.set_parameters(&p).unwrap();
        let up = eval(&probe);
        p[k] = base[k] - step;
        probe.set_parameters(&p).unwrap();
        let down = eval(&probe);
        let numeric = (up - down) / (2.0 * step);
        worst = worst.max(rel_err(analytic[k], numeric, 1e-7));
    }
    worst
}

/// Brute-force reference for classification metrics. Every count is taken
/// straight from the prediction/label pairs, never from a confusion matrix.
pub struct OracleMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub confusion: Vec<Vec<usize>>,
}

pub fn oracle_metrics(predicted: &[usize], actual: &[usize], n_classes: usize, positive: Option<usize>) -> OracleMetrics {
    let pairs: Vec<(usize, usize)> = predicted.iter().copied().zip(actual.iter().copied()).collect();
    let count = |f: &dyn Fn(usize, usize) -> bool| pairs.iter().filter(|&&(p, a)| f(p, a)).count();
    let confusion = (0..n_classes)
        .map(|a| (0..n_classes).map(|p| count(&|pp, aa| pp == p && aa == a)).collect())
        .collect();
    let accuracy = count(&|p, a| p == a) as f64 / pairs.len() as f64;
    let f1_of = |c: usize| {
        let tp = count(&|p, a| p == c && a == c);
        let fp = count(&|p, a| p == c && a != c);
        let fn_ = count(&|p, a| p != c && a == c);
        if tp + fp + fn_ == 0 {
            1.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        }
    };
    let f1 = match positive.or((n_classes == 2).then_some(1)) {
        Some(c) => f1_of(c),
        None => {
            let present: Vec<usize> = (0..n_classes)
                .filter(|&c| pairs.iter().any(|&(p, a)| p == c || a == c))
                .collect();
            present.iter().map(|&c| f1_of(c)).sum::<f64>() / present.len() as f64
        }
    };
    OracleMetrics {
        accuracy,
        f1,
        confusion,
    }
}
