//! Datasets, the canonical CSV format, imputation, synthetic tasks, metrics
//! and one-way importers for public archives.

mod csv;
mod impute;
mod import;
mod metrics;
mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_math::Matrix;

pub use csv::{load_dataset, load_split, parse_split, save_dataset, save_split, write_split, CSV_MISSING};
pub use impute::{impute_mean, training_means};
pub use import::{import_archive, parse_ts, parse_ucr, parse_uci_japanese_vowels, ArchiveFormat, JAPANESE_VOWELS_TEST_COUNTS};
pub use metrics::{metrics, metrics_by_label, Metrics};
pub use synth::{synth_task, SynthKind};

/// A multivariate series of `T` timesteps over `V` variables, stored row-major.
/// Missing entries are `NaN`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub id: String,
    pub label: String,
    n_vars: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, label: impl Into<String>, n_vars: usize, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if n_vars == 0 {
            return Err(Error::Input(format!("series {id}: no variables")));
        }
        if values.is_empty() || !values.len().is_multiple_of(n_vars) {
            return Err(Error::Input(format!(
                "series {id}: {} values do not form whole timesteps of {n_vars} variables",
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::Input(format!("series {id}: infinite value")));
        }
        Ok(Self {
            id,
            label: label.into(),
            n_vars,
            values,
        })
    }

    pub fn from_matrix(id: impl Into<String>, label: impl Into<String>, m: &Matrix) -> Result<Self> {
        Self::new(id, label, m.cols(), m.as_slice().to_vec())
    }

    /// Number of timesteps `T`.
    pub fn len(&self) -> usize {
        self.values.len() / self.n_vars
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn step(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_vars..(t + 1) * self.n_vars]
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    /// `T × V` matrix; fails if any entry is missing.
    pub fn to_matrix(&self) -> Result<Matrix> {
        if self.has_missing() {
            return Err(Error::Input(format!(
                "series {} has missing values; impute first",
                self.id
            )));
        }
        Matrix::from_vec(self.len(), self.n_vars, self.values.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub train: Vec<TimeSeries>,
    pub test: Vec<TimeSeries>,
    n_vars: usize,
    classes: Vec<String>,
}

impl Dataset {
    /// Validates the splits. Classes are listed in order of first appearance
    /// in the training split; every test label must occur in training.
    pub fn new(name: impl Into<String>, train: Vec<TimeSeries>, test: Vec<TimeSeries>) -> Result<Self> {
        let name = name.into();
        let first = train
            .first()
            .ok_or_else(|| Error::Input(format!("dataset {name}: empty training split")))?;
        if test.is_empty() {
            return Err(Error::Input(format!("dataset {name}: empty test split")));
        }
        let n_vars = first.n_vars();
        for s in train.iter().chain(&test) {
            if s.n_vars() != n_vars {
                return Err(Error::Input(format!(
                    "dataset {name}: series {} has {} variables, expected {n_vars}",
                    s.id,
                    s.n_vars()
                )));
            }
        }
        let classes = class_order(&train);
        if let Some(s) = test.iter().find(|s| !classes.contains(&s.label)) {
            return Err(Error::Input(format!(
                "dataset {name}: test series {} has label {:?} absent from training",
                s.id, s.label
            )));
        }
        Ok(Self {
            name,
            train,
            test,
            n_vars,
            classes,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Replaces both splits' values while keeping identity and labels.
    pub(crate) fn map_splits(&self, mut f: impl FnMut(&mut TimeSeries)) -> Self {
        let mut out = self.clone();
        out.train.iter_mut().chain(out.test.iter_mut()).for_each(&mut f);
        out
    }
}

/// Distinct labels in order of first appearance.
pub fn class_order(series: &[TimeSeries]) -> Vec<String> {
    let mut classes: Vec<String> = Vec::new();
    for s in series {
        if !classes.contains(&s.label) {
            classes.push(s.label.clone());
        }
    }
    classes
}
