use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Positive-class F1 for binary tasks, macro F1 otherwise.
    pub f1: f64,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Class scored by `f1` when binary.
    pub positive_class: Option<usize>,
}

impl Metrics {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.confusion.len()).map(|c| self.confusion[c][c]).sum()
    }
}

/// Scores class-index predictions.
///
/// Binary F1 is used when `positive` is given or there are exactly two
/// classes (positive class 1 by default). Otherwise F1 is the unweighted mean
/// over classes that occur in `actual` or `predicted`. A class with no true
/// positives, false positives or false negatives has F1 = 1.
pub fn metrics(predicted: &[usize], actual: &[usize], n_classes: usize, positive: Option<usize>) -> Result<Metrics> {
    if predicted.len() != actual.len() {
        return Err(Error::Shape(format!(
            "{} predictions but {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Input("metrics of an empty set".into()));
    }
    if let Some(&bad) = predicted.iter().chain(actual).find(|&&c| c >= n_classes) {
        return Err(Error::Input(format!("label {bad} outside 0..{n_classes}")));
    }
    if let Some(p) = positive.filter(|&p| p >= n_classes) {
        return Err(Error::Input(format!("positive class {p} outside 0..{n_classes}")));
    }

    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &a) in predicted.iter().zip(actual) {
        confusion[a][p] += 1;
    }
    let total = actual.len();
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let accuracy = correct as f64 / total as f64;

    let class_f1 = |c: usize| {
        let tp = confusion[c][c];
        let fp: usize = (0..n_classes).map(|a| confusion[a][c]).sum::<usize>() - tp;
        let fn_: usize = confusion[c].iter().sum::<usize>() - tp;
        if tp + fp + fn_ == 0 {
            1.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        }
    };

    let positive_class = positive.or((n_classes == 2).then_some(1));
    let f1 = match positive_class {
        Some(p) => class_f1(p),
        None => {
            let present: Vec<usize> = (0..n_classes)
                .filter(|&c| confusion[c].iter().sum::<usize>() + (0..n_classes).map(|a| confusion[a][c]).sum::<usize>() > 0)
                .collect();
            present.iter().map(|&c| class_f1(c)).sum::<f64>() / present.len() as f64
        }
    };

    Ok(Metrics {
        accuracy,
        f1,
        confusion,
        positive_class,
    })
}

/// [`metrics`] over string labels drawn from `classes`.
pub fn metrics_by_label<S: AsRef<str>>(
    predicted: &[S],
    actual: &[S],
    classes: &[String],
    positive: Option<&str>,
) -> Result<Metrics> {
    let index = |label: &str| {
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::Input(format!("label {label:?} is not one of the known classes")))
    };
    let p = predicted.iter().map(|s| index(s.as_ref())).collect::<Result<Vec<_>>>()?;
    let a = actual.iter().map(|s| index(s.as_ref())).collect::<Result<Vec<_>>>()?;
    let pos = positive.map(index).transpose()?;
    metrics(&p, &a, classes.len(), pos)
}
