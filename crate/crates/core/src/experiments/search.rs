use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data_io::{class_order, metrics_by_label, TimeSeries};
use crate::error::{Error, Result};
use crate::experiments::{ConfigSpace, ModelConfig};
use crate::tensor_math::SeededRng;

const VALIDATION_FRACTION: f64 = 0.2;
const SAMPLE_STREAM: u64 = 0;
const SPLIT_STREAM: u64 = 1;
const SEED_STREAM: u64 = 2;

/// Score used to rank configurations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMetric {
    #[default]
    Accuracy,
    /// F1 as reported by [`metrics`](crate::data_io::metrics); binary tasks
    /// use the given positive label.
    F1 { positive: Option<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub config: ModelConfig,
    pub seed: u64,
    /// Validation score, absent when the fit failed.
    pub score: Option<f64>,
    pub train_seconds: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub best: ModelConfig,
    pub best_index: usize,
    pub trials: Vec<TrialResult>,
}

impl SearchOutcome {
    pub fn best_trial(&self) -> &TrialResult {
        &self.trials[self.best_index]
    }

    /// `trial,seed,status,score,train_seconds,config`.
    pub fn trials_csv(&self) -> String {
        let mut out = String::from("trial,seed,status,score,train_seconds,config\n");
        for t in &self.trials {
            let status = if t.error.is_some() { "failed" } else { "ok" };
            let score = t.score.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{status},{score},{:.6},\"{}\"\n",
                t.index,
                t.seed,
                t.train_seconds,
                t.config.describe().replace('"', "'")
            ));
        }
        out
    }
}

/// Seeded stratified split: each class contributes `round(0.2·n_c)` series,
/// clamped to `[1, n_c − 1]`, to the validation part. Both parts keep the
/// input order.
pub fn stratified_split(series: &[TimeSeries], rng: &mut SeededRng) -> Result<(Vec<TimeSeries>, Vec<TimeSeries>)> {
    let mut in_val = vec![false; series.len()];
    for class in class_order(series) {
        let mut members: Vec<usize> = (0..series.len()).filter(|&i| series[i].label == class).collect();
        if members.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {class:?} has {} series; both parts need at least one",
                members.len()
            )));
        }
        let n_val = ((VALIDATION_FRACTION * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        rng.shuffle(&mut members);
        for &i in &members[..n_val] {
            in_val[i] = true;
        }
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (s, v) in series.iter().zip(in_val) {
        if v {
            val.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    Ok((train, val))
}

/// Random search on `train` only.
///
/// `train` is split once into inner training and validation parts; each
/// trial draws a configuration, fits it on the inner part, and is scored on
/// the validation part. The highest score wins, ties going to the earliest
/// trial. Failed fits are recorded and never win.
pub fn random_search(
    space: &dyn ConfigSpace,
    n_trials: usize,
    train: &[TimeSeries],
    seed: u64,
    metric: &SelectionMetric,
) -> Result<SearchOutcome> {
    if n_trials == 0 {
        return Err(Error::Parameter("random search needs at least one trial".into()));
    }
    let root = SeededRng::new(seed);
    let (inner, val) = stratified_split(train, &mut root.substream(SPLIT_STREAM))?;
    let classes = class_order(train);
    let actual: Vec<String> = val.iter().map(|s| s.label.clone()).collect();
    let positive = match metric {
        SelectionMetric::F1 { positive } => positive.as_deref(),
        SelectionMetric::Accuracy => None,
    };

    let mut sampler = root.substream(SAMPLE_STREAM);
    let mut seeds = root.substream(SEED_STREAM);
    let mut trials = Vec::with_capacity(n_trials);
    for index in 0..n_trials {
        let trial_seed = seeds.next_u64();
        let config = space.sample(&mut sampler)?.with_seed(trial_seed);
        let start = Instant::now();
        let fitted = config.fit(&inner);
        let train_seconds = start.elapsed().as_secs_f64();
        let scored = fitted.and_then(|(model, _)| {
            let predicted = model.predict_batch(&val)?;
            let m = metrics_by_label(&predicted, &actual, &classes, positive)?;
            Ok(match metric {
                SelectionMetric::Accuracy => m.accuracy,
                SelectionMetric::F1 { .. } => m.f1,
            })
        });
        let (score, error) = match scored {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        };
        trials.push(TrialResult {
            index,
            config,
            seed: trial_seed,
            score,
            train_seconds,
            error,
        });
    }

    let mut best_index: Option<usize> = None;
    for t in &trials {
        if let Some(s) = t.score {
            if best_index.is_none_or(|b| s > trials[b].score.unwrap()) {
                best_index = Some(t.index);
            }
        }
    }
    let best_index = best_index.ok_or_else(|| {
        Error::Model(format!(
            "all {n_trials} trials failed; first error: {}",
            trials[0].error.as_deref().unwrap_or("unknown")
        ))
    })?;
    Ok(SearchOutcome {
        best: trials[best_index].config.clone(),
        best_index,
        trials,
    })
}
