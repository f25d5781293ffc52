use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readout::mlp::{cross_entropy, Gradients, MlpModel, Mode};
use crate::tensor_math::{Matrix, SeededRng};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Mini-batch size; values above the sample count mean full batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Stop after this many epochs without a validation-loss improvement and
    /// return the best model seen. Ignored without a validation set.
    #[serde(default)]
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            patience: None,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!(
                "learning rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.patience == Some(0) {
            return Err(Error::Parameter("patience must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's mini-batches, without the L2 term.
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// `epoch,train_loss[,val_loss]` with one row per epoch. Losses are pure
    /// cross-entropy.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let with_val = self.records.iter().any(|r| r.val_loss.is_some());
        if with_val {
            writeln!(out, "epoch,train_loss,val_loss")?;
        } else {
            writeln!(out, "epoch,train_loss")?;
        }
        for r in &self.records {
            match (with_val, r.val_loss) {
                (true, Some(v)) => writeln!(out, "{},{},{}", r.epoch, r.train_loss, v)?,
                (true, None) => writeln!(out, "{},{},NaN", r.epoch, r.train_loss)?,
                (false, _) => writeln!(out, "{},{}", r.epoch, r.train_loss)?,
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Labelled feature matrix for MLP training.
#[derive(Clone, Copy, Debug)]
pub struct Batch<'a> {
    pub x: &'a Matrix,
    pub labels: &'a [usize],
}

impl<'a> Batch<'a> {
    pub fn new(x: &'a Matrix, labels: &'a [usize]) -> Result<Self> {
        if x.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} labels",
                x.rows(),
                labels.len()
            )));
        }
        if x.rows() == 0 {
            return Err(Error::Input("empty training set".into()));
        }
        Ok(Self { x, labels })
    }
}

struct Adam {
    m: Gradients,
    v: Gradients,
    t: i32,
}

impl Adam {
    fn new(model: &MlpModel) -> Self {
        let zeros = Gradients {
            weights: model.weights().iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: model.biases().iter().map(|b| vec![0.0; b.len()]).collect(),
        };
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpModel, g: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for l in 0..g.weights.len() {
            update(
                model.weights_mut()[l].as_mut_slice(),
                g.weights[l].as_slice(),
                self.m.weights[l].as_mut_slice(),
                self.v.weights[l].as_mut_slice(),
                lr,
                c1,
                c2,
            );
            update(
                &mut model.biases_mut()[l],
                &g.biases[l],
                &mut self.m.biases[l],
                &mut self.v.biases[l],
                lr,
                c1,
                c2,
            );
        }
    }
}

fn update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, c1: f64, c2: f64) {
    for i in 0..p.len() {
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        p[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
    }
}

fn gather(x: &Matrix, labels: &[usize], idx: &[usize]) -> (Matrix, Vec<usize>) {
    let mut data = Vec::with_capacity(idx.len() * x.cols());
    let mut out_labels = Vec::with_capacity(idx.len());
    for &i in idx {
        data.extend_from_slice(x.row(i));
        out_labels.push(labels[i]);
    }
    (Matrix::from_raw(idx.len(), x.cols(), data), out_labels)
}

/// Trains `model` with Adam on shuffled mini-batches.
///
/// The shuffle order and dropout masks come from independent substreams of
/// `cfg.seed`, so a fixed seed reproduces the run bit for bit.
pub fn train_mlp(
    model: MlpModel,
    train: Batch<'_>,
    validation: Option<Batch<'_>>,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainLog)> {
    cfg.validate()?;
    let n_classes = model.n_classes();
    for batch in std::iter::once(&train).chain(validation.as_ref()) {
        if batch.x.cols() != model.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                model.input_dim(),
                batch.x.cols()
            )));
        }
        if let Some(&bad) = batch.labels.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Input(format!("label {bad} outside 0..{n_classes}")));
        }
    }

    let root = SeededRng::new(cfg.seed);
    let mut shuffle_rng = root.substream(0);
    let mut dropout_rng = root.substream(1);
    let mut model = model;
    let mut adam = Adam::new(&model);
    let mut log = TrainLog::default();
    let n = train.x.rows();
    let batch_size = cfg.batch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, MlpModel)> = None;
    let mut since_best = 0;

    for epoch in 1..=cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut sum = 0.0;
        for chunk in order.chunks(batch_size) {
            let (xb, yb) = gather(train.x, train.labels, chunk);
            let (ce, total, grads) = model.gradients(&xb, &yb, Mode::Train, &mut dropout_rng)?;
            if !total.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    learning_rate: cfg.learning_rate,
                });
            }
            sum += ce * chunk.len() as f64;
            adam.step(&mut model, &grads, cfg.learning_rate);
        }
        let train_loss = sum / n as f64;

        let val_loss = match &validation {
            Some(v) => Some(cross_entropy(&model.logits(v.x)?, v.labels)?),
            None => None,
        };
        if !train_loss.is_finite() || val_loss.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                learning_rate: cfg.learning_rate,
            });
        }
        log.records.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });

        if let (Some(patience), Some(v)) = (cfg.patience, val_loss) {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, model.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    break;
                }
            }
        }
    }

    if let Some((_, m)) = best {
        model = m;
    }
    Ok((model, log))
}
