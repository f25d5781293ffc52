//! Trainable classifiers built from the reservoir, PCA and readout stages.
//!
//! * [`EsnModel`]: standardize → final reservoir state → ridge readout.
//! * [`BdesnModel`]: standardize → forward and backward final states → PCA →
//!   MLP.
//!
//! Both record the class labels of the training split in first-appearance
//! order and predict those labels back. Fitting reads only the series passed
//! to it.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data_io::{class_order, TimeSeries};
use crate::dimred::{pca_fit, DimReducer, PcaModel};
use crate::error::{Error, Result};
use crate::readout::{ridge_fit, train_mlp, Batch, HiddenActivation, MlpModel, RidgeReadout, TrainConfig, TrainLog};
use crate::reservoir::{build_reservoir, Activation, BiEmbedding, Reservoir, ReservoirSpec, DEFAULT_DENSITY};
use crate::tensor_math::{Matrix, SeededRng};

pub const MODEL_FORMAT: &str = "bdesn-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

const MLP_INIT_TAG: u64 = 1;
const MLP_TRAIN_TAG: u64 = 2;

/// Per-variable z-score parameters from observed training values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl StandardizationStats {
    /// Population mean and standard deviation of every variable, ignoring
    /// missing entries. Constant variables get `std = 1`.
    pub fn fit(series: &[TimeSeries]) -> Result<Self> {
        let n_vars = series
            .first()
            .ok_or_else(|| Error::Input("no training series".into()))?
            .n_vars();
        let mut count = vec![0usize; n_vars];
        let mut mean = vec![0.0; n_vars];
        for s in series {
            check_vars(s, n_vars)?;
            for (k, &x) in s.values().iter().enumerate() {
                if !x.is_nan() {
                    count[k % n_vars] += 1;
                    mean[k % n_vars] += x;
                }
            }
        }
        for (j, (m, &c)) in mean.iter_mut().zip(&count).enumerate() {
            if c == 0 {
                return Err(Error::Imputation {
                    variable: format!("x{}", j + 1),
                });
            }
            *m /= c as f64;
        }
        let mut var = vec![0.0; n_vars];
        for s in series {
            for (k, &x) in s.values().iter().enumerate() {
                if !x.is_nan() {
                    let d = x - mean[k % n_vars];
                    var[k % n_vars] += d * d;
                }
            }
        }
        let std = var
            .iter()
            .zip(&count)
            .zip(&mean)
            .map(|((&v, &c), &m)| {
                let s = (v / c as f64).sqrt();
                if s > 1e-12 * m.abs().max(1.0) {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn n_vars(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// `T × V` standardized series. Missing entries map to 0, the training
    /// mean.
    pub fn apply(&self, s: &TimeSeries) -> Result<Matrix> {
        check_vars(s, self.n_vars())?;
        let v = self.n_vars();
        let data = s
            .values()
            .iter()
            .enumerate()
            .map(|(k, &x)| if x.is_nan() { 0.0 } else { (x - self.mean[k % v]) / self.std[k % v] })
            .collect();
        Matrix::from_vec(s.len(), v, data)
    }
}

fn check_vars(s: &TimeSeries, n_vars: usize) -> Result<()> {
    if s.n_vars() != n_vars {
        return Err(Error::Input(format!(
            "series {} has {} variables, the model was trained on {n_vars}",
            s.id,
            s.n_vars()
        )));
    }
    Ok(())
}

/// Mini-batch size for MLP training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchSize {
    Full,
    Size(usize),
}

impl BatchSize {
    fn resolve(self, n: usize) -> usize {
        match self {
            BatchSize::Full => n,
            BatchSize::Size(b) => b,
        }
    }
}

impl fmt::Display for BatchSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchSize::Full => f.write_str("full"),
            BatchSize::Size(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for BatchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(BatchSize::Full);
        }
        s.parse()
            .ok()
            .filter(|&b| b > 0)
            .map(BatchSize::Size)
            .ok_or_else(|| Error::Parameter(format!("batch size must be a positive integer or \"full\", got {s:?}")))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BatchSizeRepr {
    Size(usize),
    Named(String),
}

impl Serialize for BatchSize {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BatchSize::Full => BatchSizeRepr::Named("full".into()),
            BatchSize::Size(b) => BatchSizeRepr::Size(*b),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BatchSize {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match BatchSizeRepr::deserialize(deserializer)? {
            BatchSizeRepr::Size(0) => Err(serde::de::Error::custom("batch size must be >= 1")),
            BatchSizeRepr::Size(b) => Ok(BatchSize::Size(b)),
            BatchSizeRepr::Named(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsnConfig {
    pub n_units: usize,
    pub spectral_radius: f64,
    pub input_scale: f64,
    #[serde(default = "default_density")]
    pub density: f64,
    pub lambda: f64,
    #[serde(default)]
    pub seed: u64,
    /// Use `[forward; backward]` final states instead of the forward state
    /// alone. Off for the baseline.
    #[serde(default)]
    pub bidirectional: bool,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            n_units: 300,
            spectral_radius: 0.9,
            input_scale: 0.1,
            density: DEFAULT_DENSITY,
            lambda: 1.0,
            seed: 0,
            bidirectional: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BdesnConfig {
    pub n_units: usize,
    pub spectral_radius: f64,
    pub input_scale: f64,
    #[serde(default = "default_density")]
    pub density: f64,
    /// PCA dimension `d`.
    pub pca_dim: usize,
    /// Hidden layer widths between `d` and the output layer.
    pub hidden_layers: Vec<usize>,
    #[serde(default)]
    pub activation: HiddenActivation,
    pub dropout: f64,
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: BatchSize,
    #[serde(default)]
    pub patience: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BdesnConfig {
    fn default() -> Self {
        Self {
            n_units: 300,
            spectral_radius: 0.9,
            input_scale: 0.1,
            density: DEFAULT_DENSITY,
            pca_dim: 50,
            hidden_layers: vec![64],
            activation: HiddenActivation::Relu,
            dropout: 0.1,
            l2: 1e-4,
            learning_rate: 1e-3,
            epochs: 500,
            batch_size: BatchSize::Size(25),
            patience: None,
            seed: 0,
        }
    }
}

fn default_density() -> f64 {
    DEFAULT_DENSITY
}

/// SplitMix64 of `seed + tag`; decorrelates the seeds handed to each stage.
fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed.wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn label_indices(series: &[TimeSeries], classes: &[String]) -> Result<Vec<usize>> {
    series
        .iter()
        .map(|s| {
            classes
                .iter()
                .position(|c| *c == s.label)
                .ok_or_else(|| Error::Input(format!("series {} has unknown label {:?}", s.id, s.label)))
        })
        .collect()
}

fn training_classes(train: &[TimeSeries]) -> Result<Vec<String>> {
    if train.is_empty() {
        return Err(Error::Input("training set is empty".into()));
    }
    let classes = class_order(train);
    if classes.len() < 2 {
        return Err(Error::Input(format!(
            "training set needs at least 2 classes, found {}",
            classes.len()
        )));
    }
    Ok(classes)
}

fn stack_rows(rows: Vec<Vec<f64>>, width: usize) -> Result<Matrix> {
    let n = rows.len();
    Matrix::from_vec(n, width, rows.into_iter().flatten().collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EsnModel {
    classes: Vec<String>,
    preprocessing: StandardizationStats,
    reservoir: Reservoir,
    bidirectional: bool,
    readout: RidgeReadout,
}

pub fn fit_esn(train: &[TimeSeries], cfg: &EsnConfig) -> Result<EsnModel> {
    let classes = training_classes(train)?;
    let labels = label_indices(train, &classes)?;
    let preprocessing = StandardizationStats::fit(train)?;
    let reservoir = build_reservoir(&ReservoirSpec {
        n_units: cfg.n_units,
        spectral_radius: cfg.spectral_radius,
        input_scale: cfg.input_scale,
        density: cfg.density,
        input_dim: preprocessing.n_vars(),
        seed: cfg.seed,
        activation: Activation::Tanh,
    })?;
    let width = cfg.n_units * if cfg.bidirectional { 2 } else { 1 };
    let rows = train
        .iter()
        .map(|s| esn_features(&reservoir, &preprocessing, cfg.bidirectional, s))
        .collect::<Result<Vec<_>>>()?;
    let readout = ridge_fit(&stack_rows(rows, width)?, &labels, classes.len(), cfg.lambda)?;
    let model = EsnModel {
        classes,
        preprocessing,
        reservoir,
        bidirectional: cfg.bidirectional,
        readout,
    };
    model.validate()?;
    Ok(model)
}

impl EsnModel {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn preprocessing(&self) -> &StandardizationStats {
        &self.preprocessing
    }

    pub fn reservoir(&self) -> &Reservoir {
        &self.reservoir
    }

    pub fn readout(&self) -> &RidgeReadout {
        &self.readout
    }

    pub fn is_bidirectional(&self) -> bool {
        self.bidirectional
    }

    fn embedding_width(&self) -> usize {
        self.reservoir.n_units() * if self.bidirectional { 2 } else { 1 }
    }

    /// Readout features of one series.
    pub fn embedding(&self, s: &TimeSeries) -> Result<Vec<f64>> {
        esn_features(&self.reservoir, &self.preprocessing, self.bidirectional, s)
    }

    fn embed_batch(&self, series: &[TimeSeries]) -> Result<Matrix> {
        let rows = series.iter().map(|s| self.embedding(s)).collect::<Result<Vec<_>>>()?;
        stack_rows(rows, self.embedding_width())
    }

    pub fn predict_indices(&self, series: &[TimeSeries]) -> Result<Vec<usize>> {
        self.readout.predict_linear(&self.embed_batch(series)?)
    }

    pub fn predict(&self, s: &TimeSeries) -> Result<String> {
        Ok(self.predict_batch(std::slice::from_ref(s))?.remove(0))
    }

    pub fn predict_batch(&self, series: &[TimeSeries]) -> Result<Vec<String>> {
        Ok(self
            .predict_indices(series)?
            .into_iter()
            .map(|c| self.classes[c].clone())
            .collect())
    }

    fn validate(&self) -> Result<()> {
        if self.reservoir.input_dim() != self.preprocessing.n_vars() {
            return Err(Error::Shape(format!(
                "reservoir expects {} variables, standardization has {}",
                self.reservoir.input_dim(),
                self.preprocessing.n_vars()
            )));
        }
        if self.readout.input_dim() != self.embedding_width() {
            return Err(Error::Shape(format!(
                "readout expects {} features, embedding has {}",
                self.readout.input_dim(),
                self.embedding_width()
            )));
        }
        if self.readout.n_classes() != self.classes.len() {
            return Err(Error::Shape(format!(
                "readout has {} outputs for {} classes",
                self.readout.n_classes(),
                self.classes.len()
            )));
        }
        Ok(())
    }
}

fn esn_features(
    reservoir: &Reservoir,
    preprocessing: &StandardizationStats,
    bidirectional: bool,
    s: &TimeSeries,
) -> Result<Vec<f64>> {
    let x = preprocessing.apply(s)?;
    if bidirectional {
        Ok(reservoir.embed_bidirectional(&x)?.into_vec())
    } else {
        reservoir.final_state(&x, false)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BdesnModel {
    classes: Vec<String>,
    preprocessing: StandardizationStats,
    reservoir: Reservoir,
    pca: PcaModel,
    mlp: MlpModel,
}

/// Fits the three-stage model. `validation`, when given, is only used for the
/// per-epoch validation loss and early stopping.
pub fn fit_bdesn(train: &[TimeSeries], validation: Option<&[TimeSeries]>, cfg: &BdesnConfig) -> Result<(BdesnModel, TrainLog)> {
    let classes = training_classes(train)?;
    let labels = label_indices(train, &classes)?;
    let preprocessing = StandardizationStats::fit(train)?;
    let reservoir = build_reservoir(&ReservoirSpec {
        n_units: cfg.n_units,
        spectral_radius: cfg.spectral_radius,
        input_scale: cfg.input_scale,
        density: cfg.density,
        input_dim: preprocessing.n_vars(),
        seed: cfg.seed,
        activation: Activation::Tanh,
    })?;
    if cfg.pca_dim > 2 * cfg.n_units {
        return Err(Error::Parameter(format!(
            "PCA dimension {} exceeds the embedding width {}",
            cfg.pca_dim,
            2 * cfg.n_units
        )));
    }
    let embed = |series: &[TimeSeries]| -> Result<Matrix> {
        let rows = series
            .iter()
            .map(|s| Ok(reservoir.embed_bidirectional(&preprocessing.apply(s)?)?.into_vec()))
            .collect::<Result<Vec<_>>>()?;
        stack_rows(rows, 2 * reservoir.n_units())
    };
    let h = embed(train)?;
    let pca = pca_fit(&h, cfg.pca_dim)?;
    let z = pca.transform(&h)?;

    let mut layer_sizes = vec![cfg.pca_dim];
    layer_sizes.extend(&cfg.hidden_layers);
    layer_sizes.push(classes.len());
    let mlp = MlpModel::new(
        &layer_sizes,
        cfg.activation,
        cfg.dropout,
        cfg.l2,
        &mut SeededRng::new(derive_seed(cfg.seed, MLP_INIT_TAG)),
    )?;

    let val = match validation {
        Some(v) => {
            let zv = pca.transform(&embed(v)?)?;
            Some((zv, label_indices(v, &classes)?))
        }
        None => None,
    };
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size.resolve(train.len()),
        learning_rate: cfg.learning_rate,
        seed: derive_seed(cfg.seed, MLP_TRAIN_TAG),
        patience: cfg.patience,
    };
    let val_batch = match &val {
        Some((zv, yv)) => Some(Batch::new(zv, yv)?),
        None => None,
    };
    let (mlp, log) = train_mlp(mlp, Batch::new(&z, &labels)?, val_batch, &train_cfg)?;

    let model = BdesnModel {
        classes,
        preprocessing,
        reservoir,
        pca,
        mlp,
    };
    model.validate()?;
    Ok((model, log))
}

impl BdesnModel {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn preprocessing(&self) -> &StandardizationStats {
        &self.preprocessing
    }

    pub fn reservoir(&self) -> &Reservoir {
        &self.reservoir
    }

    pub fn pca(&self) -> &PcaModel {
        &self.pca
    }

    pub fn mlp(&self) -> &MlpModel {
        &self.mlp
    }

    /// Forward and backward final states of one series, before PCA.
    pub fn embedding(&self, s: &TimeSeries) -> Result<BiEmbedding> {
        self.reservoir.embed_bidirectional(&self.preprocessing.apply(s)?)
    }

    /// PCA coordinates fed to the MLP, one row per series.
    pub fn features(&self, series: &[TimeSeries]) -> Result<Matrix> {
        let rows = series
            .iter()
            .map(|s| Ok(self.embedding(s)?.into_vec()))
            .collect::<Result<Vec<_>>>()?;
        self.pca.transform(&stack_rows(rows, 2 * self.reservoir.n_units())?)
    }

    pub fn predict_indices(&self, series: &[TimeSeries]) -> Result<Vec<usize>> {
        self.mlp.predict(&self.features(series)?)
    }

    pub fn predict(&self, s: &TimeSeries) -> Result<String> {
        Ok(self.predict_batch(std::slice::from_ref(s))?.remove(0))
    }

    pub fn predict_batch(&self, series: &[TimeSeries]) -> Result<Vec<String>> {
        Ok(self
            .predict_indices(series)?
            .into_iter()
            .map(|c| self.classes[c].clone())
            .collect())
    }

    fn validate(&self) -> Result<()> {
        let n = self.reservoir.n_units();
        if self.reservoir.input_dim() != self.preprocessing.n_vars() {
            return Err(Error::Shape(format!(
                "reservoir expects {} variables, standardization has {}",
                self.reservoir.input_dim(),
                self.preprocessing.n_vars()
            )));
        }
        if self.pca.input_dim() != 2 * n {
            return Err(Error::Shape(format!(
                "PCA expects {} inputs, bidirectional embedding has {}",
                self.pca.input_dim(),
                2 * n
            )));
        }
        if self.mlp.input_dim() != self.pca.output_dim() {
            return Err(Error::Shape(format!(
                "MLP expects {} inputs, PCA produces {}",
                self.mlp.input_dim(),
                self.pca.output_dim()
            )));
        }
        if self.mlp.n_classes() != self.classes.len() {
            return Err(Error::Shape(format!(
                "MLP has {} outputs for {} classes",
                self.mlp.n_classes(),
                self.classes.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Esn,
    Bdesn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Esn => "esn",
            ModelKind::Bdesn => "bdesn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "esn" => Ok(ModelKind::Esn),
            "bdesn" => Ok(ModelKind::Bdesn),
            other => Err(Error::Parameter(format!("unknown model kind {other:?} (expected esn or bdesn)"))),
        }
    }
}

/// Either trained model, as stored on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Esn(EsnModel),
    Bdesn(BdesnModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: Model,
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Esn(_) => ModelKind::Esn,
            Model::Bdesn(_) => ModelKind::Bdesn,
        }
    }

    pub fn classes(&self) -> &[String] {
        match self {
            Model::Esn(m) => m.classes(),
            Model::Bdesn(m) => m.classes(),
        }
    }

    pub fn predict_batch(&self, series: &[TimeSeries]) -> Result<Vec<String>> {
        match self {
            Model::Esn(m) => m.predict_batch(series),
            Model::Bdesn(m) => m.predict_batch(series),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Model(e.to_string()))
    }

    /// Parses a model file. The reservoir is regenerated from its seed and
    /// hyperparameters.
    pub fn from_json(text: &str) -> Result<Self> {
        let head: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        match head.get("format").and_then(|v| v.as_str()) {
            Some(MODEL_FORMAT) => {}
            other => return Err(Error::Model(format!("unexpected format tag {other:?}"))),
        }
        match head.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
            other => return Err(Error::Model(format!("unsupported model format version {other:?}"))),
        }
        let file: ModelFile = serde_json::from_value(head).map_err(|e| Error::Model(e.to_string()))?;
        match &file.model {
            Model::Esn(m) => m.validate()?,
            Model::Bdesn(m) => m.validate()?,
        }
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Model(m) => Error::Model(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

impl From<EsnModel> for Model {
    fn from(m: EsnModel) -> Self {
        Model::Esn(m)
    }
}

impl From<BdesnModel> for Model {
    fn from(m: BdesnModel) -> Self {
        Model::Bdesn(m)
    }
}
