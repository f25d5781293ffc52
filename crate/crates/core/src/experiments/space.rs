//! Hyperparameter search spaces.
//!
//! A space file is TOML with optional `[esn]` and `[bdesn]` tables; a missing
//! table or key falls back to the defaults below. Each scalar entry is one of
//!
//! ```toml
//! spectral_radius = { dist = "log-uniform", low = 0.5, high = 1.5 }
//! dropout = { dist = "uniform", low = 0.0, high = 0.5 }
//! n_units = { dist = "choice", values = [300, 500, 800] }
//! pca_dim = { dist = "fixed", value = 50 }
//! ```
//!
//! Hidden layers are drawn as a depth and one width per layer:
//! `hidden_layers = { depth = [1, 2, 3], width = [32, 64, 128] }`.
//! Batch sizes are a list of integers and/or `"full"`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ModelConfig;
use crate::pipeline::{BatchSize, BdesnConfig, EsnConfig, ModelKind};
use crate::readout::HiddenActivation;
use crate::tensor_math::SeededRng;

/// Anything that can propose whole model configurations.
pub trait ConfigSpace {
    fn kind(&self) -> ModelKind;
    fn sample(&self, rng: &mut SeededRng) -> Result<ModelConfig>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RealDist {
    Fixed { value: f64 },
    Uniform { low: f64, high: f64 },
    LogUniform { low: f64, high: f64 },
    Choice { values: Vec<f64> },
}

impl RealDist {
    fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("{name}: {msg}")));
        match *self {
            RealDist::Fixed { value } if !value.is_finite() => bad("value must be finite".into()),
            RealDist::Uniform { low, high } if !(low.is_finite() && high.is_finite() && low <= high) => {
                bad(format!("empty range [{low}, {high}]"))
            }
            RealDist::LogUniform { low, high } if !(low > 0.0 && high.is_finite() && low <= high) => {
                bad(format!("log-uniform bounds must satisfy 0 < low <= high, got [{low}, {high}]"))
            }
            RealDist::Choice { ref values } if values.is_empty() || values.iter().any(|v| !v.is_finite()) => {
                bad("choice needs at least one finite value".into())
            }
            _ => Ok(()),
        }
    }

    fn sample(&self, rng: &mut SeededRng) -> f64 {
        match self {
            RealDist::Fixed { value } => *value,
            RealDist::Uniform { low, high } => rng.uniform(*low, *high),
            RealDist::LogUniform { low, high } => rng.uniform(low.ln(), high.ln()).exp().clamp(*low, *high),
            RealDist::Choice { values } => values[rng.below(values.len())],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IntDist {
    Fixed { value: usize },
    /// Inclusive bounds.
    Uniform { low: usize, high: usize },
    Choice { values: Vec<usize> },
}

impl IntDist {
    fn validate(&self, name: &str) -> Result<()> {
        match self {
            IntDist::Uniform { low, high } if low > high => {
                Err(Error::Config(format!("{name}: empty range [{low}, {high}]")))
            }
            IntDist::Choice { values } if values.is_empty() => {
                Err(Error::Config(format!("{name}: choice needs at least one value")))
            }
            _ => Ok(()),
        }
    }

    fn sample(&self, rng: &mut SeededRng) -> usize {
        match self {
            IntDist::Fixed { value } => *value,
            IntDist::Uniform { low, high } => low + rng.below(high - low + 1),
            IntDist::Choice { values } => values[rng.below(values.len())],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HiddenLayersDist {
    pub depth: Vec<usize>,
    pub width: Vec<usize>,
}

fn choice(values: &[f64]) -> RealDist {
    RealDist::Choice { values: values.to_vec() }
}

fn log_uniform(low: f64, high: f64) -> RealDist {
    RealDist::LogUniform { low, high }
}

fn int_choice(values: &[usize]) -> IntDist {
    IntDist::Choice { values: values.to_vec() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsnSpace {
    pub n_units: IntDist,
    pub spectral_radius: RealDist,
    pub input_scale: RealDist,
    pub density: RealDist,
    pub lambda: RealDist,
}

impl Default for EsnSpace {
    fn default() -> Self {
        Self {
            n_units: int_choice(&[300, 500, 800]),
            spectral_radius: log_uniform(0.5, 1.5),
            input_scale: log_uniform(0.01, 1.0),
            density: choice(&[0.05, 0.1, 0.25]),
            lambda: log_uniform(1e-4, 10.0),
        }
    }
}

impl EsnSpace {
    fn validate(&self) -> Result<()> {
        self.n_units.validate("esn.n_units")?;
        self.spectral_radius.validate("esn.spectral_radius")?;
        self.input_scale.validate("esn.input_scale")?;
        self.density.validate("esn.density")?;
        self.lambda.validate("esn.lambda")
    }
}

impl ConfigSpace for EsnSpace {
    fn kind(&self) -> ModelKind {
        ModelKind::Esn
    }

    fn sample(&self, rng: &mut SeededRng) -> Result<ModelConfig> {
        self.validate()?;
        Ok(ModelConfig::Esn(EsnConfig {
            n_units: self.n_units.sample(rng),
            spectral_radius: self.spectral_radius.sample(rng),
            input_scale: self.input_scale.sample(rng),
            density: self.density.sample(rng),
            lambda: self.lambda.sample(rng),
            seed: 0,
            bidirectional: false,
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BdesnSpace {
    pub n_units: IntDist,
    pub spectral_radius: RealDist,
    pub input_scale: RealDist,
    pub density: RealDist,
    pub pca_dim: IntDist,
    pub hidden_layers: HiddenLayersDist,
    pub dropout: RealDist,
    pub l2: RealDist,
    pub learning_rate: RealDist,
    pub epochs: IntDist,
    pub batch_size: Vec<BatchSize>,
}

impl Default for BdesnSpace {
    fn default() -> Self {
        Self {
            n_units: int_choice(&[300, 500, 800]),
            spectral_radius: log_uniform(0.5, 1.5),
            input_scale: log_uniform(0.01, 1.0),
            density: choice(&[0.05, 0.1, 0.25]),
            pca_dim: int_choice(&[20, 50, 75]),
            hidden_layers: HiddenLayersDist {
                depth: vec![1, 2, 3],
                width: vec![32, 64, 128],
            },
            dropout: RealDist::Uniform { low: 0.0, high: 0.5 },
            l2: log_uniform(1e-5, 1e-2),
            learning_rate: log_uniform(1e-4, 1e-2),
            epochs: int_choice(&[100, 200, 400]),
            batch_size: vec![BatchSize::Size(25), BatchSize::Size(50), BatchSize::Full],
        }
    }
}

impl BdesnSpace {
    fn validate(&self) -> Result<()> {
        self.n_units.validate("bdesn.n_units")?;
        self.spectral_radius.validate("bdesn.spectral_radius")?;
        self.input_scale.validate("bdesn.input_scale")?;
        self.density.validate("bdesn.density")?;
        self.pca_dim.validate("bdesn.pca_dim")?;
        self.dropout.validate("bdesn.dropout")?;
        self.l2.validate("bdesn.l2")?;
        self.learning_rate.validate("bdesn.learning_rate")?;
        self.epochs.validate("bdesn.epochs")?;
        if self.hidden_layers.depth.is_empty() || self.hidden_layers.width.is_empty() {
            return Err(Error::Config("bdesn.hidden_layers: depth and width need at least one value".into()));
        }
        if self.batch_size.is_empty() {
            return Err(Error::Config("bdesn.batch_size: need at least one value".into()));
        }
        Ok(())
    }
}

impl ConfigSpace for BdesnSpace {
    fn kind(&self) -> ModelKind {
        ModelKind::Bdesn
    }

    fn sample(&self, rng: &mut SeededRng) -> Result<ModelConfig> {
        self.validate()?;
        let n_units = self.n_units.sample(rng);
        let spectral_radius = self.spectral_radius.sample(rng);
        let input_scale = self.input_scale.sample(rng);
        let density = self.density.sample(rng);
        let pca_dim = self.pca_dim.sample(rng);
        let depth = self.hidden_layers.depth[rng.below(self.hidden_layers.depth.len())];
        let hidden_layers = (0..depth)
            .map(|_| self.hidden_layers.width[rng.below(self.hidden_layers.width.len())])
            .collect();
        Ok(ModelConfig::Bdesn(BdesnConfig {
            n_units,
            spectral_radius,
            input_scale,
            density,
            pca_dim,
            hidden_layers,
            activation: HiddenActivation::Relu,
            dropout: self.dropout.sample(rng),
            l2: self.l2.sample(rng),
            learning_rate: self.learning_rate.sample(rng),
            epochs: self.epochs.sample(rng),
            batch_size: self.batch_size[rng.below(self.batch_size.len())],
            patience: None,
            seed: 0,
        }))
    }
}

/// Search space document with one table per model kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub esn: EsnSpace,
    pub bdesn: BdesnSpace,
}

impl SearchSpace {
    pub fn parse(text: &str) -> Result<Self> {
        let space: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        space.esn.validate()?;
        space.bdesn.validate()?;
        Ok(space)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn for_kind(&self, kind: ModelKind) -> &dyn ConfigSpace {
        match kind {
            ModelKind::Esn => &self.esn,
            ModelKind::Bdesn => &self.bdesn,
        }
    }
}

/// A fixed list of configurations sampled uniformly with replacement.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateList {
    kind: ModelKind,
    candidates: Vec<ModelConfig>,
}

impl CandidateList {
    pub fn new(candidates: Vec<ModelConfig>) -> Result<Self> {
        let kind = candidates
            .first()
            .ok_or_else(|| Error::Config("candidate list is empty".into()))?
            .kind();
        if candidates.iter().any(|c| c.kind() != kind) {
            return Err(Error::Config("candidates mix model kinds".into()));
        }
        Ok(Self { kind, candidates })
    }
}

impl ConfigSpace for CandidateList {
    fn kind(&self) -> ModelKind {
        self.kind
    }

    fn sample(&self, rng: &mut SeededRng) -> Result<ModelConfig> {
        Ok(self.candidates[rng.below(self.candidates.len())].clone())
    }
}
