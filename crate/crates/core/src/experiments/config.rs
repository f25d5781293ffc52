use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data_io::TimeSeries;
use crate::error::{Error, Result};
use crate::pipeline::{fit_bdesn, fit_esn, BdesnConfig, EsnConfig, Model, ModelKind};
use crate::readout::TrainLog;

/// Hyperparameters of either model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelConfig {
    Esn(EsnConfig),
    Bdesn(BdesnConfig),
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Esn(_) => ModelKind::Esn,
            ModelConfig::Bdesn(_) => ModelKind::Bdesn,
        }
    }

    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Esn => ModelConfig::Esn(EsnConfig::default()),
            ModelKind::Bdesn => ModelConfig::Bdesn(BdesnConfig::default()),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::Esn(c) => c.seed,
            ModelConfig::Bdesn(c) => c.seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            ModelConfig::Esn(c) => c.seed = seed,
            ModelConfig::Bdesn(c) => c.seed = seed,
        }
        out
    }

    /// Trains the configured model. BDESN also returns its training log.
    pub fn fit(&self, train: &[TimeSeries]) -> Result<(Model, Option<TrainLog>)> {
        match self {
            ModelConfig::Esn(c) => Ok((fit_esn(train, c)?.into(), None)),
            ModelConfig::Bdesn(c) => {
                let (m, log) = fit_bdesn(train, None, c)?;
                Ok((m.into(), Some(log)))
            }
        }
    }

    /// One-line `key=value` summary.
    pub fn describe(&self) -> String {
        match self {
            ModelConfig::Esn(c) => format!(
                "esn n_units={} spectral_radius={} input_scale={} density={} lambda={}",
                c.n_units, c.spectral_radius, c.input_scale, c.density, c.lambda
            ),
            ModelConfig::Bdesn(c) => format!(
                "bdesn n_units={} spectral_radius={} input_scale={} density={} pca_dim={} hidden_layers={:?} \
                 dropout={} l2={} learning_rate={} epochs={} batch_size={}",
                c.n_units,
                c.spectral_radius,
                c.input_scale,
                c.density,
                c.pca_dim,
                c.hidden_layers,
                c.dropout,
                c.l2,
                c.learning_rate,
                c.epochs,
                c.batch_size
            ),
        }
    }
}

/// TOML configuration document with optional `[esn]` and `[bdesn]` tables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub esn: Option<EsnConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bdesn: Option<BdesnConfig>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn get(&self, kind: ModelKind) -> Option<ModelConfig> {
        match kind {
            ModelKind::Esn => self.esn.clone().map(ModelConfig::Esn),
            ModelKind::Bdesn => self.bdesn.clone().map(ModelConfig::Bdesn),
        }
    }

    /// The table for `kind`, or that model's defaults.
    pub fn get_or_default(&self, kind: ModelKind) -> ModelConfig {
        self.get(kind).unwrap_or_else(|| ModelConfig::default_for(kind))
    }

    pub fn set(&mut self, config: ModelConfig) {
        match config {
            ModelConfig::Esn(c) => self.esn = Some(c),
            ModelConfig::Bdesn(c) => self.bdesn = Some(c),
        }
    }
}

impl From<ModelConfig> for ConfigFile {
    fn from(config: ModelConfig) -> Self {
        let mut f = ConfigFile::default();
        f.set(config);
        f
    }
}
