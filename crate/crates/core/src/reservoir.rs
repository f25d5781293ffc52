//! Fixed random reservoirs and their final-state embeddings.
//!
//! The state update is `h_t = f(W_rec · h_{t-1} + W_in · x_t)` with no bias
//! term and `h_0 = 0` unless a different initial state is supplied. Both weight
//! matrices are drawn from a seed and never trained, so a reservoir is fully
//! described by its [`ReservoirSpec`]; that is also what gets serialized.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_math::{random_dense, random_sparse, spectral_radius, Matrix, SeededRng, SparseMatrix};

pub const RESERVOIR_FORMAT: &str = "bdesn-reservoir";
pub const RESERVOIR_FORMAT_VERSION: u32 = 1;

/// Recurrent connectivity used when none is given.
pub const DEFAULT_DENSITY: f64 = 0.1;

const RADIUS_TOL: f64 = 1e-13;
const RADIUS_MAX_ITER: usize = 50_000;
const MAX_DRAWS: u64 = 32;
const INPUT_STREAM: u64 = 0;
const RECURRENT_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }
}

/// Everything needed to regenerate a reservoir bit-for-bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpec {
    pub n_units: usize,
    pub spectral_radius: f64,
    pub input_scale: f64,
    pub density: f64,
    pub input_dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub activation: Activation,
}

impl ReservoirSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_units == 0 {
            return Err(Error::Parameter("reservoir needs at least one unit".into()));
        }
        if !(self.spectral_radius >= 0.0 && self.spectral_radius.is_finite()) {
            return Err(Error::Parameter(format!(
                "spectral radius must be >= 0, got {}",
                self.spectral_radius
            )));
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return Err(Error::Parameter(format!(
                "input scale must be > 0, got {}",
                self.input_scale
            )));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Parameter(format!(
                "density must lie in (0, 1], got {}",
                self.density
            )));
        }
        if self.input_dim == 0 {
            return Err(Error::Parameter("input dimension must be positive".into()));
        }
        Ok(())
    }
}

/// A fixed random recurrent system.
#[derive(Clone, Debug)]
pub struct Reservoir {
    spec: Option<ReservoirSpec>,
    w_rec: SparseMatrix,
    w_in: Matrix,
    spectral_radius: f64,
    activation: Activation,
}

/// Hidden states `h_1 … h_T`, one row per time step.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTrajectory {
    pub states: Matrix,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.states.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.rows() == 0
    }

    /// `h_T`.
    pub fn last(&self) -> &[f64] {
        self.states.row(self.states.rows() - 1)
    }
}

/// Final states of the forward and time-reversed passes.
#[derive(Clone, Debug, PartialEq)]
pub struct BiEmbedding {
    n_units: usize,
    concatenated: Vec<f64>,
}

impl BiEmbedding {
    pub fn forward(&self) -> &[f64] {
        &self.concatenated[..self.n_units]
    }

    pub fn backward(&self) -> &[f64] {
        &self.concatenated[self.n_units..]
    }

    /// `[forward; backward]`.
    pub fn concatenated(&self) -> &[f64] {
        &self.concatenated
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.concatenated
    }
}

/// Draws a reservoir from `spec`.
///
/// The recurrent matrix is rescaled so its measured spectral radius equals
/// `spec.spectral_radius`. A draw whose radius is zero (a nilpotent sparsity
/// pattern) is discarded and redrawn from the next substream.
pub fn build_reservoir(spec: &ReservoirSpec) -> Result<Reservoir> {
    spec.validate()?;
    let mut input_rng = SeededRng::with_stream(spec.seed, INPUT_STREAM);
    let w_in = random_dense(&mut input_rng, spec.n_units, spec.input_dim, spec.input_scale)?;

    let mut w_rec = None;
    for attempt in 0..MAX_DRAWS {
        let mut rng = SeededRng::with_stream(spec.seed, RECURRENT_STREAM + attempt);
        let mut candidate = random_sparse(&mut rng, spec.n_units, spec.density)?;
        if spec.spectral_radius == 0.0 {
            candidate.scale_in_place(0.0);
            w_rec = Some(candidate);
            break;
        }
        let measured = spectral_radius(&candidate, RADIUS_TOL, RADIUS_MAX_ITER)?;
        if measured > 0.0 {
            candidate.scale_in_place(spec.spectral_radius / measured);
            w_rec = Some(candidate);
            break;
        }
    }
    let w_rec = w_rec.ok_or(Error::DegenerateDraw {
        attempts: MAX_DRAWS as usize,
    })?;

    Ok(Reservoir {
        spec: Some(spec.clone()),
        w_rec,
        w_in,
        spectral_radius: spec.spectral_radius,
        activation: spec.activation,
    })
}

impl Reservoir {
    /// Reservoir with explicit weights (`w_in` is `N × V`). Such a reservoir
    /// has no seed and cannot be serialized.
    pub fn from_weights(w_rec: SparseMatrix, w_in: Matrix, activation: Activation) -> Result<Self> {
        if w_in.rows() != w_rec.dim() {
            return Err(Error::Shape(format!(
                "input weights have {} rows, reservoir has {} units",
                w_in.rows(),
                w_rec.dim()
            )));
        }
        if w_in.cols() == 0 {
            return Err(Error::Shape("input weights need at least one column".into()));
        }
        let radius = spectral_radius(&w_rec, RADIUS_TOL, RADIUS_MAX_ITER)?;
        Ok(Self {
            spec: None,
            w_rec,
            w_in,
            spectral_radius: radius,
            activation,
        })
    }

    pub fn spec(&self) -> Option<&ReservoirSpec> {
        self.spec.as_ref()
    }

    pub fn n_units(&self) -> usize {
        self.w_rec.dim()
    }

    pub fn input_dim(&self) -> usize {
        self.w_in.cols()
    }

    /// Requested spectral radius (measured one for explicit weights).
    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn recurrent_weights(&self) -> &SparseMatrix {
        &self.w_rec
    }

    pub fn input_weights(&self) -> &Matrix {
        &self.w_in
    }

    /// One state update `f(W_rec · h_prev + W_in · x)`.
    pub fn step(&self, h_prev: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_state(h_prev)?;
        self.check_input(x)?;
        let mut next = vec![0.0; self.n_units()];
        self.step_into(h_prev, x, &mut next);
        Ok(next)
    }

    #[inline]
    fn step_into(&self, h_prev: &[f64], x: &[f64], out: &mut [f64]) {
        self.w_rec.matvec_into(h_prev, out);
        for (o, row) in out.iter_mut().zip(self.w_in.iter_rows()) {
            let drive: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
            *o = self.activation.apply(*o + drive);
        }
    }

    /// Full trajectory over the rows of `inputs` (`T × V`).
    pub fn run(&self, inputs: &Matrix, h0: Option<&[f64]>) -> Result<StateTrajectory> {
        self.check_series(inputs)?;
        let n = self.n_units();
        let mut prev = match h0 {
            Some(h) => {
                self.check_state(h)?;
                h.to_vec()
            }
            None => vec![0.0; n],
        };
        let mut states = Matrix::zeros(inputs.rows(), n);
        for t in 0..inputs.rows() {
            let row = states.row_mut(t);
            self.step_into(&prev, inputs.row(t), row);
            prev.copy_from_slice(row);
        }
        Ok(StateTrajectory { states })
    }

    /// `h_T` after processing `inputs` from `h_0 = 0`, in reverse time order
    /// when `reversed` is set.
    pub fn final_state(&self, inputs: &Matrix, reversed: bool) -> Result<Vec<f64>> {
        self.check_series(inputs)?;
        let n = self.n_units();
        let mut h = vec![0.0; n];
        let mut next = vec![0.0; n];
        let t_len = inputs.rows();
        for step in 0..t_len {
            let t = if reversed { t_len - 1 - step } else { step };
            self.step_into(&h, inputs.row(t), &mut next);
            std::mem::swap(&mut h, &mut next);
        }
        Ok(h)
    }

    /// Forward and backward final states through the same weights.
    pub fn embed_bidirectional(&self, inputs: &Matrix) -> Result<BiEmbedding> {
        let mut concatenated = self.final_state(inputs, false)?;
        concatenated.extend(self.final_state(inputs, true)?);
        Ok(BiEmbedding {
            n_units: self.n_units(),
            concatenated,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&ReservoirFile::from_reservoir(self)?)
            .map_err(|e| Error::Model(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ReservoirFile =
            serde_json::from_str(&text).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        file.into_reservoir()
    }

    fn check_state(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.n_units() {
            return Err(Error::Shape(format!(
                "state has length {}, reservoir has {} units",
                h.len(),
                self.n_units()
            )));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} variables, reservoir expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn check_series(&self, inputs: &Matrix) -> Result<()> {
        if inputs.rows() == 0 {
            return Err(Error::Input("series must contain at least one time step".into()));
        }
        if inputs.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "series has {} variables, reservoir expects {}",
                inputs.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}

/// Versioned on-disk description of a reservoir.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReservoirFile {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub spec: ReservoirSpec,
}

impl ReservoirFile {
    pub fn from_reservoir(res: &Reservoir) -> Result<Self> {
        let spec = res
            .spec()
            .ok_or_else(|| Error::Model("reservoir built from explicit weights has no seed".into()))?;
        Ok(Self {
            format: RESERVOIR_FORMAT.into(),
            version: RESERVOIR_FORMAT_VERSION,
            spec: spec.clone(),
        })
    }

    pub fn into_reservoir(self) -> Result<Reservoir> {
        if self.format != RESERVOIR_FORMAT {
            return Err(Error::Model(format!("unexpected format tag {:?}", self.format)));
        }
        if self.version != RESERVOIR_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported reservoir format version {}",
                self.version
            )));
        }
        build_reservoir(&self.spec)
    }
}

impl Serialize for Reservoir {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ReservoirFile::from_reservoir(self)
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Reservoir {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        ReservoirFile::deserialize(deserializer)?
            .into_reservoir()
            .map_err(serde::de::Error::custom)
    }
}
