use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data_io::{Dataset, TimeSeries};
use crate::error::{Error, Result};
use crate::tensor_math::SeededRng;

const FREQUENCIES: [f64; 2] = [2.0, 5.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Class `k` is `sin(2π f_k t / T)` plus noise, `f = (2, 5)`.
    TwoFreqSinusoid,
    /// Class is the sign of `x_0`; every later step is pure noise.
    FirstStepMemory,
}

impl SynthKind {
    pub fn name(self) -> &'static str {
        match self {
            SynthKind::TwoFreqSinusoid => "two-freq-sinusoid",
            SynthKind::FirstStepMemory => "first-step-memory",
        }
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-freq-sinusoid" => Ok(SynthKind::TwoFreqSinusoid),
            "first-step-memory" => Ok(SynthKind::FirstStepMemory),
            other => Err(Error::Parameter(format!(
                "unknown synthetic task {other:?} (expected two-freq-sinusoid or first-step-memory)"
            ))),
        }
    }
}

/// Univariate two-class task. Labels alternate `"0"`, `"1"` by series index,
/// so an even split size gives exact balance. Noise is Gaussian with standard
/// deviation `noise`. Train and test use independent substreams of `seed`.
pub fn synth_task(kind: SynthKind, n_train: usize, n_test: usize, length: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n_train < 2 || n_test == 0 {
        return Err(Error::Parameter(format!(
            "need at least 2 training and 1 test series, got {n_train} and {n_test}"
        )));
    }
    if length == 0 {
        return Err(Error::Parameter("series length must be >= 1".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Parameter(format!("noise must be >= 0, got {noise}")));
    }
    let root = SeededRng::new(seed);
    let train = split(kind, "train", n_train, length, noise, &mut root.substream(0))?;
    let test = split(kind, "test", n_test, length, noise, &mut root.substream(1))?;
    Dataset::new(kind.name(), train, test)
}

fn split(kind: SynthKind, prefix: &str, n: usize, length: usize, noise: f64, rng: &mut SeededRng) -> Result<Vec<TimeSeries>> {
    (0..n)
        .map(|i| {
            let class = i % 2;
            let values: Vec<f64> = match kind {
                SynthKind::TwoFreqSinusoid => (0..length)
                    .map(|t| (2.0 * PI * FREQUENCIES[class] * t as f64 / length as f64).sin() + noise * rng.normal())
                    .collect(),
                SynthKind::FirstStepMemory => {
                    let first = if class == 0 { -1.0 } else { 1.0 };
                    std::iter::once(first)
                        .chain((1..length).map(|_| noise * rng.normal()))
                        .collect()
                }
            };
            TimeSeries::new(format!("{prefix}{i}"), class.to_string(), 1, values)
        })
        .collect()
}
