//! Classifier heads: a closed-form ridge readout and a trainable MLP.

mod linear;
mod mlp;
mod train;

pub use linear::{argmax, argmax_rows, ridge_fit, RidgeReadout};
pub use mlp::{cross_entropy, loss, softmax, ForwardCache, Gradients, HiddenActivation, MlpModel, Mode};
pub use train::{train_mlp, Batch, EpochRecord, TrainConfig, TrainLog};
