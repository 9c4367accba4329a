//! Numeric building blocks: matrix storage, activation math, a reverse-mode
//! tape, and the Adam optimizer.

pub mod mat;
pub mod ops;
pub mod optim;
pub mod tape;

pub use mat::{Mat, Real};
pub use tape::{Tape, VId};

use rand::Rng;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch in {0}")]
    ShapeMismatch(String),
    #[error("label {label} outside distribution of {len}")]
    InvalidLabel { label: usize, len: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

/// Training configuration. Defaults follow the reference setup; tests and the
/// command line override individual fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub batch_size: usize,
    pub learning_rate: Real,
    pub clip_norm: Real,
    pub epochs: usize,
    pub adam_beta1: Real,
    pub adam_beta2: Real,
    pub adam_eps: Real,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            embed_dim: 256,
            hidden_dim: 128,
            batch_size: 128,
            learning_rate: 0.001,
            clip_norm: 5.0,
            epochs: 8,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.batch_size == 0 {
            return Err(NnError::InvalidArgument(
                "embed, hidden, and batch sizes must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !(self.clip_norm > 0.0) {
            return Err(NnError::InvalidArgument(
                "learning rate and clip norm must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(NnError::InvalidArgument(
                "adam betas must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// One trainable tensor with its gradient and Adam moment buffers.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Mat,
    pub grad: Mat,
    pub adam_m: Mat,
    pub adam_v: Mat,
}

impl Parameter {
    pub fn new(name: &str, value: Mat) -> Self {
        let (rows, cols) = value.shape();
        Parameter {
            name: name.to_string(),
            value,
            grad: Mat::zeros(rows, cols),
            adam_m: Mat::zeros(rows, cols),
            adam_v: Mat::zeros(rows, cols),
        }
    }

    pub fn uniform(name: &str, rows: usize, cols: usize, scale: Real, rng: &mut impl Rng) -> Self {
        Parameter::new(name, Mat::uniform(rows, cols, scale, rng))
    }
}
