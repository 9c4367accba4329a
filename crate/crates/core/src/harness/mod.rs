//! Training loop, checkpointing, evaluation metrics, the vocabulary
//! truncation experiment, and the interactive completion loop.

pub mod checkpoint;
pub mod eval;
pub mod oov;
pub mod repl;
pub mod train;

pub use checkpoint::Checkpoint;
pub use eval::{comparison_table, evaluate, evaluate_model, MetricsRow, Split, CSV_HEADER};
pub use oov::{oov_experiment, oov_table, OovRow};
pub use repl::complete_repl;
pub use train::{resume, train, train_until, LOG_EVERY_STEPS};

use std::path::PathBuf;

use crate::bpe::BpeError;
use crate::model::ModelError;
use crate::nn::NnError;
use crate::samples::SampleSet;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Stream(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Bpe(#[from] BpeError),
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("samples use id {id} but the model vocabulary holds {vocab} entries")]
    VocabMismatch { id: u32, vocab: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reject sample sets that reference ids outside the model vocabulary.
pub(crate) fn check_vocab(samples: &SampleSet, vocab_size: usize) -> Result<(), HarnessError> {
    for s in &samples.samples {
        for &id in s.inputs.iter().chain(std::iter::once(&s.label)) {
            if id as usize >= vocab_size {
                return Err(HarnessError::VocabMismatch {
                    id,
                    vocab: vocab_size,
                });
            }
        }
    }
    Ok(())
}
