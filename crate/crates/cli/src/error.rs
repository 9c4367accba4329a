use nextok_core::bpe::BpeError;
use nextok_core::corpus::CorpusError;
use nextok_core::harness::HarnessError;
use nextok_core::model::ModelError;
use nextok_core::nn::NnError;
use nextok_core::samples::SampleError;
use thiserror::Error;

/// CLI-level failure, bucketed by exit code. The convention: 2 means the
/// invocation itself was wrong, 3 means an input file's content was
/// malformed, 4 means well-formed artifacts that do not belong together
/// (vocabulary mismatch), and 1 is reserved for environment failures such
/// as unreadable or unwritable paths.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Incompatible(String),
    #[error("{0}")]
    Runtime(String),
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INCOMPATIBLE: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Incompatible(_) => EXIT_INCOMPATIBLE,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> CliError {
        match e {
            CorpusError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            CorpusError::Io { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<BpeError> for CliError {
    fn from(e: BpeError) -> CliError {
        match e {
            BpeError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            BpeError::EmptyCorpus | BpeError::Format(_) => CliError::Data(e.to_string()),
            BpeError::InvalidId { .. } => CliError::Incompatible(e.to_string()),
            BpeError::Io { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> CliError {
        match e {
            SampleError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            SampleError::Format(_) => CliError::Data(e.to_string()),
            SampleError::Io { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> CliError {
        match e {
            NnError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            // Shape and label violations mean a model or data file carries
            // structurally wrong content.
            NnError::ShapeMismatch(_) | NnError::InvalidLabel { .. } => {
                CliError::Data(e.to_string())
            }
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> CliError {
        match e {
            ModelError::Nn(inner) => inner.into(),
            ModelError::IdOutOfRange { .. } => CliError::Incompatible(e.to_string()),
            ModelError::AllPadInput => CliError::Data(e.to_string()),
            ModelError::InvalidArgument(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> CliError {
        match e {
            HarnessError::Model(inner) => inner.into(),
            HarnessError::Nn(inner) => inner.into(),
            HarnessError::Bpe(inner) => inner.into(),
            HarnessError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            HarnessError::Format(_) | HarnessError::EmptySampleSet => {
                CliError::Data(e.to_string())
            }
            HarnessError::VocabMismatch { .. } => CliError::Incompatible(e.to_string()),
            HarnessError::Io { .. } | HarnessError::Stream(_) => CliError::Runtime(e.to_string()),
        }
    }
}
