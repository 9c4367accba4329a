//! Sliding-window sample generation and the binary samples file.
//!
//! Each encoded document is swept by a window of `N + 1` tokens advancing in
//! steps of `S`: the first `N` tokens (padded with PAD when the document tail
//! runs short) are the model input and the following token is the label.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::bpe::{TokenSequence, PAD_ID};

const MAGIC: &[u8; 4] = b"SMPL";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("samples file format error: {0}")]
    Format(String),
}

/// Which end of the input window receives PAD when the document tail is
/// shorter than the window. `Right` places padding between the context and
/// the prediction point, which is the behavior the downstream models are
/// trained against by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PadSide {
    #[default]
    Right,
    Left,
}

/// One training sample: a fixed-width window of input ids plus the label
/// that follows it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub inputs: Vec<u32>,
    pub label: u32,
}

impl Sample {
    /// Number of PAD ids in the input window.
    pub fn pad_count(&self) -> usize {
        self.inputs.iter().filter(|&&id| id == PAD_ID).count()
    }
}

/// An ordered collection of same-width samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub window: usize,
    pub step: usize,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn new(window: usize, step: usize) -> Self {
        SampleSet {
            window,
            step,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Closed form for how many windows `generate_samples` emits for a document
/// of `len` tokens: starts `s ∈ {0, S, 2S, …}` with `s + 1 < len`.
pub fn sample_count(len: usize, _window: usize, step: usize) -> usize {
    if len < 2 {
        return 0;
    }
    (len - 1).div_ceil(step)
}

/// Slice one encoded document into windowed samples. Window starts advance
/// by `step` from position 0; a start needs at least one real input token
/// and a label, and short tails are padded on `pad_side`.
pub fn generate_samples(
    ids: &TokenSequence,
    window: usize,
    step: usize,
    pad_side: PadSide,
) -> Result<Vec<Sample>, SampleError> {
    if window < 1 || step < 1 {
        return Err(SampleError::InvalidArgument(format!(
            "window and step must be at least 1, got window {window} step {step}"
        )));
    }
    let ids = ids.as_slice();
    let mut out = Vec::new();
    let mut start = 0usize;
    while start + 1 < ids.len() {
        let take = (window + 1).min(ids.len() - start);
        let real = &ids[start..start + take - 1];
        let label = ids[start + take - 1];
        let mut inputs = Vec::with_capacity(window);
        match pad_side {
            PadSide::Right => {
                inputs.extend_from_slice(real);
                inputs.resize(window, PAD_ID);
            }
            PadSide::Left => {
                inputs.resize(window - real.len(), PAD_ID);
                inputs.extend_from_slice(real);
            }
        }
        out.push(Sample { inputs, label });
        start += step;
    }
    Ok(out)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SampleError + '_ {
    move |source| SampleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write a sample set in the binary format: magic `SMPL`, version, window
/// width, sample count, then `window + 1` little-endian u32 words per record.
pub fn write_samples(set: &SampleSet, path: &Path) -> Result<(), SampleError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC).map_err(io_err(path))?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())
        .map_err(io_err(path))?;
    w.write_all(&(set.window as u32).to_le_bytes())
        .map_err(io_err(path))?;
    w.write_all(&(set.samples.len() as u64).to_le_bytes())
        .map_err(io_err(path))?;
    for sample in &set.samples {
        debug_assert_eq!(sample.inputs.len(), set.window);
        for &id in &sample.inputs {
            w.write_all(&id.to_le_bytes()).map_err(io_err(path))?;
        }
        w.write_all(&sample.label.to_le_bytes())
            .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Read a samples file back, rejecting bad magic, bad version, and truncated
/// or oversized payloads. The step is not stored; readers that need it carry
/// it out of band.
pub fn read_samples(path: &Path) -> Result<SampleSet, SampleError> {
    let mut file = fs::File::open(path).map_err(io_err(path))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(io_err(path))?;
    if bytes.len() < 20 {
        return Err(SampleError::Format("file shorter than header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(SampleError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(SampleError::Format(format!(
            "unsupported format version {version}"
        )));
    }
    let window = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if window == 0 {
        return Err(SampleError::Format("window width 0".into()));
    }
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let record_bytes = (window + 1) * 4;
    let expected = 20 + count * record_bytes;
    if bytes.len() != expected {
        return Err(SampleError::Format(format!(
            "payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut samples = Vec::with_capacity(count);
    let mut off = 20;
    for _ in 0..count {
        let mut inputs = Vec::with_capacity(window);
        for _ in 0..window {
            inputs.push(u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
            off += 4;
        }
        let label = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        off += 4;
        samples.push(Sample { inputs, label });
    }
    Ok(SampleSet {
        window,
        step: 0,
        samples,
    })
}
