//! Corpus ingestion: flatten source files into a one-document-per-line text
//! file and split it into train/eval halves.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Summary of a written corpus file: one whitespace-normalized source
/// document per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub path: PathBuf,
    /// Number of documents (lines) in the file.
    pub line_count: usize,
    /// Input files that failed to decode and were left out.
    pub skipped: usize,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// The whitespace characters that get collapsed. Deliberately a fixed list
/// rather than `char::is_whitespace`: exotic Unicode spacing characters
/// inside string literals are content and survive normalization.
fn is_source_whitespace(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0b' | '\x0c')
}

/// Collapse every whitespace run to a single space and trim the ends, so the
/// whole document fits on one line.
pub fn normalize_source(raw_text: &str) -> String {
    let mut out = String::with_capacity(raw_text.len());
    let mut in_run = false;
    for c in raw_text.chars() {
        if is_source_whitespace(c) {
            in_run = true;
        } else {
            if in_run && !out.is_empty() {
                out.push(' ');
            }
            in_run = false;
            out.push(c);
        }
    }
    out
}

/// Normalize each readable input file onto one line of `output`, in input
/// order. Files that are not valid UTF-8 are skipped and counted, never
/// fatal; I/O problems on the output are.
pub fn build_corpus<P: AsRef<Path>>(
    file_paths: &[P],
    output: &Path,
) -> Result<CorpusFile, CorpusError> {
    let file = fs::File::create(output).map_err(|source| CorpusError::Io {
        path: output.to_path_buf(),
        source,
    })?;
    let mut writer = BufWriter::new(file);
    let mut line_count = 0usize;
    let mut skipped = 0usize;
    for path in file_paths {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = match String::from_utf8(bytes) {
            Ok(text) => text,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let line = normalize_source(&text);
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|source| CorpusError::Io {
                path: output.to_path_buf(),
                source,
            })?;
        line_count += 1;
    }
    writer.flush().map_err(|source| CorpusError::Io {
        path: output.to_path_buf(),
        source,
    })?;
    Ok(CorpusFile {
        path: output.to_path_buf(),
        line_count,
        skipped,
    })
}

/// Read a corpus file back as its list of document lines.
pub fn read_corpus_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Shuffle the corpus lines with a seeded generator and partition them into
/// train/eval files. The train file receives `round(train_fraction * n)`
/// lines; every line lands in exactly one output. The split is by whole
/// document so no document straddles the boundary.
pub fn split_corpus(
    corpus: &CorpusFile,
    train_fraction: f64,
    seed: u64,
    out_train: &Path,
    out_eval: &Path,
) -> Result<(CorpusFile, CorpusFile), CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::InvalidArgument(format!(
            "train fraction must lie in (0,1), got {train_fraction}"
        )));
    }
    let lines = read_corpus_lines(&corpus.path)?;
    if lines.len() < 2 {
        return Err(CorpusError::InvalidArgument(format!(
            "corpus must have at least 2 lines to split, got {}",
            lines.len()
        )));
    }
    let mut order: Vec<usize> = (0..lines.len()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = (train_fraction * lines.len() as f64).round() as usize;

    let write_subset = |path: &Path, idxs: &[usize]| -> Result<CorpusFile, CorpusError> {
        let file = fs::File::create(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut writer = BufWriter::new(file);
        for &i in idxs {
            writer
                .write_all(lines[i].as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .map_err(|source| CorpusError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
        }
        writer.flush().map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(CorpusFile {
            path: path.to_path_buf(),
            line_count: idxs.len(),
            skipped: 0,
        })
    };

    let train = write_subset(out_train, &order[..n_train])?;
    let eval = write_subset(out_eval, &order[n_train..])?;
    Ok((train, eval))
}
