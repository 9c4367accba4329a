//! Vocabulary-truncation experiment: how often would the encoder emit UNK if
//! only the K most frequent ids were kept.

use std::fmt::Write as _;

use super::HarnessError;
use crate::bpe::{BpeModel, RESERVED, UNK_ID};

#[derive(Debug, Clone, PartialEq)]
pub struct OovRow {
    /// Ids kept, counting the two reserved ones.
    pub kept: usize,
    pub total_tokens: u64,
    pub unk_tokens: u64,
    pub unk_rate: f64,
}

/// For each truncation size K, count the tokens of the encoded corpus whose
/// id falls outside the K most frequent (reserved ids always kept, ranks by
/// descending count with ties toward the smaller id). K = vocab size means
/// no truncation, so only encoder-native UNKs remain.
pub fn oov_experiment(
    model: &BpeModel,
    lines: &[String],
    truncations: &[usize],
) -> Result<Vec<OovRow>, HarnessError> {
    if truncations.is_empty() {
        return Err(HarnessError::InvalidArgument(
            "need at least one truncation size".into(),
        ));
    }
    for &k in truncations {
        if k < RESERVED {
            return Err(HarnessError::InvalidArgument(format!(
                "truncation {k} would drop the reserved ids"
            )));
        }
    }

    let mut counts = vec![0u64; model.vocab_size()];
    let mut total = 0u64;
    for line in lines {
        for &id in model.encode(line).as_slice() {
            counts[id as usize] += 1;
            total += 1;
        }
    }
    let native_unk = counts[UNK_ID as usize];

    // Content ids ranked by frequency; prefix[i] = tokens covered by the i
    // most frequent content ids.
    let mut ranked: Vec<u32> = (RESERVED as u32..model.vocab_size() as u32).collect();
    ranked.sort_by(|&a, &b| {
        counts[b as usize]
            .cmp(&counts[a as usize])
            .then(a.cmp(&b))
    });
    let mut prefix = Vec::with_capacity(ranked.len() + 1);
    prefix.push(0u64);
    for &id in &ranked {
        prefix.push(prefix.last().unwrap() + counts[id as usize]);
    }
    let content_total = *prefix.last().unwrap();

    Ok(truncations
        .iter()
        .map(|&k| {
            let kept_content = (k - RESERVED).min(ranked.len());
            let dropped = content_total - prefix[kept_content];
            let unk = native_unk + dropped;
            OovRow {
                kept: k,
                total_tokens: total,
                unk_tokens: unk,
                unk_rate: if total == 0 {
                    0.0
                } else {
                    unk as f64 / total as f64
                },
            }
        })
        .collect())
}

/// Plain-text table of truncation rows.
pub fn oov_table(rows: &[OovRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{:>10} {:>12} {:>12} {:>10}", "kept", "tokens", "unk", "unk-rate").unwrap();
    for row in rows {
        writeln!(
            out,
            "{:>10} {:>12} {:>12} {:>10.6}",
            row.kept, row.total_tokens, row.unk_tokens, row.unk_rate
        )
        .unwrap();
    }
    out
}
