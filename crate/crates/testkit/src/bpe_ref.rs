//! Naive BPE trainer: strings for symbolset, full pair recount every
//! iteration. Quadratic and proud of it; exists so the fast trainer has
//! something honest to disagree with.

use std::collections::{BTreeMap, BTreeSet};

use nextok_core::bpe::{BpeModel, WORD_END};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveBpe {
    /// Serialized spelling per id, in id order.
    pub vocab: Vec<String>,
    /// Merge pairs as spellings, in rank order.
    pub merges: Vec<(String, String)>,
}

/// Train with the textbook algorithm: split words into character symbols
/// plus an end marker, then repeatedly merge the most frequent adjacent
/// pair (ties to the lexicographically smallest pair) until the vocabulary
/// is full or no pair occurs twice.
pub fn naive_bpe(lines: &[&str], target_vocab: usize) -> NaiveBpe {
    let mut words: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for line in lines {
        for word in line.split(' ').filter(|w| !w.is_empty()) {
            let mut syms: Vec<String> = word.chars().map(|c| c.to_string()).collect();
            syms.push(WORD_END.to_string());
            *words.entry(syms).or_insert(0) += 1;
        }
    }

    let alphabet: BTreeSet<String> = words.keys().flatten().cloned().collect();
    let mut vocab: Vec<String> = vec!["<pad>".to_string(), "<unk>".to_string()];
    vocab.extend(alphabet);

    let mut merges = Vec::new();
    while vocab.len() < target_vocab {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (syms, freq) in &words {
            for pair in syms.windows(2) {
                *counts
                    .entry((pair[0].clone(), pair[1].clone()))
                    .or_insert(0) += freq;
            }
        }
        // Ascending key order means the first maximum seen is the smallest
        // pair, which is exactly the tie-break.
        let mut best: Option<(&(String, String), u64)> = None;
        for (pair, &count) in &counts {
            if count >= 2 && best.is_none_or(|(_, bc)| count > bc) {
                best = Some((pair, count));
            }
        }
        let Some((pair, _)) = best else { break };
        let (left, right) = pair.clone();
        let joined = format!("{left}{right}");

        let rewritten: BTreeMap<Vec<String>, u64> = words
            .iter()
            .map(|(syms, &freq)| {
                let mut out = Vec::with_capacity(syms.len());
                let mut i = 0;
                while i < syms.len() {
                    if i + 1 < syms.len() && syms[i] == left && syms[i + 1] == right {
                        out.push(joined.clone());
                        i += 2;
                    } else {
                        out.push(syms[i].clone());
                        i += 1;
                    }
                }
                (out, freq)
            })
            .collect();
        words = rewritten;
        vocab.push(joined);
        merges.push((left, right));
    }

    NaiveBpe { vocab, merges }
}

/// Flatten a trained model into the same spelling-based shape for comparison.
pub fn model_vocab_and_merges(model: &BpeModel) -> NaiveBpe {
    let vocab: Vec<String> = (0..model.vocab_size() as u32)
        .map(|id| model.token_string(id).unwrap().to_string())
        .collect();
    let merges: Vec<(String, String)> = model
        .merges()
        .iter()
        .map(|m| {
            (
                model.token_string(m.left).unwrap().to_string(),
                model.token_string(m.right).unwrap().to_string(),
            )
        })
        .collect();
    NaiveBpe { vocab, merges }
}
