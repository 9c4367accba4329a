//! Byte pair encoding over a whitespace-normalized corpus.
//!
//! Training is word-internal in the classic style: each space-separated word
//! is split into characters plus an end-of-word marker, and the most frequent
//! adjacent symbol pair is merged until the vocabulary reaches its target
//! size or no pair occurs at least twice. Ids 0 and 1 are reserved for PAD
//! and UNK; content ids are contiguous above them.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as FmtWrite;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::corpus::CorpusFile;

/// Reserved id for padding. Never produced by the encoder.
pub const PAD_ID: u32 = 0;
/// Reserved id for characters outside the learned alphabet.
pub const UNK_ID: u32 = 1;
/// What UNK decodes to.
pub const UNK_GLYPH: char = '\u{fffd}';

/// Spelling of the end-of-word marker in model files, merge rules, and
/// tie-break comparisons.
pub const WORD_END: &str = "</w>";

/// Count of reserved ids (PAD and UNK) at the bottom of every vocabulary.
pub const RESERVED: usize = 2;

#[derive(Debug, Error)]
pub enum BpeError {
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("corpus contains no words")]
    EmptyCorpus,
    #[error("model file format error: {0}")]
    Format(String),
    #[error("id {id} out of range for vocabulary of {vocab_size}")]
    InvalidId { id: u32, vocab_size: usize },
}

/// A sequence of vocabulary ids for one encoded document. Produced by
/// [`BpeModel::encode`]; never contains PAD.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence(pub Vec<u32>);

impl TokenSequence {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One vocabulary entry: the token's character content plus whether it
/// carries the end-of-word marker. The marker alone is `("", true)`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Token {
    text: String,
    ends_word: bool,
    /// `text` with the marker spelled out; the string used for serialization
    /// order and tie-breaks.
    raw: String,
}

impl Token {
    fn new(text: String, ends_word: bool) -> Self {
        let mut raw = text.clone();
        if ends_word {
            raw.push_str(WORD_END);
        }
        Token {
            text,
            ends_word,
            raw,
        }
    }
}

/// A merge rule: replace adjacent `(left, right)` with `result`. Rank is the
/// rule's position in [`BpeModel::merges`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Merge {
    pub left: u32,
    pub right: u32,
    pub result: u32,
}

/// A trained BPE model: alphabet, ordered merge list, and the id↔token
/// bijection with PAD and UNK reserved at ids 0 and 1.
#[derive(Debug, Clone)]
pub struct BpeModel {
    tokens: Vec<Token>,
    alphabet: HashMap<char, u32>,
    marker_id: u32,
    merges: Vec<Merge>,
    merge_ranks: HashMap<(u32, u32), u32>,
}

/// Encoder-level statistics over a corpus; the UNK rate here is what subword
/// encoding is supposed to drive to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VocabStats {
    pub total_tokens: u64,
    pub unk_tokens: u64,
    pub unk_rate: f64,
    pub mean_seq_len: f64,
}

impl BpeModel {
    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn merge_count(&self) -> usize {
        self.merges.len()
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Serialized spelling of a token id (marker spelled `</w>`), unescaped.
    pub fn token_string(&self, id: u32) -> Result<&str, BpeError> {
        self.tokens
            .get(id as usize)
            .map(|t| t.raw.as_str())
            .ok_or(BpeError::InvalidId {
                id,
                vocab_size: self.tokens.len(),
            })
    }

    /// Encode one whitespace-normalized line as subword ids.
    pub fn encode(&self, line: &str) -> TokenSequence {
        self.encode_with_rank_limit(line, self.merges.len())
    }

    /// Encode using only the first `limit` merge rules. `encode` is the
    /// `limit = merges.len()` case; smaller limits exist for compression
    /// diagnostics and tests.
    pub fn encode_with_rank_limit(&self, line: &str, limit: usize) -> TokenSequence {
        let mut ids = Vec::new();
        for word in line.split(' ').filter(|w| !w.is_empty()) {
            let mut syms: Vec<u32> = word
                .chars()
                .map(|c| *self.alphabet.get(&c).unwrap_or(&UNK_ID))
                .collect();
            syms.push(self.marker_id);
            self.apply_merges(&mut syms, limit);
            ids.extend_from_slice(&syms);
        }
        TokenSequence(ids)
    }

    /// Repeatedly apply the lowest-ranked rule that matches anywhere in the
    /// word, replacing occurrences left to right.
    fn apply_merges(&self, syms: &mut Vec<u32>, limit: usize) {
        loop {
            let mut best: Option<u32> = None;
            for pair in syms.windows(2) {
                if let Some(&rank) = self.merge_ranks.get(&(pair[0], pair[1])) {
                    if (rank as usize) < limit && best.is_none_or(|b| rank < b) {
                        best = Some(rank);
                    }
                }
            }
            let Some(rank) = best else { break };
            let merge = self.merges[rank as usize];
            let mut read = 0;
            let mut write = 0;
            while read < syms.len() {
                if read + 1 < syms.len()
                    && syms[read] == merge.left
                    && syms[read + 1] == merge.right
                {
                    syms[write] = merge.result;
                    read += 2;
                } else {
                    syms[write] = syms[read];
                    read += 1;
                }
                write += 1;
            }
            syms.truncate(write);
        }
    }

    /// Invert `encode`: concatenate token texts, turning each end-of-word
    /// marker into a space and trimming the trailing one.
    pub fn decode(&self, ids: &[u32]) -> Result<String, BpeError> {
        let mut out = String::new();
        for &id in ids {
            match id {
                PAD_ID => {}
                UNK_ID => out.push(UNK_GLYPH),
                _ => {
                    let token = self.tokens.get(id as usize).ok_or(BpeError::InvalidId {
                        id,
                        vocab_size: self.tokens.len(),
                    })?;
                    out.push_str(&token.text);
                    if token.ends_word {
                        out.push(' ');
                    }
                }
            }
        }
        if out.ends_with(' ') {
            out.pop();
        }
        Ok(out)
    }

    /// Token totals, UNK rate, and mean encoded length over `lines`.
    pub fn vocab_stats<'a>(&self, lines: impl IntoIterator<Item = &'a str>) -> VocabStats {
        let mut total = 0u64;
        let mut unk = 0u64;
        let mut line_count = 0u64;
        for line in lines {
            let seq = self.encode(line);
            total += seq.len() as u64;
            unk += seq.as_slice().iter().filter(|&&id| id == UNK_ID).count() as u64;
            line_count += 1;
        }
        VocabStats {
            total_tokens: total,
            unk_tokens: unk,
            unk_rate: if total == 0 {
                0.0
            } else {
                unk as f64 / total as f64
            },
            mean_seq_len: if line_count == 0 {
                0.0
            } else {
                total as f64 / line_count as f64
            },
        }
    }
}

/// Train a BPE model on corpus lines. Merging stops at `target_vocab_size`
/// total entries (specials included) or when no pair occurs at least twice.
pub fn train_bpe_from_lines<'a>(
    lines: impl IntoIterator<Item = &'a str>,
    target_vocab_size: usize,
) -> Result<BpeModel, BpeError> {
    // Word multiset, counted once up front; pair counts are weighted by it.
    let mut word_freqs: HashMap<String, u64> = HashMap::new();
    for line in lines {
        for word in line.split(' ').filter(|w| !w.is_empty()) {
            *word_freqs.entry(word.to_owned()).or_insert(0) += 1;
        }
    }
    if word_freqs.is_empty() {
        return Err(BpeError::EmptyCorpus);
    }

    let mut alphabet_chars: Vec<char> = {
        let set: HashSet<char> = word_freqs.keys().flat_map(|w| w.chars()).collect();
        set.into_iter().collect()
    };
    alphabet_chars.sort_unstable();

    // Id order: PAD, UNK, alphabet sorted by spelling (the marker among
    // them), then merge results in rank order.
    let mut tokens: Vec<Token> = vec![
        Token::new("<pad>".into(), false),
        Token::new("<unk>".into(), false),
    ];
    let mut entries: Vec<Token> = alphabet_chars
        .iter()
        .map(|&c| Token::new(c.to_string(), false))
        .collect();
    entries.push(Token::new(String::new(), true));
    entries.sort_by(|a, b| a.raw.cmp(&b.raw));
    tokens.extend(entries);

    if target_vocab_size < tokens.len() {
        return Err(BpeError::InvalidArgument(format!(
            "target vocab size {} cannot hold the alphabet plus specials ({})",
            target_vocab_size,
            tokens.len()
        )));
    }

    let mut alphabet: HashMap<char, u32> = HashMap::new();
    let mut marker_id = 0u32;
    let mut raw_to_id: HashMap<String, u32> = HashMap::new();
    for (id, token) in tokens.iter().enumerate().skip(RESERVED) {
        raw_to_id.insert(token.raw.clone(), id as u32);
        if token.ends_word {
            marker_id = id as u32;
        } else {
            alphabet.insert(token.text.chars().next().unwrap(), id as u32);
        }
    }

    struct WordEntry {
        syms: Vec<u32>,
        freq: u64,
    }
    let mut words: Vec<WordEntry> = word_freqs
        .into_iter()
        .map(|(word, freq)| {
            let mut syms: Vec<u32> = word.chars().map(|c| alphabet[&c]).collect();
            syms.push(marker_id);
            WordEntry { syms, freq }
        })
        .collect();
    // HashMap iteration order must not leak into anything observable; word
    // order only matters for bookkeeping, but sort anyway so debugging runs
    // line up.
    words.sort_by(|a, b| a.syms.cmp(&b.syms));

    let mut pair_counts: HashMap<(u32, u32), u64> = HashMap::new();
    let mut pair_words: HashMap<(u32, u32), HashSet<usize>> = HashMap::new();
    for (w_idx, w) in words.iter().enumerate() {
        for pair in w.syms.windows(2) {
            let key = (pair[0], pair[1]);
            *pair_counts.entry(key).or_insert(0) += w.freq;
            pair_words.entry(key).or_default().insert(w_idx);
        }
    }

    let mut merges: Vec<Merge> = Vec::new();
    let mut merge_ranks: HashMap<(u32, u32), u32> = HashMap::new();

    while tokens.len() < target_vocab_size {
        // Highest count wins; ties go to the lexicographically smallest
        // (left, right) spelling. The full scan keeps the choice independent
        // of hash iteration order.
        let mut best: Option<((u32, u32), u64)> = None;
        for (&pair, &count) in &pair_counts {
            if count < 2 {
                continue;
            }
            best = match best {
                None => Some((pair, count)),
                Some((bp, bc)) => {
                    if count > bc {
                        Some((pair, count))
                    } else if count == bc {
                        let cand = (
                            &tokens[pair.0 as usize].raw,
                            &tokens[pair.1 as usize].raw,
                        );
                        let cur = (&tokens[bp.0 as usize].raw, &tokens[bp.1 as usize].raw);
                        if cand < cur {
                            Some((pair, count))
                        } else {
                            Some((bp, bc))
                        }
                    } else {
                        Some((bp, bc))
                    }
                }
            };
        }
        let Some((pair, _)) = best else { break };

        let (left, right) = pair;
        let merged = Token::new(
            format!(
                "{}{}",
                tokens[left as usize].text, tokens[right as usize].text
            ),
            tokens[right as usize].ends_word,
        );
        if raw_to_id.contains_key(&merged.raw) {
            // Left-to-right within-word merging cannot re-create an existing
            // spelling; the id↔token bijection depends on it.
            return Err(BpeError::Format(format!(
                "merge would duplicate existing token {:?}",
                merged.raw
            )));
        }
        let result = tokens.len() as u32;
        raw_to_id.insert(merged.raw.clone(), result);
        tokens.push(merged);
        merge_ranks.insert(pair, merges.len() as u32);
        merges.push(Merge {
            left,
            right,
            result,
        });

        let affected = pair_words.remove(&pair).unwrap_or_default();
        pair_counts.remove(&pair);
        for w_idx in affected {
            let freq = words[w_idx].freq;
            // Retract this word's pair contributions, rewrite it with the
            // merge applied, then re-add. Counting stays equivalent to a
            // from-scratch recount.
            for p in words[w_idx].syms.windows(2) {
                let key = (p[0], p[1]);
                if key == pair {
                    continue; // already dropped wholesale above
                }
                if let Some(c) = pair_counts.get_mut(&key) {
                    *c -= freq;
                    if *c == 0 {
                        pair_counts.remove(&key);
                    }
                }
                if let Some(set) = pair_words.get_mut(&key) {
                    set.remove(&w_idx);
                    if set.is_empty() {
                        pair_words.remove(&key);
                    }
                }
            }
            let syms = &mut words[w_idx].syms;
            let mut read = 0;
            let mut write = 0;
            while read < syms.len() {
                if read + 1 < syms.len() && syms[read] == left && syms[read + 1] == right {
                    syms[write] = result;
                    read += 2;
                } else {
                    syms[write] = syms[read];
                    read += 1;
                }
                write += 1;
            }
            syms.truncate(write);
            for p in words[w_idx].syms.windows(2) {
                let key = (p[0], p[1]);
                *pair_counts.entry(key).or_insert(0) += freq;
                pair_words.entry(key).or_default().insert(w_idx);
            }
        }
    }

    Ok(BpeModel {
        tokens,
        alphabet,
        marker_id,
        merges,
        merge_ranks,
    })
}

/// [`train_bpe_from_lines`] over a corpus file on disk.
pub fn train_bpe(corpus: &CorpusFile, target_vocab_size: usize) -> Result<BpeModel, BpeError> {
    let text = fs::read_to_string(&corpus.path).map_err(|source| BpeError::Io {
        path: corpus.path.clone(),
        source,
    })?;
    train_bpe_from_lines(text.lines(), target_vocab_size)
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            ' ' => out.push_str("\\s"),
            '\n' => out.push_str("\\n"),
            '\\' => out.push_str("\\\\"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(text: &str) -> Result<String, BpeError> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('s') => out.push(' '),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            other => {
                return Err(BpeError::Format(format!(
                    "bad escape \\{} in {text:?}",
                    other.map(String::from).unwrap_or_default()
                )))
            }
        }
    }
    Ok(out)
}

fn serialize_token(token: &Token) -> String {
    let mut out = escape(&token.text);
    if token.ends_word {
        out.push_str(WORD_END);
    }
    out
}

fn parse_token(s: &str) -> Result<Token, BpeError> {
    let (body, ends_word) = match s.strip_suffix(WORD_END) {
        Some(rest) => (rest, true),
        None => (s, false),
    };
    Ok(Token::new(unescape(body)?, ends_word))
}

impl BpeModel {
    /// Serialize to the plain-text model format.
    pub fn to_model_text(&self) -> String {
        let mut out = String::new();
        out.push_str("bpe-model v1\n");
        let _ = writeln!(out, "vocab {}", self.tokens.len());
        for (id, token) in self.tokens.iter().enumerate() {
            if id < RESERVED {
                let _ = writeln!(out, "{id} {}", token.text);
            } else {
                let _ = writeln!(out, "{id} {}", serialize_token(token));
            }
        }
        let _ = writeln!(out, "merges {}", self.merges.len());
        for m in &self.merges {
            let _ = writeln!(
                out,
                "{} {}",
                serialize_token(&self.tokens[m.left as usize]),
                serialize_token(&self.tokens[m.right as usize])
            );
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), BpeError> {
        fs::write(path, self.to_model_text()).map_err(|source| BpeError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Parse the plain-text model format, validating ids, counts, and that
    /// every merge references known tokens and produces a known token.
    pub fn from_model_text(text: &str) -> Result<Self, BpeError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != "bpe-model v1" {
            return Err(BpeError::Format(format!("bad header {header:?}")));
        }
        let vocab_line = lines.next().unwrap_or_default();
        let vocab_size: usize = vocab_line
            .strip_prefix("vocab ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| BpeError::Format(format!("bad vocab line {vocab_line:?}")))?;
        if vocab_size < RESERVED + 1 {
            return Err(BpeError::Format(format!(
                "vocab size {vocab_size} too small"
            )));
        }

        let mut tokens: Vec<Token> = Vec::with_capacity(vocab_size);
        let mut raw_to_id: HashMap<String, u32> = HashMap::new();
        for id in 0..vocab_size {
            let line = lines
                .next()
                .ok_or_else(|| BpeError::Format("vocab section truncated".into()))?;
            let (id_str, tok_str) = line
                .split_once(' ')
                .ok_or_else(|| BpeError::Format(format!("bad vocab entry {line:?}")))?;
            if id_str.parse::<usize>() != Ok(id) {
                return Err(BpeError::Format(format!(
                    "vocab entry {line:?} out of order, expected id {id}"
                )));
            }
            if id < RESERVED {
                tokens.push(Token::new(tok_str.to_owned(), false));
            } else {
                let token = parse_token(tok_str)?;
                if raw_to_id.insert(token.raw.clone(), id as u32).is_some() {
                    return Err(BpeError::Format(format!(
                        "duplicate token {:?}",
                        token.raw
                    )));
                }
                tokens.push(token);
            }
        }

        let merges_line = lines.next().unwrap_or_default();
        let merge_count: usize = merges_line
            .strip_prefix("merges ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| BpeError::Format(format!("bad merges line {merges_line:?}")))?;
        if vocab_size < RESERVED + merge_count {
            return Err(BpeError::Format(
                "merge count exceeds vocabulary".to_string(),
            ));
        }

        let mut merges = Vec::with_capacity(merge_count);
        let mut merge_ranks = HashMap::new();
        for rank in 0..merge_count {
            let line = lines
                .next()
                .ok_or_else(|| BpeError::Format("merges section truncated".into()))?;
            let (l_str, r_str) = line
                .split_once(' ')
                .ok_or_else(|| BpeError::Format(format!("bad merge entry {line:?}")))?;
            let left_tok = parse_token(l_str)?;
            let right_tok = parse_token(r_str)?;
            let left = *raw_to_id
                .get(&left_tok.raw)
                .ok_or_else(|| BpeError::Format(format!("merge references {l_str:?}")))?;
            let right = *raw_to_id
                .get(&right_tok.raw)
                .ok_or_else(|| BpeError::Format(format!("merge references {r_str:?}")))?;
            let result_raw = Token::new(
                format!("{}{}", left_tok.text, right_tok.text),
                right_tok.ends_word,
            )
            .raw;
            let result = *raw_to_id
                .get(&result_raw)
                .ok_or_else(|| BpeError::Format(format!("merge result {result_raw:?} missing")))?;
            merge_ranks.insert((left, right), rank as u32);
            merges.push(Merge {
                left,
                right,
                result,
            });
        }
        if let Some(extra) = lines.next() {
            if !extra.trim().is_empty() {
                return Err(BpeError::Format(format!("trailing content {extra:?}")));
            }
        }

        let mut alphabet = HashMap::new();
        let mut marker_id = None;
        let alphabet_end = vocab_size - merge_count;
        for (id, token) in tokens.iter().enumerate().take(alphabet_end).skip(RESERVED) {
            if token.ends_word && token.text.is_empty() {
                marker_id = Some(id as u32);
            } else {
                let mut chars = token.text.chars();
                match (chars.next(), chars.next(), token.ends_word) {
                    (Some(c), None, false) => {
                        alphabet.insert(c, id as u32);
                    }
                    _ => {
                        return Err(BpeError::Format(format!(
                            "alphabet entry {:?} is not a single character",
                            token.raw
                        )))
                    }
                }
            }
        }
        let marker_id =
            marker_id.ok_or_else(|| BpeError::Format("missing end-of-word marker".into()))?;

        Ok(BpeModel {
            tokens,
            alphabet,
            marker_id,
            merges,
            merge_ranks,
        })
    }

    pub fn load(path: &Path) -> Result<Self, BpeError> {
        let text = fs::read_to_string(path).map_err(|source| BpeError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_model_text(&text)
    }
}
