//! Interactive completion: read a code line, encode it, and print the
//! model's ranked next subwords plus a greedy continuation.

use std::io::{BufRead, Write};

use super::HarnessError;
use crate::bpe::{BpeModel, PAD_ID, UNK_ID};
use crate::corpus::normalize_source;
use crate::model::Model;

/// Greedy continuation length printed after the ranked list.
const CONTINUATION_STEPS: usize = 10;

/// Last `window` ids, right-padded with PAD when the context is shorter.
fn context_window(ids: &[u32], window: usize) -> Vec<u32> {
    let tail = if ids.len() > window {
        &ids[ids.len() - window..]
    } else {
        ids
    };
    let mut out = tail.to_vec();
    out.resize(window, PAD_ID);
    out
}

/// Prompt loop over `input`/`output`. Empty lines re-prompt; unknown
/// subwords are reported inline; EOF ends the loop.
pub fn complete_repl<R: BufRead, W: Write>(
    model: &Model,
    bpe: &BpeModel,
    window: usize,
    topk: usize,
    mut input: R,
    mut output: W,
) -> Result<(), HarnessError> {
    if window == 0 {
        return Err(HarnessError::InvalidArgument(
            "window must be at least 1".into(),
        ));
    }
    if topk == 0 || topk > model.vocab_size {
        return Err(HarnessError::InvalidArgument(format!(
            "topk must lie in 1..={}, got {topk}",
            model.vocab_size
        )));
    }
    if bpe.vocab_size() != model.vocab_size {
        return Err(HarnessError::VocabMismatch {
            id: bpe.vocab_size().saturating_sub(1) as u32,
            vocab: model.vocab_size,
        });
    }
    loop {
        write!(output, "> ")?;
        output.flush()?;
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            writeln!(output)?;
            return Ok(());
        }
        let normalized = normalize_source(&line);
        if normalized.is_empty() {
            continue;
        }
        let ids = bpe.encode(&normalized);
        let unknown = ids.as_slice().iter().filter(|&&id| id == UNK_ID).count();
        if unknown > 0 {
            writeln!(
                output,
                "note: {unknown} of {} subwords are unknown",
                ids.len()
            )?;
        }
        let ctx = context_window(ids.as_slice(), window);
        for (rank, (id, prob)) in model.predict_topk(&ctx, topk)?.iter().enumerate() {
            writeln!(output, "{:>3}. {:<16} {:.4}", rank + 1, bpe.token_string(*id)?, prob)?;
        }

        let mut extended = ids.as_slice().to_vec();
        let mut continuation = Vec::with_capacity(CONTINUATION_STEPS);
        for _ in 0..CONTINUATION_STEPS {
            let ctx = context_window(&extended, window);
            let (next, _) = model.predict_topk(&ctx, 1)?[0];
            continuation.push(next);
            extended.push(next);
        }
        writeln!(output, "greedy: {}", bpe.decode(&continuation)?)?;
    }
}
