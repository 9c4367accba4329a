//! Held-out evaluation: top-1/top-5 accuracy and perplexity, plus the
//! two-column comparison table the experiment report uses.

use std::fmt::Write as _;
use std::time::Instant;

use super::{check_vocab, Checkpoint, HarnessError};
use crate::model::{topk_of, Model};
use crate::nn::tape::Tape;
use crate::nn::Real;
use crate::samples::SampleSet;

pub const CSV_HEADER: &str = "epoch,step,split,loss,top1,top5,perplexity,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Eval,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Eval => "eval",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    pub step: u64,
    pub split: Split,
    pub loss: Real,
    pub top1: Real,
    pub top5: Real,
    pub perplexity: Real,
    pub seconds: f64,
}

impl MetricsRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3}",
            self.epoch,
            self.step,
            self.split.as_str(),
            self.loss,
            self.top1,
            self.top5,
            self.perplexity,
            self.seconds
        )
    }
}

/// Score a checkpoint on a sample set without touching it: mean loss, top-1
/// and top-5 accuracy, and perplexity = exp(mean loss).
pub fn evaluate(ckpt: &Checkpoint, samples: &SampleSet) -> Result<MetricsRow, HarnessError> {
    let model = ckpt.to_model();
    evaluate_model(&model, samples, ckpt.epoch, ckpt.step)
}

pub fn evaluate_model(
    model: &Model,
    samples: &SampleSet,
    epoch: usize,
    step: u64,
) -> Result<MetricsRow, HarnessError> {
    if samples.samples.is_empty() {
        return Err(HarnessError::EmptySampleSet);
    }
    check_vocab(samples, model.vocab_size)?;
    let started = Instant::now();
    let mut tape = Tape::new();
    let mut loss_sum = 0.0;
    let mut top1 = 0u64;
    let mut top5 = 0u64;
    for sample in &samples.samples {
        tape.clear();
        let fw = model.forward(&mut tape, &sample.inputs)?;
        let loss = model.loss(&mut tape, &fw, sample.label)?;
        loss_sum += tape.value(loss)[0];
        let top = topk_of(tape.value(fw.y), 5);
        if top[0].0 == sample.label {
            top1 += 1;
        }
        if top.iter().any(|&(id, _)| id == sample.label) {
            top5 += 1;
        }
    }
    let n = samples.samples.len() as Real;
    let mean = loss_sum / n;
    Ok(MetricsRow {
        epoch,
        step,
        split: Split::Eval,
        loss: mean,
        top1: top1 as Real / n,
        top5: top5 as Real / n,
        perplexity: mean.exp(),
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Two-column text table (model name, accuracy percent), one row per model.
pub fn comparison_table(rows: &[(&str, Real)]) -> String {
    let width = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(std::iter::once("model".len()))
        .max()
        .unwrap();
    let mut out = String::new();
    writeln!(out, "{:<width$} | accuracy", "model").unwrap();
    writeln!(out, "{:-<width$}-+---------", "").unwrap();
    for (name, acc) in rows {
        writeln!(out, "{name:<width$} | {:>7.2}%", acc * 100.0).unwrap();
    }
    out
}
