//! Minibatch training with per-epoch reshuffling, gradient clipping, Adam,
//! periodic metrics rows, and a checkpoint after every epoch.

use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::eval::{MetricsRow, Split, CSV_HEADER};
use super::{check_vocab, io_err, Checkpoint, HarnessError};
use crate::model::{topk_of, Model, ModelKind};
use crate::nn::optim::{adam_step, clip_global_norm};
use crate::nn::tape::Tape;
use crate::nn::{Hyperparams, Real};
use crate::samples::SampleSet;

/// A metrics row is appended after every this many optimizer steps.
pub const LOG_EVERY_STEPS: u64 = 100;

/// Train a fresh model. Writes `metrics.csv`, per-epoch checkpoints
/// (`ckpt-epoch-<n>.txt`), and a final `checkpoint.txt` into `out_dir`;
/// returns the final checkpoint.
pub fn train(
    kind: ModelKind,
    samples: &SampleSet,
    vocab_size: usize,
    hp: &Hyperparams,
    out_dir: &Path,
) -> Result<Checkpoint, HarnessError> {
    hp.validate()?;
    if samples.samples.is_empty() {
        return Err(HarnessError::EmptySampleSet);
    }
    check_vocab(samples, vocab_size)?;
    let mut rng = ChaCha20Rng::seed_from_u64(hp.seed);
    let mut model = Model::new(kind, vocab_size, hp, &mut rng)?;
    run_epochs(&mut model, samples, hp, &mut rng, 0, 0, out_dir)
}

/// Continue training from a checkpoint up to its configured epoch count.
/// The restored generator position makes the continuation bit-identical to
/// a run that never stopped.
pub fn resume(
    ckpt: &Checkpoint,
    samples: &SampleSet,
    out_dir: &Path,
) -> Result<Checkpoint, HarnessError> {
    if samples.samples.is_empty() {
        return Err(HarnessError::EmptySampleSet);
    }
    check_vocab(samples, ckpt.vocab_size)?;
    if ckpt.epoch >= ckpt.hp.epochs {
        return Err(HarnessError::InvalidArgument(format!(
            "checkpoint already finished its {} epochs",
            ckpt.hp.epochs
        )));
    }
    let mut model = ckpt.to_model();
    let mut rng = ckpt.restore_rng();
    let hp = ckpt.hp.clone();
    run_epochs(
        &mut model,
        samples,
        &hp,
        &mut rng,
        ckpt.epoch,
        ckpt.step,
        out_dir,
    )
}

struct WindowStats {
    count: u64,
    loss_sum: Real,
    top1: u64,
    top5: u64,
}

impl WindowStats {
    fn new() -> Self {
        WindowStats {
            count: 0,
            loss_sum: 0.0,
            top1: 0,
            top5: 0,
        }
    }

    fn record(&mut self, loss: Real, dist: &[Real], label: u32) {
        let top = topk_of(dist, 5);
        if top[0].0 == label {
            self.top1 += 1;
        }
        if top.iter().any(|&(id, _)| id == label) {
            self.top5 += 1;
        }
        self.loss_sum += loss;
        self.count += 1;
    }

    fn row(&self, epoch: usize, step: u64, seconds: f64) -> MetricsRow {
        let n = self.count as Real;
        let mean = self.loss_sum / n;
        MetricsRow {
            epoch,
            step,
            split: Split::Train,
            loss: mean,
            top1: self.top1 as Real / n,
            top5: self.top5 as Real / n,
            perplexity: mean.exp(),
            seconds,
        }
    }
}

fn run_epochs(
    model: &mut Model,
    samples: &SampleSet,
    hp: &Hyperparams,
    rng: &mut ChaCha20Rng,
    start_epoch: usize,
    start_step: u64,
    out_dir: &Path,
) -> Result<Checkpoint, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let metrics_path = out_dir.join("metrics.csv");
    let fresh = !metrics_path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&metrics_path)
        .map_err(|e| io_err(&metrics_path, e))?;
    let mut metrics = BufWriter::new(file);
    if fresh {
        writeln!(metrics, "{CSV_HEADER}").map_err(|e| io_err(&metrics_path, e))?;
    }

    let started = Instant::now();
    let mut tape = Tape::new();
    let mut step = start_step;
    let mut stats = WindowStats::new();
    let mut last = None;
    for epoch in start_epoch..hp.epochs {
        let mut order: Vec<usize> = (0..samples.samples.len()).collect();
        order.shuffle(rng);
        for batch in order.chunks(hp.batch_size) {
            let inv = 1.0 / batch.len() as Real;
            for &idx in batch {
                let sample = &samples.samples[idx];
                tape.clear();
                let fw = model.forward(&mut tape, &sample.inputs)?;
                let loss = model.loss(&mut tape, &fw, sample.label)?;
                stats.record(tape.value(loss)[0], tape.value(fw.y), sample.label);
                tape.backward(loss, inv, &mut model.params)?;
            }
            clip_global_norm(&mut model.params, hp.clip_norm)?;
            step += 1;
            adam_step(&mut model.params, hp, step)?;
            if step % LOG_EVERY_STEPS == 0 {
                let row = stats.row(epoch + 1, step, started.elapsed().as_secs_f64());
                writeln!(metrics, "{}", row.csv_line()).map_err(|e| io_err(&metrics_path, e))?;
                stats = WindowStats::new();
            }
        }
        let ckpt = Checkpoint::capture(model, hp, samples.window, epoch + 1, step, rng);
        let path = out_dir.join(format!("ckpt-epoch-{}.txt", epoch + 1));
        ckpt.save(&path)?;
        last = Some(ckpt);
    }
    metrics.flush().map_err(|e| io_err(&metrics_path, e))?;
    let ckpt = last.expect("epoch range was validated non-empty");
    ckpt.save(&out_dir.join("checkpoint.txt"))?;
    Ok(ckpt)
}

/// Lighter loop for capacity tests: no files, stops as soon as `target_top1`
/// is reached on the training data, returns (epochs run, final top-1).
pub fn train_until(
    model: &mut Model,
    samples: &SampleSet,
    hp: &Hyperparams,
    rng: &mut ChaCha20Rng,
    max_epochs: usize,
    target_top1: Real,
) -> Result<(usize, Real), HarnessError> {
    if samples.samples.is_empty() {
        return Err(HarnessError::EmptySampleSet);
    }
    check_vocab(samples, model.vocab_size)?;
    let mut tape = Tape::new();
    let mut step = 0u64;
    let mut best = 0.0;
    for epoch in 1..=max_epochs {
        let mut order: Vec<usize> = (0..samples.samples.len()).collect();
        order.shuffle(rng);
        let mut hits = 0u64;
        for batch in order.chunks(hp.batch_size) {
            let inv = 1.0 / batch.len() as Real;
            for &idx in batch {
                let sample = &samples.samples[idx];
                tape.clear();
                let fw = model.forward(&mut tape, &sample.inputs)?;
                let loss = model.loss(&mut tape, &fw, sample.label)?;
                if topk_of(tape.value(fw.y), 1)[0].0 == sample.label {
                    hits += 1;
                }
                tape.backward(loss, inv, &mut model.params)?;
            }
            clip_global_norm(&mut model.params, hp.clip_norm)?;
            step += 1;
            adam_step(&mut model.params, hp, step)?;
        }
        best = hits as Real / samples.samples.len() as Real;
        if best >= target_top1 {
            return Ok((epoch, best));
        }
    }
    Ok((max_epochs, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::TokenSequence;
    use crate::samples::{generate_samples, PadSide, Sample};

    fn toy_samples() -> SampleSet {
        let ids = TokenSequence(vec![2, 3, 4, 5, 2, 3, 4, 5, 2, 3]);
        let samples = generate_samples(&ids, 4, 2, PadSide::Right).unwrap();
        SampleSet {
            window: 4,
            step: 2,
            samples,
        }
    }

    fn tiny_hp(epochs: usize) -> Hyperparams {
        Hyperparams {
            embed_dim: 4,
            hidden_dim: 3,
            batch_size: 2,
            epochs,
            seed: 11,
            ..Hyperparams::default()
        }
    }

    #[test]
    fn single_sample_single_epoch_takes_one_step() {
        let dir = tempfile::tempdir().unwrap();
        let set = SampleSet {
            window: 3,
            step: 1,
            samples: vec![Sample {
                inputs: vec![2, 3, 0],
                label: 4,
            }],
        };
        let ckpt = train(ModelKind::Attn, &set, 6, &tiny_hp(1), dir.path()).unwrap();
        assert_eq!(ckpt.step, 1);
        assert_eq!(ckpt.epoch, 1);
        let row = super::super::evaluate(&ckpt, &set).unwrap();
        assert!(row.loss.is_finite());
    }

    #[test]
    fn same_seed_gives_byte_identical_checkpoints() {
        let set = toy_samples();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let c1 = train(ModelKind::Pointer, &set, 6, &tiny_hp(2), d1.path()).unwrap();
        let c2 = train(ModelKind::Pointer, &set, 6, &tiny_hp(2), d2.path()).unwrap();
        assert_eq!(c1.to_text(), c2.to_text());
        let f1 = std::fs::read(d1.path().join("checkpoint.txt")).unwrap();
        let f2 = std::fs::read(d2.path().join("checkpoint.txt")).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn resume_reproduces_the_uninterrupted_run() {
        let set = toy_samples();
        let full_dir = tempfile::tempdir().unwrap();
        let half_dir = tempfile::tempdir().unwrap();
        let full = train(ModelKind::Attn, &set, 6, &tiny_hp(4), full_dir.path()).unwrap();

        let mut first_half = tiny_hp(4);
        first_half.epochs = 2;
        train(ModelKind::Attn, &set, 6, &first_half, half_dir.path()).unwrap();
        let mut mid = Checkpoint::load(&half_dir.path().join("ckpt-epoch-2.txt")).unwrap();
        // The interrupted run was configured for 4 epochs total.
        mid.hp.epochs = 4;
        let resumed = resume(&mid, &set, half_dir.path()).unwrap();
        assert_eq!(resumed.to_text(), full.to_text());
    }

    #[test]
    fn empty_sample_set_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let set = SampleSet {
            window: 3,
            step: 1,
            samples: vec![],
        };
        assert!(matches!(
            train(ModelKind::Attn, &set, 6, &tiny_hp(1), dir.path()),
            Err(HarnessError::EmptySampleSet)
        ));
    }

    #[test]
    fn vocab_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let set = SampleSet {
            window: 2,
            step: 1,
            samples: vec![Sample {
                inputs: vec![2, 9],
                label: 3,
            }],
        };
        assert!(matches!(
            train(ModelKind::Attn, &set, 6, &tiny_hp(1), dir.path()),
            Err(HarnessError::VocabMismatch { id: 9, .. })
        ));
    }
}
