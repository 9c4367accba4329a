//! Plain-text checkpoints. Values are written with Rust's shortest
//! round-trip float formatting, so save → load → save reproduces the file
//! byte for byte and a reloaded run continues on the identical trajectory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand_chacha::ChaCha20Rng;

use super::{io_err, HarnessError};
use crate::model::{Model, ModelKind};
use crate::nn::mat::Mat;
use crate::nn::{Hyperparams, Parameter, Real};

const HEADER: &str = "checkpoint v1";

/// Parameter names in serialization order; the pointer model uses all twelve,
/// the plain model the first ten.
const PARAM_NAMES: [&str; 12] = [
    "embed",
    "lstm_wx",
    "lstm_wh",
    "lstm_b",
    "attn_mem",
    "attn_query",
    "attn_v",
    "blend",
    "out_w",
    "out_b",
    "gate_w",
    "gate_b",
];

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub hp: Hyperparams,
    pub vocab_size: usize,
    /// Window size the training samples used; the completion loop needs it
    /// to rebuild input windows of the right shape.
    pub window: usize,
    /// Completed epochs.
    pub epoch: usize,
    /// Optimizer steps taken.
    pub step: u64,
    /// Stream position of the seeded generator, so resuming replays the
    /// exact shuffle sequence an uninterrupted run would produce.
    pub rng_word_pos: u128,
    pub params: Vec<Parameter>,
}

impl Checkpoint {
    pub fn capture(
        model: &Model,
        hp: &Hyperparams,
        window: usize,
        epoch: usize,
        step: u64,
        rng: &ChaCha20Rng,
    ) -> Checkpoint {
        Checkpoint {
            kind: model.kind,
            hp: hp.clone(),
            vocab_size: model.vocab_size,
            window,
            epoch,
            step,
            rng_word_pos: rng.get_word_pos(),
            params: model.params.clone(),
        }
    }

    pub fn to_model(&self) -> Model {
        Model {
            kind: self.kind,
            vocab_size: self.vocab_size,
            embed_dim: self.hp.embed_dim,
            hidden_dim: self.hp.hidden_dim,
            params: self.params.clone(),
        }
    }

    pub fn restore_rng(&self) -> ChaCha20Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha20Rng::seed_from_u64(self.hp.seed);
        rng.set_word_pos(self.rng_word_pos);
        rng
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let hp = &self.hp;
        writeln!(s, "{HEADER}").unwrap();
        writeln!(s, "kind {}", self.kind.as_str()).unwrap();
        writeln!(s, "vocab {}", self.vocab_size).unwrap();
        writeln!(s, "window {}", self.window).unwrap();
        writeln!(s, "epoch {}", self.epoch).unwrap();
        writeln!(s, "step {}", self.step).unwrap();
        writeln!(s, "rng_word_pos {}", self.rng_word_pos).unwrap();
        writeln!(s, "embed {}", hp.embed_dim).unwrap();
        writeln!(s, "hidden {}", hp.hidden_dim).unwrap();
        writeln!(s, "batch {}", hp.batch_size).unwrap();
        writeln!(s, "lr {}", hp.learning_rate).unwrap();
        writeln!(s, "clip {}", hp.clip_norm).unwrap();
        writeln!(s, "epochs {}", hp.epochs).unwrap();
        writeln!(s, "beta1 {}", hp.adam_beta1).unwrap();
        writeln!(s, "beta2 {}", hp.adam_beta2).unwrap();
        writeln!(s, "eps {}", hp.adam_eps).unwrap();
        writeln!(s, "seed {}", hp.seed).unwrap();
        writeln!(s, "params {}", self.params.len()).unwrap();
        for p in &self.params {
            writeln!(s, "param {} {} {}", p.name, p.value.rows(), p.value.cols()).unwrap();
            for (label, m) in [("value", &p.value), ("adam_m", &p.adam_m), ("adam_v", &p.adam_v)] {
                writeln!(s, "{label}").unwrap();
                for r in 0..m.rows() {
                    let row = m.row(r);
                    for (c, v) in row.iter().enumerate() {
                        if c > 0 {
                            s.push(' ');
                        }
                        write!(s, "{v}").unwrap();
                    }
                    s.push('\n');
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Checkpoint, HarnessError> {
        let mut lines = text.lines();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| HarnessError::Format(format!("missing {what}")))
        };
        if next("header")? != HEADER {
            return Err(HarnessError::Format(format!("expected `{HEADER}`")));
        }

        fn kv<'a>(line: &'a str, key: &str) -> Result<&'a str, HarnessError> {
            match line.split_once(' ') {
                Some((k, v)) if k == key => Ok(v),
                _ => Err(HarnessError::Format(format!(
                    "expected `{key} ...`, found `{line}`"
                ))),
            }
        }
        fn num<T: std::str::FromStr>(field: &str, raw: &str) -> Result<T, HarnessError> {
            raw.parse()
                .map_err(|_| HarnessError::Format(format!("bad {field} value `{raw}`")))
        }

        let kind_raw = kv(next("kind")?, "kind")?;
        let kind = ModelKind::parse(kind_raw)
            .ok_or_else(|| HarnessError::Format(format!("unknown model kind `{kind_raw}`")))?;
        let vocab_size: usize = num("vocab", kv(next("vocab")?, "vocab")?)?;
        let window: usize = num("window", kv(next("window")?, "window")?)?;
        let epoch: usize = num("epoch", kv(next("epoch")?, "epoch")?)?;
        let step: u64 = num("step", kv(next("step")?, "step")?)?;
        let rng_word_pos: u128 = num("rng_word_pos", kv(next("rng_word_pos")?, "rng_word_pos")?)?;
        let hp = Hyperparams {
            embed_dim: num("embed", kv(next("embed")?, "embed")?)?,
            hidden_dim: num("hidden", kv(next("hidden")?, "hidden")?)?,
            batch_size: num("batch", kv(next("batch")?, "batch")?)?,
            learning_rate: num("lr", kv(next("lr")?, "lr")?)?,
            clip_norm: num("clip", kv(next("clip")?, "clip")?)?,
            epochs: num("epochs", kv(next("epochs")?, "epochs")?)?,
            adam_beta1: num("beta1", kv(next("beta1")?, "beta1")?)?,
            adam_beta2: num("beta2", kv(next("beta2")?, "beta2")?)?,
            adam_eps: num("eps", kv(next("eps")?, "eps")?)?,
            seed: num("seed", kv(next("seed")?, "seed")?)?,
        };
        let param_count: usize = num("params", kv(next("params")?, "params")?)?;
        let expected = match kind {
            ModelKind::Attn => 10,
            ModelKind::Pointer => 12,
        };
        if param_count != expected {
            return Err(HarnessError::Format(format!(
                "{} model needs {expected} tensors, file declares {param_count}",
                kind.as_str()
            )));
        }

        let mut params = Vec::with_capacity(param_count);
        for name in PARAM_NAMES.iter().take(param_count) {
            let head = next("param header")?;
            let mut parts = head.split(' ');
            if parts.next() != Some("param") || parts.next() != Some(*name) {
                return Err(HarnessError::Format(format!(
                    "expected `param {name} ...`, found `{head}`"
                )));
            }
            let rows: usize = num("rows", parts.next().unwrap_or(""))?;
            let cols: usize = num("cols", parts.next().unwrap_or(""))?;
            if parts.next().is_some() {
                return Err(HarnessError::Format(format!("trailing tokens in `{head}`")));
            }
            let mut mats = Vec::with_capacity(3);
            for label in ["value", "adam_m", "adam_v"] {
                if next(label)? != label {
                    return Err(HarnessError::Format(format!(
                        "expected `{label}` section in tensor {name}"
                    )));
                }
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    let line = next("tensor row")?;
                    let before = data.len();
                    for tok in line.split(' ') {
                        data.push(num::<Real>("tensor entry", tok)?);
                    }
                    if data.len() - before != cols {
                        return Err(HarnessError::Format(format!(
                            "tensor {name} {label} row {r} holds {} values, expected {cols}",
                            data.len() - before
                        )));
                    }
                }
                mats.push(
                    Mat::from_vec(rows, cols, data)
                        .map_err(|e| HarnessError::Format(e.to_string()))?,
                );
            }
            let adam_v = mats.pop().unwrap();
            let adam_m = mats.pop().unwrap();
            let mut p = Parameter::new(name, mats.pop().unwrap());
            p.adam_m = adam_m;
            p.adam_v = adam_v;
            params.push(p);
        }
        if let Some(extra) = lines.next() {
            return Err(HarnessError::Format(format!(
                "trailing content after last tensor: `{extra}`"
            )));
        }

        let ckpt = Checkpoint {
            kind,
            hp,
            vocab_size,
            window,
            epoch,
            step,
            rng_word_pos,
            params,
        };
        ckpt.validate_shapes()?;
        Ok(ckpt)
    }

    fn validate_shapes(&self) -> Result<(), HarnessError> {
        let e = self.hp.embed_dim;
        let h = self.hp.hidden_dim;
        let v = self.vocab_size;
        let expect: &[(&str, (usize, usize))] = &[
            ("embed", (v, e)),
            ("lstm_wx", (4 * h, e)),
            ("lstm_wh", (4 * h, h)),
            ("lstm_b", (4 * h, 1)),
            ("attn_mem", (h, h)),
            ("attn_query", (h, h)),
            ("attn_v", (h, 1)),
            ("blend", (h, 2 * h)),
            ("out_w", (v, h)),
            ("out_b", (v, 1)),
            ("gate_w", (2 * h, 1)),
            ("gate_b", (1, 1)),
        ];
        for (p, (name, shape)) in self.params.iter().zip(expect) {
            if p.value.shape() != *shape {
                return Err(HarnessError::Format(format!(
                    "tensor {name} has shape {:?}, expected {shape:?}",
                    p.value.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        fs::write(path, self.to_text()).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Checkpoint::from_text(&text)
    }
}
