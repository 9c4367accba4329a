//! The two architectures: an attention-enhanced LSTM over a fixed window, and
//! a pointer-mixture variant that blends the vocabulary distribution with a
//! copy distribution over window positions through a sigmoid gate.

use rand::Rng;

use crate::bpe::PAD_ID;
use crate::nn::mat::Mat;
use crate::nn::tape::{Tape, VId};
use crate::nn::{Hyperparams, NnError, Parameter, Real};

const INIT_SCALE: Real = 0.05;

pub const P_EMBED: usize = 0;
pub const P_LSTM_WX: usize = 1;
pub const P_LSTM_WH: usize = 2;
pub const P_LSTM_B: usize = 3;
pub const P_ATTN_MEM: usize = 4;
pub const P_ATTN_QUERY: usize = 5;
pub const P_ATTN_V: usize = 6;
pub const P_BLEND: usize = 7;
pub const P_OUT_W: usize = 8;
pub const P_OUT_B: usize = 9;
pub const P_GATE_W: usize = 10;
pub const P_GATE_B: usize = 11;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("input id {id} outside vocabulary of {vocab}")]
    IdOutOfRange { id: u32, vocab: usize },
    #[error("window contains only padding")]
    AllPadInput,
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Attn,
    Pointer,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Attn => "attn",
            ModelKind::Pointer => "pointer",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        match s {
            "attn" => Some(ModelKind::Attn),
            "pointer" => Some(ModelKind::Pointer),
            _ => None,
        }
    }
}

/// Tape handles for one forward pass; read values off the tape or feed `y`
/// into the loss.
#[derive(Debug, Clone, Copy)]
pub struct Forward {
    /// Mixed output distribution (equals `w` for the plain model).
    pub y: VId,
    /// Vocabulary distribution.
    pub w: VId,
    /// Pointer distribution over window positions.
    pub l: Option<VId>,
    /// Mixture gate, a single value in (0, 1).
    pub p: Option<VId>,
}

/// Materialized distributions for callers that do not need gradients.
#[derive(Debug, Clone)]
pub struct PredictionOutput {
    pub vocab_dist: Vec<Real>,
    pub pointer_dist: Option<Vec<Real>>,
    pub gate: Option<Real>,
    pub mixed: Vec<Real>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub kind: ModelKind,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub params: Vec<Parameter>,
}

impl Model {
    /// Fresh parameters: matrices uniform in [-0.05, 0.05], biases zero, and
    /// the LSTM forget-gate bias block set to 1 so early training does not
    /// wash out the cell state.
    pub fn new(
        kind: ModelKind,
        vocab_size: usize,
        hp: &Hyperparams,
        rng: &mut impl Rng,
    ) -> Result<Model, ModelError> {
        hp.validate()?;
        if vocab_size < 2 {
            return Err(ModelError::InvalidArgument(format!(
                "vocabulary of {vocab_size} leaves nothing to predict"
            )));
        }
        let e = hp.embed_dim;
        let h = hp.hidden_dim;
        let mut lstm_b = Mat::zeros(4 * h, 1);
        for r in h..2 * h {
            lstm_b.set(r, 0, 1.0);
        }
        let mut params = vec![
            Parameter::uniform("embed", vocab_size, e, INIT_SCALE, rng),
            Parameter::uniform("lstm_wx", 4 * h, e, INIT_SCALE, rng),
            Parameter::uniform("lstm_wh", 4 * h, h, INIT_SCALE, rng),
            Parameter::new("lstm_b", lstm_b),
            Parameter::uniform("attn_mem", h, h, INIT_SCALE, rng),
            Parameter::uniform("attn_query", h, h, INIT_SCALE, rng),
            Parameter::uniform("attn_v", h, 1, INIT_SCALE, rng),
            Parameter::uniform("blend", h, 2 * h, INIT_SCALE, rng),
            Parameter::uniform("out_w", vocab_size, h, INIT_SCALE, rng),
            Parameter::new("out_b", Mat::zeros(vocab_size, 1)),
        ];
        if kind == ModelKind::Pointer {
            params.push(Parameter::uniform("gate_w", 2 * h, 1, INIT_SCALE, rng));
            params.push(Parameter::new("gate_b", Mat::zeros(1, 1)));
        }
        Ok(Model {
            kind,
            vocab_size,
            embed_dim: e,
            hidden_dim: h,
            params,
        })
    }

    pub fn forward(&self, tape: &mut Tape, inputs: &[u32]) -> Result<Forward, ModelError> {
        self.forward_with_gate(tape, inputs, None)
    }

    /// Forward pass with an optional hard-wired gate value (pointer kind
    /// only); tests use it to pin the mixture at 0 or 1.
    pub fn forward_with_gate(
        &self,
        tape: &mut Tape,
        inputs: &[u32],
        gate_override: Option<Real>,
    ) -> Result<Forward, ModelError> {
        if inputs.is_empty() {
            return Err(ModelError::InvalidArgument("empty input window".into()));
        }
        if gate_override.is_some() && self.kind != ModelKind::Pointer {
            return Err(ModelError::InvalidArgument(
                "gate override only applies to the pointer model".into(),
            ));
        }
        for &id in inputs {
            if id as usize >= self.vocab_size {
                return Err(ModelError::IdOutOfRange {
                    id,
                    vocab: self.vocab_size,
                });
            }
        }
        if inputs.iter().all(|&id| id == PAD_ID) {
            return Err(ModelError::AllPadInput);
        }

        let hd = self.hidden_dim;
        let mut h = tape.zeros(hd);
        let mut c = tape.zeros(hd);
        let mut hs = Vec::with_capacity(inputs.len());
        let mut mask = Vec::with_capacity(inputs.len());
        for &id in inputs {
            if id == PAD_ID {
                // Padding carries state through untouched, so the PAD
                // embedding row is never read and cannot influence anything.
                hs.push(h);
                mask.push(false);
                continue;
            }
            let x = tape.gather_row(&self.params, P_EMBED, id as usize)?;
            let zx = tape.linear(&self.params, P_LSTM_WX, Some(P_LSTM_B), x)?;
            let zh = tape.linear(&self.params, P_LSTM_WH, None, h)?;
            let z = tape.add(zx, zh)?;
            let i_lin = tape.slice(z, 0, hd)?;
            let f_lin = tape.slice(z, hd, hd)?;
            let o_lin = tape.slice(z, 2 * hd, hd)?;
            let g_lin = tape.slice(z, 3 * hd, hd)?;
            let i = tape.sigmoid(i_lin);
            let f = tape.sigmoid(f_lin);
            let o = tape.sigmoid(o_lin);
            let g = tape.tanh(g_lin);
            let fc = tape.mul(f, c)?;
            let ig = tape.mul(i, g)?;
            c = tape.add(fc, ig)?;
            let tc = tape.tanh(c);
            h = tape.mul(o, tc)?;
            hs.push(h);
            mask.push(true);
        }

        let query = tape.linear(&self.params, P_ATTN_QUERY, None, h)?;
        let mut scores = Vec::with_capacity(hs.len());
        for (j, &hj) in hs.iter().enumerate() {
            if mask[j] {
                let m = tape.linear(&self.params, P_ATTN_MEM, None, hj)?;
                let s = tape.add(m, query)?;
                let t = tape.tanh(s);
                scores.push(tape.dot(&self.params, P_ATTN_V, t)?);
            } else {
                scores.push(tape.zeros(1));
            }
        }
        let stacked = tape.stack_scalars(&scores)?;
        let alpha = tape.masked_softmax(stacked, mask)?;
        let context = tape.weighted_sum(alpha, &hs)?;
        let hc = tape.concat(h, context);
        let blended = tape.linear(&self.params, P_BLEND, None, hc)?;
        let g_vec = tape.tanh(blended);
        let logits = tape.linear(&self.params, P_OUT_W, Some(P_OUT_B), g_vec)?;
        let w = tape.softmax(logits)?;

        if self.kind == ModelKind::Attn {
            return Ok(Forward {
                y: w,
                w,
                l: None,
                p: None,
            });
        }

        let p = match gate_override {
            Some(v) => tape.constant(vec![v]),
            None => {
                let raw = tape.dot(&self.params, P_GATE_W, hc)?;
                let shifted = tape.add_scalar_param(&self.params, P_GATE_B, raw)?;
                tape.sigmoid(shifted)
            }
        };
        let y = tape.pointer_mix(w, alpha, p, inputs, PAD_ID)?;
        Ok(Forward {
            y,
            w,
            l: Some(alpha),
            p: Some(p),
        })
    }

    /// Cross-entropy of the mixed distribution against a one-hot label.
    pub fn loss(&self, tape: &mut Tape, fw: &Forward, label: u32) -> Result<VId, ModelError> {
        if label == PAD_ID {
            return Err(ModelError::InvalidArgument(
                "label must not be the padding id".into(),
            ));
        }
        Ok(tape.cross_entropy_pick(fw.y, label as usize)?)
    }

    pub fn predict(&self, inputs: &[u32]) -> Result<PredictionOutput, ModelError> {
        let mut tape = Tape::new();
        let fw = self.forward(&mut tape, inputs)?;
        Ok(PredictionOutput {
            vocab_dist: tape.value(fw.w).to_vec(),
            pointer_dist: fw.l.map(|l| tape.value(l).to_vec()),
            gate: fw.p.map(|p| tape.value(p)[0]),
            mixed: tape.value(fw.y).to_vec(),
        })
    }

    /// The `k` most probable next ids, descending, ties broken toward the
    /// smaller id. Padding never appears as a candidate.
    pub fn predict_topk(
        &self,
        inputs: &[u32],
        k: usize,
    ) -> Result<Vec<(u32, Real)>, ModelError> {
        if k == 0 || k > self.vocab_size {
            return Err(ModelError::InvalidArgument(format!(
                "k must lie in 1..={}, got {k}",
                self.vocab_size
            )));
        }
        let out = self.predict(inputs)?;
        Ok(topk_of(&out.mixed, k))
    }
}

/// Top `k` entries of a distribution, PAD excluded, descending probability
/// with ties toward the smaller id.
pub fn topk_of(dist: &[Real], k: usize) -> Vec<(u32, Real)> {
    let mut ranked: Vec<(u32, Real)> = dist
        .iter()
        .enumerate()
        .filter(|&(id, _)| id as u32 != PAD_ID)
        .map(|(id, &p)| (id as u32, p))
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}
