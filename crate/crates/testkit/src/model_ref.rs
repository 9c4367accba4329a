//! Step-by-step scalar evaluation of both architectures, written directly
//! from the equations with nested loops and nothing shared with the tape.

use nextok_core::model::{
    P_ATTN_MEM, P_ATTN_QUERY, P_ATTN_V, P_BLEND, P_EMBED, P_GATE_B, P_GATE_W, P_LSTM_B,
    P_LSTM_WH, P_LSTM_WX, P_OUT_B, P_OUT_W,
};
use nextok_core::nn::{Parameter, Real};

const PAD: u32 = 0;

#[derive(Debug, Clone)]
pub struct RefWeights {
    pub embed: Vec<Vec<Real>>,
    pub wx: Vec<Vec<Real>>,
    pub wh: Vec<Vec<Real>>,
    pub b: Vec<Real>,
    pub w_m: Vec<Vec<Real>>,
    pub w_h: Vec<Vec<Real>>,
    pub v: Vec<Real>,
    pub blend: Vec<Vec<Real>>,
    pub out_w: Vec<Vec<Real>>,
    pub out_b: Vec<Real>,
    pub gate_w: Vec<Real>,
    pub gate_b: Real,
}

fn rows_of(p: &Parameter) -> Vec<Vec<Real>> {
    (0..p.value.rows()).map(|r| p.value.row(r).to_vec()).collect()
}

fn col_of(p: &Parameter) -> Vec<Real> {
    p.value.as_slice().to_vec()
}

/// Pull a model's tensors into plain nested vectors.
pub fn ref_weights(params: &[Parameter]) -> RefWeights {
    let pointer = params.len() > P_GATE_W;
    RefWeights {
        embed: rows_of(&params[P_EMBED]),
        wx: rows_of(&params[P_LSTM_WX]),
        wh: rows_of(&params[P_LSTM_WH]),
        b: col_of(&params[P_LSTM_B]),
        w_m: rows_of(&params[P_ATTN_MEM]),
        w_h: rows_of(&params[P_ATTN_QUERY]),
        v: col_of(&params[P_ATTN_V]),
        blend: rows_of(&params[P_BLEND]),
        out_w: rows_of(&params[P_OUT_W]),
        out_b: col_of(&params[P_OUT_B]),
        gate_w: if pointer { col_of(&params[P_GATE_W]) } else { vec![] },
        gate_b: if pointer {
            params[P_GATE_B].value.get(0, 0)
        } else {
            0.0
        },
    }
}

fn sigma(x: Real) -> Real {
    1.0 / (1.0 + (-x).exp())
}

fn matvec(m: &[Vec<Real>], x: &[Real]) -> Vec<Real> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Hidden states h_1..h_N (PAD positions repeat the carried state), the
/// final state, and the real-position mask.
fn run_lstm(w: &RefWeights, ids: &[u32]) -> (Vec<Vec<Real>>, Vec<Real>, Vec<bool>) {
    let hidden = w.w_m.len();
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    let mut hs = Vec::with_capacity(ids.len());
    let mut mask = Vec::with_capacity(ids.len());
    for &id in ids {
        if id == PAD {
            hs.push(h.clone());
            mask.push(false);
            continue;
        }
        let x = &w.embed[id as usize];
        let zx = matvec(&w.wx, x);
        let zh = matvec(&w.wh, &h);
        let z: Vec<Real> = zx
            .iter()
            .zip(&zh)
            .zip(&w.b)
            .map(|((a, b), bias)| a + b + bias)
            .collect();
        let mut c_new = vec![0.0; hidden];
        let mut h_new = vec![0.0; hidden];
        for k in 0..hidden {
            let i = sigma(z[k]);
            let f = sigma(z[hidden + k]);
            let o = sigma(z[2 * hidden + k]);
            let g = z[3 * hidden + k].tanh();
            c_new[k] = f * c[k] + i * g;
            h_new[k] = o * c_new[k].tanh();
        }
        c = c_new;
        h = h_new;
        hs.push(h.clone());
        mask.push(true);
    }
    (hs, h, mask)
}

fn attention(
    w: &RefWeights,
    hs: &[Vec<Real>],
    h_last: &[Real],
    mask: &[bool],
) -> (Vec<Real>, Vec<Real>) {
    let hidden = h_last.len();
    let query = matvec(&w.w_h, h_last);
    let mut scores = vec![0.0; hs.len()];
    for (j, hj) in hs.iter().enumerate() {
        if !mask[j] {
            continue;
        }
        let mem = matvec(&w.w_m, hj);
        scores[j] = (0..hidden)
            .map(|k| w.v[k] * (mem[k] + query[k]).tanh())
            .sum();
    }
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&s, _)| s)
        .fold(Real::NEG_INFINITY, Real::max);
    let mut alpha = vec![0.0; hs.len()];
    let mut total = 0.0;
    for j in 0..hs.len() {
        if mask[j] {
            alpha[j] = (scores[j] - max).exp();
            total += alpha[j];
        }
    }
    for a in alpha.iter_mut() {
        *a /= total;
    }
    let mut context = vec![0.0; hidden];
    for (j, hj) in hs.iter().enumerate() {
        for k in 0..hidden {
            context[k] += alpha[j] * hj[k];
        }
    }
    (alpha, context)
}

fn vocab_dist(w: &RefWeights, h_last: &[Real], context: &[Real]) -> Vec<Real> {
    let hc: Vec<Real> = h_last.iter().chain(context).copied().collect();
    let g: Vec<Real> = matvec(&w.blend, &hc).iter().map(|x| x.tanh()).collect();
    let logits: Vec<Real> = matvec(&w.out_w, &g)
        .iter()
        .zip(&w.out_b)
        .map(|(a, b)| a + b)
        .collect();
    let max = logits.iter().fold(Real::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<Real> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: Real = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Vocabulary distribution of the plain attention model.
pub fn reference_attn(w: &RefWeights, ids: &[u32]) -> Vec<Real> {
    let (hs, h_last, mask) = run_lstm(w, ids);
    let (_, context) = attention(w, &hs, &h_last, &mask);
    vocab_dist(w, &h_last, &context)
}

/// (vocab dist, pointer dist, gate, mixed dist) of the pointer model; the
/// mixture is built by brute-force position-by-position scatter.
pub fn reference_pointer(w: &RefWeights, ids: &[u32]) -> (Vec<Real>, Vec<Real>, Real, Vec<Real>) {
    let (hs, h_last, mask) = run_lstm(w, ids);
    let (alpha, context) = attention(w, &hs, &h_last, &mask);
    let dist = vocab_dist(w, &h_last, &context);

    let hc: Vec<Real> = h_last.iter().chain(&context).copied().collect();
    let raw: Real = w.gate_w.iter().zip(&hc).map(|(a, b)| a * b).sum();
    let p = sigma(raw + w.gate_b);

    let mut mixed: Vec<Real> = dist.iter().map(|&d| p * d).collect();
    for (j, &id) in ids.iter().enumerate() {
        if id != PAD {
            mixed[id as usize] += (1.0 - p) * alpha[j];
        }
    }
    (dist, alpha, p, mixed)
}
