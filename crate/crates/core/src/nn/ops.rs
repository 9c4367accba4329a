//! Pure forward-pass math. The tape in [`super::tape`] composes the same
//! formulas into differentiable graphs; equivalence between the two paths is
//! asserted in tests.

use super::mat::{Mat, Real};
use super::NnError;

/// Floor added inside `ln` so a zero probability cannot produce infinity.
pub const LOG_FLOOR: Real = 1e-12;

pub fn sigmoid(x: Real) -> Real {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable softmax: the max is subtracted before exponentiation.
/// The output sums to 1 up to rounding.
pub fn softmax(z: &[Real]) -> Result<Vec<Real>, NnError> {
    if z.is_empty() {
        return Err(NnError::ShapeMismatch("softmax of empty vector".into()));
    }
    let max = z.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
    let exps: Vec<Real> = z.iter().map(|&v| (v - max).exp()).collect();
    let total: Real = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `-ln(p[label] + floor)` for a probability vector `p`.
pub fn cross_entropy(p: &[Real], label: usize) -> Result<Real, NnError> {
    if label >= p.len() {
        return Err(NnError::InvalidLabel {
            label,
            len: p.len(),
        });
    }
    Ok(-(p[label] + LOG_FLOOR).ln())
}

/// One LSTM cell step. Gate weights are packed row-wise in the order
/// [input, forget, output, candidate]: `w_x` is `[4H x E]`, `w_h` is
/// `[4H x H]`, `b` is `[4H x 1]`.
pub fn lstm_step(
    w_x: &Mat,
    w_h: &Mat,
    b: &Mat,
    x: &[Real],
    h_prev: &[Real],
    c_prev: &[Real],
) -> Result<(Vec<Real>, Vec<Real>), NnError> {
    let hidden = h_prev.len();
    if w_x.rows() != 4 * hidden
        || w_x.cols() != x.len()
        || w_h.rows() != 4 * hidden
        || w_h.cols() != hidden
        || b.rows() != 4 * hidden
        || b.cols() != 1
        || c_prev.len() != hidden
    {
        return Err(NnError::ShapeMismatch(format!(
            "lstm_step with x={}, h={}, c={}, w_x={:?}, w_h={:?}, b={:?}",
            x.len(),
            h_prev.len(),
            c_prev.len(),
            w_x.shape(),
            w_h.shape(),
            b.shape()
        )));
    }
    let mut z = vec![0.0; 4 * hidden];
    for (r, zr) in z.iter_mut().enumerate() {
        let mut acc = b.get(r, 0);
        let wx_row = w_x.row(r);
        for (i, &xi) in x.iter().enumerate() {
            acc += wx_row[i] * xi;
        }
        let wh_row = w_h.row(r);
        for (i, &hi) in h_prev.iter().enumerate() {
            acc += wh_row[i] * hi;
        }
        *zr = acc;
    }
    let mut h = vec![0.0; hidden];
    let mut c = vec![0.0; hidden];
    for j in 0..hidden {
        let i_gate = sigmoid(z[j]);
        let f_gate = sigmoid(z[hidden + j]);
        let o_gate = sigmoid(z[2 * hidden + j]);
        let g = z[3 * hidden + j].tanh();
        c[j] = f_gate * c_prev[j] + i_gate * g;
        h[j] = o_gate * c[j].tanh();
    }
    Ok((h, c))
}
