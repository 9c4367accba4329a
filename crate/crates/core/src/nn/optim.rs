//! Adam updates and global-norm gradient clipping.

use super::mat::Real;
use super::{Hyperparams, NnError, Parameter};

/// Scale every gradient by `max_norm / norm` when the global L2 norm over all
/// parameters exceeds `max_norm`. Returns the factor applied (1.0 when no
/// clipping happened).
pub fn clip_global_norm(params: &mut [Parameter], max_norm: Real) -> Result<Real, NnError> {
    if !(max_norm > 0.0) {
        return Err(NnError::InvalidArgument(format!(
            "clip norm must be positive, got {max_norm}"
        )));
    }
    let total: Real = params.iter().map(|p| p.grad.sq_sum()).sum();
    let norm = total.sqrt();
    if norm <= max_norm || norm == 0.0 {
        return Ok(1.0);
    }
    let factor = max_norm / norm;
    for p in params.iter_mut() {
        p.grad.scale(factor);
    }
    Ok(factor)
}

/// One Adam step over all parameters. `step` is 1-based and drives the bias
/// correction. Gradients are zeroed afterwards, ready for the next batch.
pub fn adam_step(params: &mut [Parameter], hp: &Hyperparams, step: u64) -> Result<(), NnError> {
    if step == 0 {
        return Err(NnError::InvalidArgument("adam step must be >= 1".into()));
    }
    let b1 = hp.adam_beta1;
    let b2 = hp.adam_beta2;
    let lr = hp.learning_rate;
    let eps = hp.adam_eps;
    let bias1 = 1.0 - b1.powi(step as i32);
    let bias2 = 1.0 - b2.powi(step as i32);
    for p in params.iter_mut() {
        let n = p.value.as_slice().len();
        for i in 0..n {
            let g = p.grad.as_slice()[i];
            let m = b1 * p.adam_m.as_slice()[i] + (1.0 - b1) * g;
            let v = b2 * p.adam_v.as_slice()[i] + (1.0 - b2) * g * g;
            p.adam_m.as_mut_slice()[i] = m;
            p.adam_v.as_mut_slice()[i] = v;
            let m_hat = m / bias1;
            let v_hat = v / bias2;
            p.value.as_mut_slice()[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        p.grad.fill(0.0);
    }
    Ok(())
}
