//! Central finite differences over parameter tensors.

use nextok_core::nn::{Parameter, Real};

/// Numeric gradient of `f` w.r.t. every element of every parameter:
/// (f(x+h) - f(x-h)) / 2h, restoring each element afterwards.
pub fn finite_diff<F>(params: &mut [Parameter], mut f: F, h: Real) -> Vec<Vec<Real>>
where
    F: FnMut(&[Parameter]) -> Real,
{
    let mut out = Vec::with_capacity(params.len());
    for p_idx in 0..params.len() {
        let n = params[p_idx].value.as_slice().len();
        let mut grad = Vec::with_capacity(n);
        for i in 0..n {
            let orig = params[p_idx].value.as_slice()[i];
            params[p_idx].value.as_mut_slice()[i] = orig + h;
            let up = f(params);
            params[p_idx].value.as_mut_slice()[i] = orig - h;
            let down = f(params);
            params[p_idx].value.as_mut_slice()[i] = orig;
            grad.push((up - down) / (2.0 * h));
        }
        out.push(grad);
    }
    out
}

/// Copy the accumulated analytic gradients out of the parameters.
pub fn grads_of(params: &[Parameter]) -> Vec<Vec<Real>> {
    params.iter().map(|p| p.grad.as_slice().to_vec()).collect()
}

/// Worst relative disagreement between two gradient sets, with an absolute
/// floor so agreeing near-zeros do not blow the ratio up.
pub fn max_rel_err(a: &[Vec<Real>], b: &[Vec<Real>]) -> Real {
    assert_eq!(a.len(), b.len());
    let mut worst: Real = 0.0;
    for (va, vb) in a.iter().zip(b) {
        assert_eq!(va.len(), vb.len());
        for (&x, &y) in va.iter().zip(vb) {
            let denom = x.abs().max(y.abs()).max(1e-6);
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}
