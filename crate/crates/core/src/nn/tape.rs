//! Reverse-mode autodiff over vector-valued nodes.
//!
//! Forward passes build the graph eagerly: each op validates shapes, computes
//! its value, and records a node. `backward` then walks the nodes in reverse,
//! accumulating parameter gradients straight into [`Parameter::grad`]. All
//! tape values are 1-D vectors; parameters keep their matrix shapes.

use super::mat::Real;
use super::ops::LOG_FLOOR;
use super::{NnError, Parameter};

/// Handle to a tape value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VId(usize);

#[derive(Debug)]
enum Node {
    Const,
    /// Copy of one row of a parameter matrix.
    GatherRow { param: usize, row: usize },
    /// `W·x (+ b)` with `W: [out x in]`, `b: [out x 1]`.
    Linear {
        w: usize,
        b: Option<usize>,
        x: VId,
    },
    Add { a: VId, b: VId },
    Mul { a: VId, b: VId },
    Sigmoid { x: VId },
    Tanh { x: VId },
    Slice { x: VId, start: usize },
    Concat { a: VId, b: VId },
    /// Dot product with a parameter vector `v: [n x 1]`.
    Dot { v: usize, x: VId },
    /// Scalar shift by a `[1 x 1]` parameter.
    AddScalarParam { b: usize, x: VId },
    Softmax { x: VId },
    /// Softmax over unmasked positions; masked positions get probability
    /// exactly 0, which also makes their backward contribution 0, so the
    /// node only needs the input id.
    MaskedSoftmax { x: VId },
    /// `Σ_j weights[j] · items[j]` over equal-length item vectors.
    WeightedSum { weights: VId, items: Vec<VId> },
    /// Pack scalar values into one vector.
    StackScalars { items: Vec<VId> },
    /// `y = p·w + (1-p)·scatter(l, ids)`: pointer mass at position `j` lands
    /// on vocabulary id `ids[j]`; positions holding `skip_id` contribute
    /// nothing.
    PointerMix {
        w: VId,
        l: VId,
        gate: VId,
        ids: Vec<u32>,
        skip_id: u32,
    },
    /// `-ln(y[label] + floor)`.
    CrossEntropyPick { y: VId, label: usize },
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    vals: Vec<Vec<Real>>,
}

fn shape_err(op: &str, detail: String) -> NnError {
    NnError::ShapeMismatch(format!("{op}: {detail}"))
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// Drop all nodes and values, keeping allocations for reuse.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.vals.clear();
    }

    pub fn value(&self, id: VId) -> &[Real] {
        &self.vals[id.0]
    }

    fn push(&mut self, node: Node, value: Vec<Real>) -> VId {
        self.nodes.push(node);
        self.vals.push(value);
        VId(self.vals.len() - 1)
    }

    fn len_of(&self, id: VId) -> usize {
        self.vals[id.0].len()
    }

    pub fn constant(&mut self, data: Vec<Real>) -> VId {
        self.push(Node::Const, data)
    }

    pub fn zeros(&mut self, len: usize) -> VId {
        self.constant(vec![0.0; len])
    }

    pub fn gather_row(
        &mut self,
        params: &[Parameter],
        param: usize,
        row: usize,
    ) -> Result<VId, NnError> {
        let value = &params[param].value;
        if row >= value.rows() {
            return Err(shape_err(
                "gather_row",
                format!("row {row} of {:?} {}", params[param].name, value.rows()),
            ));
        }
        let data = value.row(row).to_vec();
        Ok(self.push(Node::GatherRow { param, row }, data))
    }

    pub fn linear(
        &mut self,
        params: &[Parameter],
        w: usize,
        b: Option<usize>,
        x: VId,
    ) -> Result<VId, NnError> {
        let wm = &params[w].value;
        let xv = &self.vals[x.0];
        if wm.cols() != xv.len() {
            return Err(shape_err(
                "linear",
                format!("{:?} {:?} with x of {}", params[w].name, wm.shape(), xv.len()),
            ));
        }
        let mut out = match b {
            Some(bi) => {
                let bm = &params[bi].value;
                if bm.shape() != (wm.rows(), 1) {
                    return Err(shape_err(
                        "linear",
                        format!("bias {:?} {:?} for {} outputs", params[bi].name, bm.shape(), wm.rows()),
                    ));
                }
                bm.as_slice().to_vec()
            }
            None => vec![0.0; wm.rows()],
        };
        for (r, o) in out.iter_mut().enumerate() {
            let row = wm.row(r);
            let mut acc = 0.0;
            for (wi, xi) in row.iter().zip(xv.iter()) {
                acc += wi * xi;
            }
            *o += acc;
        }
        Ok(self.push(Node::Linear { w, b, x }, out))
    }

    fn binary_same_len(&self, op: &str, a: VId, b: VId) -> Result<(), NnError> {
        if self.len_of(a) != self.len_of(b) {
            return Err(shape_err(
                op,
                format!("lengths {} vs {}", self.len_of(a), self.len_of(b)),
            ));
        }
        Ok(())
    }

    pub fn add(&mut self, a: VId, b: VId) -> Result<VId, NnError> {
        self.binary_same_len("add", a, b)?;
        let out: Vec<Real> = self.vals[a.0]
            .iter()
            .zip(&self.vals[b.0])
            .map(|(x, y)| x + y)
            .collect();
        Ok(self.push(Node::Add { a, b }, out))
    }

    pub fn mul(&mut self, a: VId, b: VId) -> Result<VId, NnError> {
        self.binary_same_len("mul", a, b)?;
        let out: Vec<Real> = self.vals[a.0]
            .iter()
            .zip(&self.vals[b.0])
            .map(|(x, y)| x * y)
            .collect();
        Ok(self.push(Node::Mul { a, b }, out))
    }

    pub fn sigmoid(&mut self, x: VId) -> VId {
        let out: Vec<Real> = self.vals[x.0]
            .iter()
            .map(|&v| super::ops::sigmoid(v))
            .collect();
        self.push(Node::Sigmoid { x }, out)
    }

    pub fn tanh(&mut self, x: VId) -> VId {
        let out: Vec<Real> = self.vals[x.0].iter().map(|&v| v.tanh()).collect();
        self.push(Node::Tanh { x }, out)
    }

    pub fn slice(&mut self, x: VId, start: usize, len: usize) -> Result<VId, NnError> {
        if start + len > self.len_of(x) {
            return Err(shape_err(
                "slice",
                format!("[{start}..{}] of {}", start + len, self.len_of(x)),
            ));
        }
        let out = self.vals[x.0][start..start + len].to_vec();
        Ok(self.push(Node::Slice { x, start }, out))
    }

    pub fn concat(&mut self, a: VId, b: VId) -> VId {
        let mut out = self.vals[a.0].clone();
        out.extend_from_slice(&self.vals[b.0]);
        self.push(Node::Concat { a, b }, out)
    }

    pub fn dot(&mut self, params: &[Parameter], v: usize, x: VId) -> Result<VId, NnError> {
        let vm = &params[v].value;
        if vm.shape() != (self.len_of(x), 1) {
            return Err(shape_err(
                "dot",
                format!("{:?} {:?} with x of {}", params[v].name, vm.shape(), self.len_of(x)),
            ));
        }
        let acc: Real = vm
            .as_slice()
            .iter()
            .zip(&self.vals[x.0])
            .map(|(a, b)| a * b)
            .sum();
        Ok(self.push(Node::Dot { v, x }, vec![acc]))
    }

    pub fn add_scalar_param(
        &mut self,
        params: &[Parameter],
        b: usize,
        x: VId,
    ) -> Result<VId, NnError> {
        if self.len_of(x) != 1 || params[b].value.shape() != (1, 1) {
            return Err(shape_err(
                "add_scalar_param",
                format!(
                    "x of {} with {:?} {:?}",
                    self.len_of(x),
                    params[b].name,
                    params[b].value.shape()
                ),
            ));
        }
        let out = vec![self.vals[x.0][0] + params[b].value.get(0, 0)];
        Ok(self.push(Node::AddScalarParam { b, x }, out))
    }

    pub fn softmax(&mut self, x: VId) -> Result<VId, NnError> {
        let out = super::ops::softmax(&self.vals[x.0])?;
        Ok(self.push(Node::Softmax { x }, out))
    }

    pub fn masked_softmax(&mut self, x: VId, mask: Vec<bool>) -> Result<VId, NnError> {
        if mask.len() != self.len_of(x) {
            return Err(shape_err(
                "masked_softmax",
                format!("mask of {} with x of {}", mask.len(), self.len_of(x)),
            ));
        }
        if !mask.iter().any(|&m| m) {
            return Err(shape_err("masked_softmax", "all positions masked".into()));
        }
        let xv = &self.vals[x.0];
        let max = xv
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .fold(Real::NEG_INFINITY, Real::max);
        let exps: Vec<Real> = xv
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| if m { (v - max).exp() } else { 0.0 })
            .collect();
        let total: Real = exps.iter().sum();
        let out: Vec<Real> = exps.into_iter().map(|e| e / total).collect();
        Ok(self.push(Node::MaskedSoftmax { x }, out))
    }

    pub fn weighted_sum(&mut self, weights: VId, items: &[VId]) -> Result<VId, NnError> {
        if items.is_empty() || self.len_of(weights) != items.len() {
            return Err(shape_err(
                "weighted_sum",
                format!("{} weights for {} items", self.len_of(weights), items.len()),
            ));
        }
        let dim = self.len_of(items[0]);
        let mut out = vec![0.0; dim];
        for (j, &item) in items.iter().enumerate() {
            if self.len_of(item) != dim {
                return Err(shape_err(
                    "weighted_sum",
                    format!("item {j} has {} entries, expected {dim}", self.len_of(item)),
                ));
            }
            let wj = self.vals[weights.0][j];
            for (o, v) in out.iter_mut().zip(&self.vals[item.0]) {
                *o += wj * v;
            }
        }
        Ok(self.push(
            Node::WeightedSum {
                weights,
                items: items.to_vec(),
            },
            out,
        ))
    }

    pub fn stack_scalars(&mut self, items: &[VId]) -> Result<VId, NnError> {
        let mut out = Vec::with_capacity(items.len());
        for &item in items {
            if self.len_of(item) != 1 {
                return Err(shape_err(
                    "stack_scalars",
                    format!("item has {} entries", self.len_of(item)),
                ));
            }
            out.push(self.vals[item.0][0]);
        }
        Ok(self.push(
            Node::StackScalars {
                items: items.to_vec(),
            },
            out,
        ))
    }

    pub fn pointer_mix(
        &mut self,
        w: VId,
        l: VId,
        gate: VId,
        ids: &[u32],
        skip_id: u32,
    ) -> Result<VId, NnError> {
        if self.len_of(gate) != 1 {
            return Err(shape_err(
                "pointer_mix",
                format!("gate has {} entries", self.len_of(gate)),
            ));
        }
        if ids.len() != self.len_of(l) {
            return Err(shape_err(
                "pointer_mix",
                format!("{} ids for {} pointer entries", ids.len(), self.len_of(l)),
            ));
        }
        let vocab = self.len_of(w);
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= vocab) {
            return Err(shape_err(
                "pointer_mix",
                format!("window id {bad} outside vocabulary of {vocab}"),
            ));
        }
        let p = self.vals[gate.0][0];
        let mut out: Vec<Real> = self.vals[w.0].iter().map(|&v| p * v).collect();
        let inv = 1.0 - p;
        for (j, &id) in ids.iter().enumerate() {
            if id != skip_id {
                out[id as usize] += inv * self.vals[l.0][j];
            }
        }
        Ok(self.push(
            Node::PointerMix {
                w,
                l,
                gate,
                ids: ids.to_vec(),
                skip_id,
            },
            out,
        ))
    }

    pub fn cross_entropy_pick(&mut self, y: VId, label: usize) -> Result<VId, NnError> {
        let yv = &self.vals[y.0];
        if label >= yv.len() {
            return Err(NnError::InvalidLabel {
                label,
                len: yv.len(),
            });
        }
        let loss = -(yv[label] + LOG_FLOOR).ln();
        Ok(self.push(Node::CrossEntropyPick { y, label }, vec![loss]))
    }

    /// Backpropagate from scalar node `loss`, seeding its gradient with
    /// `scale` (use `1 / batch` for a mean-over-batch objective). Parameter
    /// gradients accumulate into `params[i].grad`.
    pub fn backward(
        &self,
        loss: VId,
        scale: Real,
        params: &mut [Parameter],
    ) -> Result<(), NnError> {
        if self.len_of(loss) != 1 {
            return Err(shape_err(
                "backward",
                format!("loss has {} entries", self.len_of(loss)),
            ));
        }
        let mut grads: Vec<Option<Vec<Real>>> = vec![None; self.vals.len()];
        grads[loss.0] = Some(vec![scale]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            // Two-phase: compute upstream contributions, then merge, so the
            // borrow on `grads` stays simple.
            let push = |grads: &mut Vec<Option<Vec<Real>>>, target: VId, delta: Vec<Real>| {
                match &mut grads[target.0] {
                    Some(acc) => {
                        for (a, d) in acc.iter_mut().zip(&delta) {
                            *a += d;
                        }
                    }
                    slot @ None => *slot = Some(delta),
                }
            };
            match &self.nodes[idx] {
                Node::Const => {}
                Node::GatherRow { param, row } => {
                    let grow = params[*param].grad.row_mut(*row);
                    for (gr, gi) in grow.iter_mut().zip(&g) {
                        *gr += gi;
                    }
                }
                Node::Linear { w, b, x } => {
                    let xv = &self.vals[x.0];
                    {
                        let p = &mut params[*w];
                        for (r, go) in g.iter().enumerate() {
                            let grow = p.grad.row_mut(r);
                            for (gw, xi) in grow.iter_mut().zip(xv.iter()) {
                                *gw += go * xi;
                            }
                        }
                    }
                    if let Some(bi) = b {
                        let bgrad = params[*bi].grad.as_mut_slice();
                        for (gb, go) in bgrad.iter_mut().zip(&g) {
                            *gb += go;
                        }
                    }
                    let wm = &params[*w].value;
                    let mut dx = vec![0.0; xv.len()];
                    for (r, go) in g.iter().enumerate() {
                        let row = wm.row(r);
                        for (d, wi) in dx.iter_mut().zip(row.iter()) {
                            *d += go * wi;
                        }
                    }
                    push(&mut grads, *x, dx);
                }
                Node::Add { a, b } => {
                    push(&mut grads, *a, g.clone());
                    push(&mut grads, *b, g.clone());
                }
                Node::Mul { a, b } => {
                    let da: Vec<Real> =
                        g.iter().zip(&self.vals[b.0]).map(|(gi, bv)| gi * bv).collect();
                    let db: Vec<Real> =
                        g.iter().zip(&self.vals[a.0]).map(|(gi, av)| gi * av).collect();
                    push(&mut grads, *a, da);
                    push(&mut grads, *b, db);
                }
                Node::Sigmoid { x } => {
                    let y = &self.vals[idx];
                    let dx: Vec<Real> = g
                        .iter()
                        .zip(y)
                        .map(|(gi, yi)| gi * yi * (1.0 - yi))
                        .collect();
                    push(&mut grads, *x, dx);
                }
                Node::Tanh { x } => {
                    let y = &self.vals[idx];
                    let dx: Vec<Real> =
                        g.iter().zip(y).map(|(gi, yi)| gi * (1.0 - yi * yi)).collect();
                    push(&mut grads, *x, dx);
                }
                Node::Slice { x, start } => {
                    let mut dx = vec![0.0; self.vals[x.0].len()];
                    dx[*start..*start + g.len()].copy_from_slice(&g);
                    push(&mut grads, *x, dx);
                }
                Node::Concat { a, b } => {
                    let a_len = self.vals[a.0].len();
                    push(&mut grads, *a, g[..a_len].to_vec());
                    push(&mut grads, *b, g[a_len..].to_vec());
                }
                Node::Dot { v, x } => {
                    let go = g[0];
                    let xv = &self.vals[x.0];
                    {
                        let vgrad = params[*v].grad.as_mut_slice();
                        for (gv, xi) in vgrad.iter_mut().zip(xv.iter()) {
                            *gv += go * xi;
                        }
                    }
                    let vm = &params[*v].value;
                    let dx: Vec<Real> = vm.as_slice().iter().map(|vi| go * vi).collect();
                    push(&mut grads, *x, dx);
                }
                Node::AddScalarParam { b, x } => {
                    params[*b].grad.as_mut_slice()[0] += g[0];
                    push(&mut grads, *x, g.clone());
                }
                Node::Softmax { x } | Node::MaskedSoftmax { x } => {
                    // Masked entries have y = 0, so the shared formula sends
                    // them zero gradient.
                    let y = &self.vals[idx];
                    let inner: Real = g.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                    let dx: Vec<Real> =
                        g.iter().zip(y).map(|(gi, yi)| yi * (gi - inner)).collect();
                    push(&mut grads, *x, dx);
                }
                Node::WeightedSum { weights, items } => {
                    let mut dw = vec![0.0; items.len()];
                    for (j, &item) in items.iter().enumerate() {
                        let wv = self.vals[weights.0][j];
                        dw[j] = g.iter().zip(&self.vals[item.0]).map(|(gi, v)| gi * v).sum();
                        let di: Vec<Real> = g.iter().map(|gi| gi * wv).collect();
                        push(&mut grads, item, di);
                    }
                    push(&mut grads, *weights, dw);
                }
                Node::StackScalars { items } => {
                    for (j, &item) in items.iter().enumerate() {
                        push(&mut grads, item, vec![g[j]]);
                    }
                }
                Node::PointerMix {
                    w,
                    l,
                    gate,
                    ids,
                    skip_id,
                } => {
                    let p = self.vals[gate.0][0];
                    let wv = &self.vals[w.0];
                    let lv = &self.vals[l.0];
                    let dw: Vec<Real> = g.iter().map(|gi| gi * p).collect();
                    let mut dl = vec![0.0; lv.len()];
                    let mut dp: Real = g.iter().zip(wv).map(|(gi, wi)| gi * wi).sum();
                    for (j, &id) in ids.iter().enumerate() {
                        if id != *skip_id {
                            let gy = g[id as usize];
                            dl[j] = (1.0 - p) * gy;
                            dp -= lv[j] * gy;
                        }
                    }
                    push(&mut grads, *w, dw);
                    push(&mut grads, *l, dl);
                    push(&mut grads, *gate, vec![dp]);
                }
                Node::CrossEntropyPick { y, label } => {
                    let mut dy = vec![0.0; self.vals[y.0].len()];
                    dy[*label] = -g[0] / (self.vals[y.0][*label] + LOG_FLOOR);
                    push(&mut grads, *y, dy);
                }
            }
        }
        Ok(())
    }
}
