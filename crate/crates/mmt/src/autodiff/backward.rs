//! First-order gradient accumulation.

use super::tape::{kernels, Op, Tape, Value};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Gradients of one backward pass, keyed by leaf handle.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Value) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Value) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }

    /// Mutable iteration over all stored gradients (leaf order).
    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.grads.iter_mut().filter_map(|g| g.as_mut())
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.grads.iter().filter_map(|g| g.as_ref())
    }

    /// Global Euclidean norm over every stored gradient.
    pub fn global_norm(&self) -> f64 {
        self.iter()
            .map(|t| t.values().iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Scale all gradients so their global norm does not exceed `max_norm`.
/// Returns the pre-clip global norm. An empty map is a no-op.
pub fn clip_gradient_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    debug_assert!(max_norm > 0.0);
    let norm = grads.global_norm();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            g.scale_in_place(scale);
        }
    }
    norm
}

impl Tape {
    /// Accumulate gradients of a scalar loss into every reachable leaf that
    /// requires them; unreachable leaves get zeros. A second call without
    /// [`Tape::reset_backward`] is an error.
    pub fn backward(&self, loss: Value) -> Result<Gradients> {
        if !self.grad_enabled() {
            return Err(Error::Contract(
                "backward on an inference tape".into(),
            ));
        }
        if self.backward_taken.get() {
            return Err(Error::Contract(
                "backward called twice without reset_backward".into(),
            ));
        }
        let nodes = self.borrow_nodes();
        if loss.0 >= nodes.len() {
            return Err(Error::Contract("backward: loss not on this tape".into()));
        }
        if !nodes[loss.0].value.is_scalar() {
            return Err(Error::Contract(format!(
                "backward: loss must be scalar, got shape {:?}",
                nodes[loss.0].value.shape()
            )));
        }
        self.backward_taken.set(true);

        let mut grads: Vec<Option<Tensor>> = Vec::with_capacity(nodes.len());
        grads.resize_with(nodes.len(), || None);
        grads[loss.0] = Some(Tensor::full(nodes[loss.0].value.shape().to_vec(), 1.0));

        for id in (0..=loss.0).rev() {
            if !nodes[id].requires_grad {
                grads[id] = None;
                continue;
            }
            if matches!(nodes[id].op, Op::Leaf) {
                continue; // retain leaf gradients
            }
            let Some(g) = grads[id].take() else { continue };
            let mut push = |v: Value, delta: Tensor| {
                if !nodes[v.0].requires_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(acc) => {
                        acc.add_in_place(&delta).expect("gradient shape drift");
                    }
                    slot @ None => *slot = Some(delta),
                }
            };
            let val = |v: Value| &nodes[v.0].value;
            match &nodes[id].op {
                Op::Leaf | Op::Constant => {}
                Op::Matmul { a, b } => {
                    let (m, k) = (val(*a).rows(), val(*a).cols());
                    let n = val(*b).cols();
                    push(
                        *a,
                        Tensor::from_vec(
                            vec![m, k],
                            kernels::matmul_nt(g.values(), val(*b).values(), m, n, k),
                        )?,
                    );
                    push(
                        *b,
                        Tensor::from_vec(
                            vec![k, n],
                            kernels::matmul_tn(val(*a).values(), g.values(), k, m, n),
                        )?,
                    );
                }
                Op::MatmulNT { a, b } => {
                    // out = a·bᵀ with a: m×k, b: n×k
                    let (m, k) = (val(*a).rows(), val(*a).cols());
                    let n = val(*b).rows();
                    push(
                        *a,
                        Tensor::from_vec(
                            vec![m, k],
                            kernels::matmul(g.values(), val(*b).values(), m, n, k),
                        )?,
                    );
                    push(
                        *b,
                        Tensor::from_vec(
                            vec![n, k],
                            kernels::matmul_tn(g.values(), val(*a).values(), n, m, k),
                        )?,
                    );
                }
                Op::MatmulTN { a, b } => {
                    // out = aᵀ·b with a: k×m, b: k×n
                    let (k, m) = (val(*a).rows(), val(*a).cols());
                    let n = val(*b).cols();
                    push(
                        *a,
                        Tensor::from_vec(
                            vec![k, m],
                            kernels::matmul_nt(val(*b).values(), g.values(), k, n, m),
                        )?,
                    );
                    push(
                        *b,
                        Tensor::from_vec(
                            vec![k, n],
                            kernels::matmul(val(*a).values(), g.values(), k, m, n),
                        )?,
                    );
                }
                Op::AddBroadcastRow { a, row } => {
                    let n = val(*a).cols();
                    let m = val(*a).rows();
                    push(*a, g.clone());
                    let mut rsum = vec![0.0; n];
                    for i in 0..m {
                        for (acc, x) in rsum.iter_mut().zip(&g.values()[i * n..(i + 1) * n]) {
                            *acc += x;
                        }
                    }
                    push(*row, Tensor::from_vec(vec![1, n], rsum)?);
                }
                Op::Tanh { a } => {
                    let y = nodes[id].value.values();
                    let d: Vec<f64> = g
                        .values()
                        .iter()
                        .zip(y)
                        .map(|(&gv, &yv)| gv * (1.0 - yv * yv))
                        .collect();
                    push(*a, Tensor::from_vec(val(*a).shape().to_vec(), d)?);
                }
                Op::Relu { a } => {
                    let x = val(*a).values();
                    let d: Vec<f64> = g
                        .values()
                        .iter()
                        .zip(x)
                        .map(|(&gv, &xv)| if xv > 0.0 { gv } else { 0.0 })
                        .collect();
                    push(*a, Tensor::from_vec(val(*a).shape().to_vec(), d)?);
                }
                Op::Sigmoid { a } => {
                    let y = nodes[id].value.values();
                    let d: Vec<f64> = g
                        .values()
                        .iter()
                        .zip(y)
                        .map(|(&gv, &yv)| gv * yv * (1.0 - yv))
                        .collect();
                    push(*a, Tensor::from_vec(val(*a).shape().to_vec(), d)?);
                }
                Op::Softmax { a } | Op::SoftmaxMasked { a, .. } => {
                    let p = nodes[id].value.values();
                    let (m, n) = (nodes[id].value.rows(), nodes[id].value.cols());
                    let mut d = vec![0.0; m * n];
                    for i in 0..m {
                        let prow = &p[i * n..(i + 1) * n];
                        let grow = &g.values()[i * n..(i + 1) * n];
                        let dot: f64 = prow.iter().zip(grow).map(|(&pv, &gv)| pv * gv).sum();
                        for ((dst, &pv), &gv) in
                            d[i * n..(i + 1) * n].iter_mut().zip(prow).zip(grow)
                        {
                            *dst = pv * (gv - dot);
                        }
                    }
                    push(*a, Tensor::from_vec(vec![m, n], d)?);
                }
                Op::Add { a, b } => {
                    push(*a, g.clone());
                    push(*b, g.clone());
                }
                Op::Sub { a, b } => {
                    push(*a, g.clone());
                    let mut neg = g.clone();
                    neg.scale_in_place(-1.0);
                    push(*b, neg);
                }
                Op::Mul { a, b } => {
                    let da: Vec<f64> = g
                        .values()
                        .iter()
                        .zip(val(*b).values())
                        .map(|(&gv, &bv)| gv * bv)
                        .collect();
                    let db: Vec<f64> = g
                        .values()
                        .iter()
                        .zip(val(*a).values())
                        .map(|(&gv, &av)| gv * av)
                        .collect();
                    push(*a, Tensor::from_vec(val(*a).shape().to_vec(), da)?);
                    push(*b, Tensor::from_vec(val(*b).shape().to_vec(), db)?);
                }
                Op::AddScalar { a, .. } => push(*a, g.clone()),
                Op::MulScalar { a, c } => {
                    let mut d = g.clone();
                    d.scale_in_place(*c);
                    push(*a, d);
                }
                Op::ConcatCols { parts } => {
                    let m = nodes[id].value.rows();
                    let total = nodes[id].value.cols();
                    let mut off = 0;
                    for &p in parts {
                        let pn = val(p).cols();
                        let mut d = vec![0.0; m * pn];
                        for i in 0..m {
                            d[i * pn..(i + 1) * pn].copy_from_slice(
                                &g.values()[i * total + off..i * total + off + pn],
                            );
                        }
                        push(p, Tensor::from_vec(vec![m, pn], d)?);
                        off += pn;
                    }
                }
                Op::SliceCols { a, start, len } => {
                    let (m, n) = (val(*a).rows(), val(*a).cols());
                    let mut d = vec![0.0; m * n];
                    for i in 0..m {
                        d[i * n + start..i * n + start + len]
                            .copy_from_slice(&g.values()[i * len..(i + 1) * len]);
                    }
                    push(*a, Tensor::from_vec(vec![m, n], d)?);
                }
                Op::MulBroadcastCol { a, col } => {
                    let (m, n) = (val(*a).rows(), val(*a).cols());
                    let c = val(*col).values();
                    let mut da = vec![0.0; m * n];
                    let mut dc = vec![0.0; m];
                    for i in 0..m {
                        let grow = &g.values()[i * n..(i + 1) * n];
                        let arow = &val(*a).values()[i * n..(i + 1) * n];
                        for ((d, &gv), &av) in
                            da[i * n..(i + 1) * n].iter_mut().zip(grow).zip(arow)
                        {
                            *d = gv * c[i];
                            dc[i] += gv * av;
                        }
                    }
                    push(*a, Tensor::from_vec(vec![m, n], da)?);
                    push(*col, Tensor::from_vec(vec![m, 1], dc)?);
                }
                Op::DivBroadcastCol { a, col } => {
                    let (m, n) = (val(*a).rows(), val(*a).cols());
                    let c = val(*col).values();
                    let mut da = vec![0.0; m * n];
                    let mut dc = vec![0.0; m];
                    for i in 0..m {
                        let grow = &g.values()[i * n..(i + 1) * n];
                        let arow = &val(*a).values()[i * n..(i + 1) * n];
                        if c[i] == 0.0 {
                            continue; // 0/0 convention: no gradient
                        }
                        for ((d, &gv), &av) in
                            da[i * n..(i + 1) * n].iter_mut().zip(grow).zip(arow)
                        {
                            *d = gv / c[i];
                            dc[i] -= gv * av / (c[i] * c[i]);
                        }
                    }
                    push(*a, Tensor::from_vec(vec![m, n], da)?);
                    push(*col, Tensor::from_vec(vec![m, 1], dc)?);
                }
                Op::SumAll { a } => {
                    push(
                        *a,
                        Tensor::full(val(*a).shape().to_vec(), g.scalar_value()),
                    );
                }
                Op::MeanAll { a } => {
                    let n = val(*a).len() as f64;
                    push(
                        *a,
                        Tensor::full(val(*a).shape().to_vec(), g.scalar_value() / n),
                    );
                }
                Op::SumAxis0 { a } => {
                    let (m, n) = (val(*a).rows(), val(*a).cols());
                    let mut d = vec![0.0; m * n];
                    for i in 0..m {
                        d[i * n..(i + 1) * n].copy_from_slice(g.values());
                    }
                    push(*a, Tensor::from_vec(vec![m, n], d)?);
                }
                Op::SumAxis1 { a } => {
                    let (m, n) = (val(*a).rows(), val(*a).cols());
                    let mut d = vec![0.0; m * n];
                    for i in 0..m {
                        let gv = g.values()[i];
                        for x in &mut d[i * n..(i + 1) * n] {
                            *x = gv;
                        }
                    }
                    push(*a, Tensor::from_vec(vec![m, n], d)?);
                }
                Op::BroadcastScalar { s, .. } => {
                    let total: f64 = g.values().iter().sum();
                    push(*s, Tensor::scalar(total));
                }
                Op::L2NormRows { a } => {
                    let (m, n) = (val(*a).rows(), val(*a).cols());
                    let norms = nodes[id].value.values();
                    let mut d = vec![0.0; m * n];
                    for i in 0..m {
                        if norms[i] == 0.0 {
                            continue; // subgradient 0 at the origin
                        }
                        let gv = g.values()[i] / norms[i];
                        let arow = &val(*a).values()[i * n..(i + 1) * n];
                        for (dst, &av) in d[i * n..(i + 1) * n].iter_mut().zip(arow) {
                            *dst = gv * av;
                        }
                    }
                    push(*a, Tensor::from_vec(vec![m, n], d)?);
                }
                Op::Ln { a, floor } => {
                    let x = val(*a).values();
                    let d: Vec<f64> = g
                        .values()
                        .iter()
                        .zip(x)
                        .map(|(&gv, &xv)| match floor {
                            Some(f) if xv < *f => 0.0,
                            _ => gv / xv,
                        })
                        .collect();
                    push(*a, Tensor::from_vec(val(*a).shape().to_vec(), d)?);
                }
                Op::Mse { a, b } => {
                    let n = val(*a).len() as f64;
                    let s = 2.0 * g.scalar_value() / n;
                    let da: Vec<f64> = val(*a)
                        .values()
                        .iter()
                        .zip(val(*b).values())
                        .map(|(&av, &bv)| s * (av - bv))
                        .collect();
                    let db: Vec<f64> = da.iter().map(|&v| -v).collect();
                    push(*a, Tensor::from_vec(val(*a).shape().to_vec(), da)?);
                    push(*b, Tensor::from_vec(val(*b).shape().to_vec(), db)?);
                }
                Op::Dropout { a, scaled_mask } => {
                    let d: Vec<f64> = g
                        .values()
                        .iter()
                        .zip(scaled_mask)
                        .map(|(&gv, &mv)| gv * mv)
                        .collect();
                    push(*a, Tensor::from_vec(val(*a).shape().to_vec(), d)?);
                }
                Op::Embed { table, ids } => {
                    let (v, e) = (val(*table).rows(), val(*table).cols());
                    let mut d = vec![0.0; v * e];
                    for (i, &id) in ids.iter().enumerate() {
                        let grow = &g.values()[i * e..(i + 1) * e];
                        for (dst, &gv) in
                            d[id as usize * e..(id as usize + 1) * e].iter_mut().zip(grow)
                        {
                            *dst += gv;
                        }
                    }
                    push(*table, Tensor::from_vec(vec![v, e], d)?);
                }
                Op::GatherPerRow { a, ids } => {
                    let (m, n) = (val(*a).rows(), val(*a).cols());
                    let mut d = vec![0.0; m * n];
                    for (i, &id) in ids.iter().enumerate() {
                        d[i * n + id as usize] = g.values()[i];
                    }
                    push(*a, Tensor::from_vec(vec![m, n], d)?);
                }
                Op::Reshape { a } => {
                    push(
                        *a,
                        Tensor::from_vec(val(*a).shape().to_vec(), g.values().to_vec())?,
                    );
                }
            }
            grads[id] = None;
        }

        // leaves that require gradients but were never reached get zeros
        for (id, node) in nodes.iter().enumerate() {
            if matches!(node.op, Op::Leaf) && node.requires_grad && grads[id].is_none() {
                grads[id] = Some(Tensor::zeros(node.value.shape().to_vec()));
            }
        }
        // retain leaf slots only
        for (id, node) in nodes.iter().enumerate() {
            if !matches!(node.op, Op::Leaf) {
                grads[id] = None;
            }
        }
        Ok(Gradients { grads })
    }

    /// Allow another backward pass over this tape.
    pub fn reset_backward(&self) {
        self.backward_taken.set(false);
    }
}
