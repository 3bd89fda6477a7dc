//! Gradient-of-gradient support.
//!
//! [`Tape::input_gradient`] replays a backward pass between two tape points,
//! but expresses every partial as a fresh taped operation. The returned
//! handle is the gradient of (the sum of) `output` with respect to `wrt`,
//! and because it lives on the tape it can be fed into further operations
//! and differentiated once more by the ordinary backward pass.

use super::tape::{Op, Tape, Value};
use super::tensor::Tensor;
use crate::error::{Error, Result};

impl Tape {
    /// Gradient of `output` with respect to `wrt`, as a taped value.
    ///
    /// `output` may be a column of per-row scores (the seed is then a ones
    /// vector, i.e. the gradient of the summed output); when rows are
    /// processed independently this yields per-row input gradients.
    ///
    /// Only operators with a second-order rule may appear between `wrt` and
    /// `output`: matrix products, bias rows, relu, tanh, elementwise
    /// add/sub/mul, scalar affine, concatenation, slicing, row norms,
    /// reshapes and sums. Anything else raises
    /// [`Error::UnsupportedSecondOrder`].
    pub fn input_gradient(&self, output: Value, wrt: Value) -> Result<Value> {
        if !self.grad_enabled() {
            return Err(Error::Contract(
                "input_gradient on an inference tape".into(),
            ));
        }
        let limit = output.0 + 1;
        let (fwd, need) = {
            let nodes = self.borrow_nodes();
            if wrt.0 >= nodes.len() || output.0 >= nodes.len() {
                return Err(Error::Contract("input_gradient: stale handle".into()));
            }
            // nodes influenced by wrt
            let mut fwd = vec![false; limit];
            if wrt.0 < limit {
                fwd[wrt.0] = true;
            }
            for id in wrt.0 + 1..limit {
                fwd[id] = nodes[id].op.inputs().iter().any(|v| v.0 < limit && fwd[v.0]);
            }
            // nodes that influence output
            let mut need = vec![false; limit];
            need[output.0] = true;
            for id in (0..limit).rev() {
                if need[id] {
                    for v in nodes[id].op.inputs() {
                        need[v.0] = true;
                    }
                }
            }
            (fwd, need)
        };

        if wrt.0 >= limit || !fwd[output.0] {
            // output does not depend on wrt: gradient is identically zero
            let shape = self.shape_of(wrt);
            return self.constant(Tensor::zeros(shape));
        }

        let seed = {
            let shape = self.shape_of(output);
            self.constant(Tensor::full(shape, 1.0))?
        };

        let mut grad: Vec<Option<Value>> = vec![None; limit];
        grad[output.0] = Some(seed);

        for id in (wrt.0..limit).rev() {
            if !(fwd[id] && need[id]) {
                continue;
            }
            let Some(g) = grad[id] else { continue };
            if id == wrt.0 {
                break;
            }
            let op_desc = {
                let nodes = self.borrow_nodes();
                OpView::capture(&nodes[id].op, Value(id))
            };
            let relevant = |v: Value| v.0 < limit && fwd[v.0] && need[v.0];
            let acc = |slot_holder: &mut Vec<Option<Value>>, v: Value, d: Value| -> Result<()> {
                if let Some(prev) = slot_holder[v.0] {
                    slot_holder[v.0] = Some(self.add(prev, d)?);
                } else {
                    slot_holder[v.0] = Some(d);
                }
                Ok(())
            };
            match op_desc {
                OpView::Matmul { a, b } => {
                    if relevant(a) {
                        let d = self.matmul_nt(g, b)?;
                        acc(&mut grad, a, d)?;
                    }
                    if relevant(b) {
                        let d = self.matmul_tn(a, g)?;
                        acc(&mut grad, b, d)?;
                    }
                }
                OpView::AddBroadcastRow { a, row } => {
                    if relevant(a) {
                        acc(&mut grad, a, g)?;
                    }
                    if relevant(row) {
                        let d = self.sum_axis0(g)?;
                        acc(&mut grad, row, d)?;
                    }
                }
                OpView::Tanh { this, a } => {
                    if relevant(a) {
                        // d tanh = 1 − y²
                        let y2 = self.mul(this, this)?;
                        let neg = self.mul_scalar(y2, -1.0)?;
                        let one_minus = self.add_scalar(neg, 1.0)?;
                        let d = self.mul(g, one_minus)?;
                        acc(&mut grad, a, d)?;
                    }
                }
                OpView::Relu { a } => {
                    if relevant(a) {
                        // the 0/1 gate is constant almost everywhere
                        let gate = {
                            let nodes = self.borrow_nodes();
                            let x = &nodes[a.0].value;
                            let vals: Vec<f64> = x
                                .values()
                                .iter()
                                .map(|&v| if v > 0.0 { 1.0 } else { 0.0 })
                                .collect();
                            Tensor::from_vec(x.shape().to_vec(), vals)?
                        };
                        let gate = self.constant(gate)?;
                        let d = self.mul(g, gate)?;
                        acc(&mut grad, a, d)?;
                    }
                }
                OpView::Add { a, b } => {
                    if relevant(a) {
                        acc(&mut grad, a, g)?;
                    }
                    if relevant(b) {
                        acc(&mut grad, b, g)?;
                    }
                }
                OpView::Sub { a, b } => {
                    if relevant(a) {
                        acc(&mut grad, a, g)?;
                    }
                    if relevant(b) {
                        let d = self.mul_scalar(g, -1.0)?;
                        acc(&mut grad, b, d)?;
                    }
                }
                OpView::Mul { a, b } => {
                    if relevant(a) {
                        let d = self.mul(g, b)?;
                        acc(&mut grad, a, d)?;
                    }
                    if relevant(b) {
                        let d = self.mul(g, a)?;
                        acc(&mut grad, b, d)?;
                    }
                }
                OpView::AddScalar { a } => {
                    if relevant(a) {
                        acc(&mut grad, a, g)?;
                    }
                }
                OpView::MulScalar { a, c } => {
                    if relevant(a) {
                        let d = self.mul_scalar(g, c)?;
                        acc(&mut grad, a, d)?;
                    }
                }
                OpView::ConcatCols { parts } => {
                    let mut off = 0;
                    for p in parts {
                        let pn = self.shape_of(p)[1];
                        if relevant(p) {
                            let d = self.slice_cols(g, off, pn)?;
                            acc(&mut grad, p, d)?;
                        }
                        off += pn;
                    }
                }
                OpView::SliceCols { a, start, len } => {
                    if relevant(a) {
                        // scatter back via concat with zero blocks
                        let (m, n) = {
                            let s = self.shape_of(a);
                            (s[0], s[1])
                        };
                        let mut parts: Vec<Value> = Vec::new();
                        if start > 0 {
                            parts.push(self.constant(Tensor::zeros(vec![m, start]))?);
                        }
                        parts.push(g);
                        if start + len < n {
                            parts.push(self.constant(Tensor::zeros(vec![m, n - start - len]))?);
                        }
                        let d = self.concat_cols(&parts)?;
                        acc(&mut grad, a, d)?;
                    }
                }
                OpView::MulBroadcastCol { a, col } => {
                    if relevant(a) {
                        let d = self.mul_broadcast_col(g, col)?;
                        acc(&mut grad, a, d)?;
                    }
                    if relevant(col) {
                        let prod = self.mul(g, a)?;
                        let d = self.sum_axis1(prod)?;
                        acc(&mut grad, col, d)?;
                    }
                }
                OpView::L2NormRows { this, a } => {
                    if relevant(a) {
                        // d‖x‖/dx = x/‖x‖ rowwise (0 at the origin)
                        let unit = self.div_broadcast_col(a, this)?;
                        let d = self.mul_broadcast_col(unit, g)?;
                        acc(&mut grad, a, d)?;
                    }
                }
                OpView::SumAll { a } => {
                    if relevant(a) {
                        let s = self.shape_of(a);
                        let d = self.broadcast_scalar(g, s[0], s[1])?;
                        acc(&mut grad, a, d)?;
                    }
                }
                OpView::MeanAll { a } => {
                    if relevant(a) {
                        let s = self.shape_of(a);
                        let b = self.broadcast_scalar(g, s[0], s[1])?;
                        let d = self.mul_scalar(b, 1.0 / (s[0] * s[1]) as f64)?;
                        acc(&mut grad, a, d)?;
                    }
                }
                OpView::Reshape { a } => {
                    if relevant(a) {
                        let d = self.reshape(g, self.shape_of(a))?;
                        acc(&mut grad, a, d)?;
                    }
                }
                OpView::Unsupported(name) => {
                    return Err(Error::UnsupportedSecondOrder(name));
                }
            }
        }

        match grad[wrt.0] {
            Some(g) => Ok(g),
            None => {
                let shape = self.shape_of(wrt);
                Ok(self.constant(Tensor::zeros(shape))?)
            }
        }
    }
}

/// Plain-data snapshot of an op, so the node borrow is released before new
/// nodes are recorded.
enum OpView {
    Matmul { a: Value, b: Value },
    AddBroadcastRow { a: Value, row: Value },
    Tanh { this: Value, a: Value },
    Relu { a: Value },
    Add { a: Value, b: Value },
    Sub { a: Value, b: Value },
    Mul { a: Value, b: Value },
    AddScalar { a: Value },
    MulScalar { a: Value, c: f64 },
    ConcatCols { parts: Vec<Value> },
    SliceCols { a: Value, start: usize, len: usize },
    MulBroadcastCol { a: Value, col: Value },
    L2NormRows { this: Value, a: Value },
    SumAll { a: Value },
    MeanAll { a: Value },
    Reshape { a: Value },
    Unsupported(&'static str),
}

impl OpView {
    fn capture(op: &Op, this: Value) -> OpView {
        match op {
            Op::Matmul { a, b } => OpView::Matmul { a: *a, b: *b },
            Op::AddBroadcastRow { a, row } => OpView::AddBroadcastRow { a: *a, row: *row },
            Op::Tanh { a } => OpView::Tanh { this, a: *a },
            Op::Relu { a } => OpView::Relu { a: *a },
            Op::Add { a, b } => OpView::Add { a: *a, b: *b },
            Op::Sub { a, b } => OpView::Sub { a: *a, b: *b },
            Op::Mul { a, b } => OpView::Mul { a: *a, b: *b },
            Op::AddScalar { a, .. } => OpView::AddScalar { a: *a },
            Op::MulScalar { a, c } => OpView::MulScalar { a: *a, c: *c },
            Op::ConcatCols { parts } => OpView::ConcatCols {
                parts: parts.clone(),
            },
            Op::SliceCols { a, start, len } => OpView::SliceCols {
                a: *a,
                start: *start,
                len: *len,
            },
            Op::MulBroadcastCol { a, col } => OpView::MulBroadcastCol { a: *a, col: *col },
            Op::L2NormRows { a } => OpView::L2NormRows { this, a: *a },
            Op::SumAll { a } => OpView::SumAll { a: *a },
            Op::MeanAll { a } => OpView::MeanAll { a: *a },
            Op::Reshape { a } => OpView::Reshape { a: *a },
            other => OpView::Unsupported(other.name()),
        }
    }
}
