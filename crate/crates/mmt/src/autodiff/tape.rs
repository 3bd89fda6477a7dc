//! Operation recording and forward execution.

use std::cell::{Cell, Ref, RefCell};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Handle to a value stored on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Value(pub(crate) usize);

/// Recorded operation. Operand handles point at earlier tape entries, so the
/// record is topologically ordered by construction and a reverse walk visits
/// operations in exact reverse topological order.
#[derive(Debug)]
pub(crate) enum Op {
    Leaf,
    Constant,
    /// a(m×k) · b(k×n)
    Matmul { a: Value, b: Value },
    /// a(m×k) · b(n×k)ᵀ
    MatmulNT { a: Value, b: Value },
    /// a(k×m)ᵀ · b(k×n)
    MatmulTN { a: Value, b: Value },
    /// B×D plus a 1×D row broadcast over rows.
    AddBroadcastRow { a: Value, row: Value },
    Tanh { a: Value },
    Relu { a: Value },
    Sigmoid { a: Value },
    Softmax { a: Value },
    /// Row softmax restricted to positions where mask is 1; others output 0.
    SoftmaxMasked { a: Value, mask: Value },
    Add { a: Value, b: Value },
    Sub { a: Value, b: Value },
    Mul { a: Value, b: Value },
    AddScalar { a: Value },
    MulScalar { a: Value, c: f64 },
    ConcatCols { parts: Vec<Value> },
    SliceCols { a: Value, start: usize, len: usize },
    /// B×D ⊙ B×1 with the column broadcast across D.
    MulBroadcastCol { a: Value, col: Value },
    /// B×D ÷ B×1 rowwise; 0/0 is defined as 0 (subgradient choice for norms).
    DivBroadcastCol { a: Value, col: Value },
    SumAll { a: Value },
    MeanAll { a: Value },
    /// Column sums: B×D → 1×D.
    SumAxis0 { a: Value },
    /// Row sums: B×D → B×1.
    SumAxis1 { a: Value },
    /// Fill rows×cols with a scalar taped value.
    BroadcastScalar { s: Value },
    /// Euclidean norm of each row: B×D → B×1.
    L2NormRows { a: Value },
    /// Natural log; with a floor, inputs below it are clamped (and counted).
    Ln { a: Value, floor: Option<f64> },
    /// Mean over all elements of (a−b)².
    Mse { a: Value, b: Value },
    /// Inverted dropout; `scaled_mask` entries are 0 or 1/keep.
    Dropout { a: Value, scaled_mask: Vec<f64> },
    /// Row lookup: table(V×E) gathered at ids → B×E.
    Embed { table: Value, ids: Vec<u32> },
    /// Pick a[i, ids[i]] from B×V → B×1.
    GatherPerRow { a: Value, ids: Vec<u32> },
    /// Same buffer under a new shape.
    Reshape { a: Value },
}

impl Op {
    pub(crate) fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Constant => "constant",
            Op::Matmul { .. } => "matmul",
            Op::MatmulNT { .. } => "matmul_nt",
            Op::MatmulTN { .. } => "matmul_tn",
            Op::AddBroadcastRow { .. } => "add_broadcast_row",
            Op::Tanh { .. } => "tanh",
            Op::Relu { .. } => "relu",
            Op::Sigmoid { .. } => "sigmoid",
            Op::Softmax { .. } => "softmax",
            Op::SoftmaxMasked { .. } => "softmax_masked",
            Op::Add { .. } => "add",
            Op::Sub { .. } => "sub",
            Op::Mul { .. } => "mul",
            Op::AddScalar { .. } => "add_scalar",
            Op::MulScalar { .. } => "mul_scalar",
            Op::ConcatCols { .. } => "concat_cols",
            Op::SliceCols { .. } => "slice_cols",
            Op::MulBroadcastCol { .. } => "mul_broadcast_col",
            Op::DivBroadcastCol { .. } => "div_broadcast_col",
            Op::SumAll { .. } => "sum_all",
            Op::MeanAll { .. } => "mean_all",
            Op::SumAxis0 { .. } => "sum_axis0",
            Op::SumAxis1 { .. } => "sum_axis1",
            Op::BroadcastScalar { .. } => "broadcast_scalar",
            Op::L2NormRows { .. } => "l2norm_rows",
            Op::Ln { .. } => "ln",
            Op::Mse { .. } => "mse",
            Op::Dropout { .. } => "dropout",
            Op::Embed { .. } => "embed",
            Op::GatherPerRow { .. } => "gather_per_row",
            Op::Reshape { .. } => "reshape",
        }
    }

    pub(crate) fn inputs(&self) -> Vec<Value> {
        match self {
            Op::Leaf | Op::Constant => vec![],
            Op::Matmul { a, b }
            | Op::MatmulNT { a, b }
            | Op::MatmulTN { a, b }
            | Op::Add { a, b }
            | Op::Sub { a, b }
            | Op::Mul { a, b }
            | Op::Mse { a, b } => vec![*a, *b],
            Op::AddBroadcastRow { a, row } => vec![*a, *row],
            Op::SoftmaxMasked { a, mask } => vec![*a, *mask],
            Op::MulBroadcastCol { a, col } | Op::DivBroadcastCol { a, col } => vec![*a, *col],
            Op::Tanh { a }
            | Op::Relu { a }
            | Op::Sigmoid { a }
            | Op::Softmax { a }
            | Op::AddScalar { a, .. }
            | Op::MulScalar { a, .. }
            | Op::SliceCols { a, .. }
            | Op::SumAll { a }
            | Op::MeanAll { a }
            | Op::SumAxis0 { a }
            | Op::SumAxis1 { a }
            | Op::L2NormRows { a }
            | Op::Ln { a, .. }
            | Op::Dropout { a, .. }
            | Op::Embed { table: a, .. }
            | Op::GatherPerRow { a, .. }
            | Op::Reshape { a } => vec![*a],
            Op::BroadcastScalar { s, .. } => vec![*s],
            Op::ConcatCols { parts } => parts.clone(),
        }
    }
}

pub(crate) struct Node {
    pub(crate) op: Op,
    pub(crate) value: Tensor,
    pub(crate) requires_grad: bool,
}

/// Single-writer record of a computation.
pub struct Tape {
    pub(crate) nodes: RefCell<Vec<Node>>,
    grad_enabled: bool,
    pub(crate) backward_taken: Cell<bool>,
    ln_clamps: Cell<u64>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape {
            nodes: RefCell::new(Vec::new()),
            grad_enabled: true,
            backward_taken: Cell::new(false),
            ln_clamps: Cell::new(0),
        }
    }

    /// A tape that stores values but records no gradient information.
    pub fn inference() -> Tape {
        Tape {
            nodes: RefCell::new(Vec::new()),
            grad_enabled: false,
            backward_taken: Cell::new(false),
            ln_clamps: Cell::new(0),
        }
    }

    pub fn grad_enabled(&self) -> bool {
        self.grad_enabled
    }

    /// Times an `ln` input had to be clamped to its floor so far.
    pub fn clamp_warnings(&self) -> u64 {
        self.ln_clamps.get()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// Register an input tensor. On an inference tape the gradient request
    /// is ignored.
    pub fn leaf(&self, t: Tensor, requires_grad: bool) -> Result<Value> {
        t.check_finite("leaf")?;
        Ok(self.push(Op::Leaf, t, requires_grad && self.grad_enabled))
    }

    /// Register a tensor that never receives gradients (masks, noise, ...).
    pub fn constant(&self, t: Tensor) -> Result<Value> {
        t.check_finite("constant")?;
        Ok(self.push(Op::Constant, t, false))
    }

    pub fn scalar_const(&self, v: f64) -> Result<Value> {
        self.constant(Tensor::scalar(v))
    }

    /// Clone out the tensor behind a handle.
    pub fn tensor(&self, v: Value) -> Tensor {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn shape_of(&self, v: Value) -> Vec<usize> {
        self.nodes.borrow()[v.0].value.shape().to_vec()
    }

    pub fn scalar_of(&self, v: Value) -> f64 {
        self.nodes.borrow()[v.0].value.scalar_value()
    }

    pub fn requires_grad_of(&self, v: Value) -> bool {
        self.nodes.borrow()[v.0].requires_grad
    }

    pub(crate) fn borrow_nodes(&self) -> Ref<'_, Vec<Node>> {
        self.nodes.borrow()
    }

    fn push(&self, op: Op, value: Tensor, requires_grad: bool) -> Value {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Value(nodes.len() - 1)
    }

    /// Record `op` producing `value`; gradient tracking follows the inputs.
    fn record(&self, op: Op, value: Tensor) -> Result<Value> {
        value.check_finite(op.name())?;
        let requires = self.grad_enabled
            && op
                .inputs()
                .iter()
                .any(|v| self.nodes.borrow()[v.0].requires_grad);
        Ok(self.push(op, value, requires))
    }

    fn with_values<R>(&self, v: Value, f: impl FnOnce(&Tensor) -> R) -> R {
        f(&self.nodes.borrow()[v.0].value)
    }

    fn dims2(&self, v: Value) -> (usize, usize) {
        self.with_values(v, |t| (t.rows(), t.cols()))
    }

    // ---- operators ----------------------------------------------------

    pub fn matmul(&self, a: Value, b: Value) -> Result<Value> {
        let (m, k) = self.dims2(a);
        let (k2, n) = self.dims2(b);
        if k != k2 {
            return Err(Error::Shape(format!(
                "matmul: inner dims {k} vs {k2} (shapes {:?}·{:?})",
                self.shape_of(a),
                self.shape_of(b)
            )));
        }
        let out = self.with_values(a, |ta| {
            self.with_values(b, |tb| {
                kernels::matmul(ta.values(), tb.values(), m, k, n)
            })
        });
        self.record(Op::Matmul { a, b }, Tensor::from_vec(vec![m, n], out)?)
    }

    pub fn matmul_nt(&self, a: Value, b: Value) -> Result<Value> {
        let (m, k) = self.dims2(a);
        let (n, k2) = self.dims2(b);
        if k != k2 {
            return Err(Error::Shape(format!("matmul_nt: inner dims {k} vs {k2}")));
        }
        let out = self.with_values(a, |ta| {
            self.with_values(b, |tb| {
                kernels::matmul_nt(ta.values(), tb.values(), m, k, n)
            })
        });
        self.record(Op::MatmulNT { a, b }, Tensor::from_vec(vec![m, n], out)?)
    }

    pub fn matmul_tn(&self, a: Value, b: Value) -> Result<Value> {
        let (k, m) = self.dims2(a);
        let (k2, n) = self.dims2(b);
        if k != k2 {
            return Err(Error::Shape(format!("matmul_tn: inner dims {k} vs {k2}")));
        }
        let out = self.with_values(a, |ta| {
            self.with_values(b, |tb| {
                kernels::matmul_tn(ta.values(), tb.values(), m, k, n)
            })
        });
        self.record(Op::MatmulTN { a, b }, Tensor::from_vec(vec![m, n], out)?)
    }

    /// x·W plus a broadcast bias row: the affine map.
    pub fn affine(&self, x: Value, w: Value, bias: Option<Value>) -> Result<Value> {
        let y = self.matmul(x, w)?;
        match bias {
            Some(b) => self.add_broadcast_row(y, b),
            None => Ok(y),
        }
    }

    pub fn add_broadcast_row(&self, a: Value, row: Value) -> Result<Value> {
        let (m, n) = self.dims2(a);
        let (rr, rc) = self.dims2(row);
        if rr != 1 || rc != n {
            return Err(Error::Shape(format!(
                "add_broadcast_row: row {rr}×{rc} against {m}×{n}"
            )));
        }
        let out = self.with_values(a, |ta| {
            self.with_values(row, |tr| {
                let mut v = ta.values().to_vec();
                for i in 0..m {
                    for (x, r) in v[i * n..(i + 1) * n].iter_mut().zip(tr.values()) {
                        *x += r;
                    }
                }
                v
            })
        });
        self.record(
            Op::AddBroadcastRow { a, row },
            Tensor::from_vec(vec![m, n], out)?,
        )
    }

    fn unary(
        &self,
        a: Value,
        f: impl Fn(f64) -> f64,
        make: impl FnOnce(Value) -> Op,
    ) -> Result<Value> {
        let (t, shape) = self.with_values(a, |ta| {
            (
                ta.values().iter().map(|&x| f(x)).collect::<Vec<f64>>(),
                ta.shape().to_vec(),
            )
        });
        self.record(make(a), Tensor::from_vec(shape, t)?)
    }

    pub fn tanh(&self, a: Value) -> Result<Value> {
        self.unary(a, f64::tanh, |a| Op::Tanh { a })
    }

    pub fn relu(&self, a: Value) -> Result<Value> {
        self.unary(a, |x| if x > 0.0 { x } else { 0.0 }, |a| Op::Relu { a })
    }

    pub fn sigmoid(&self, a: Value) -> Result<Value> {
        self.unary(a, kernels::sigmoid, |a| Op::Sigmoid { a })
    }

    /// Softmax along the last axis (rows of a matrix).
    pub fn softmax(&self, a: Value) -> Result<Value> {
        let (m, n) = self.dims2(a);
        let out = self.with_values(a, |ta| {
            let mut v = ta.values().to_vec();
            for i in 0..m {
                kernels::softmax_row(&mut v[i * n..(i + 1) * n]);
            }
            v
        });
        self.record(Op::Softmax { a }, Tensor::from_vec(vec![m, n], out)?)
    }

    /// Softmax over positions where `mask` is 1; masked outputs are exactly 0.
    /// Errors when a row is fully masked.
    pub fn softmax_masked(&self, a: Value, mask: Value) -> Result<Value> {
        let (m, n) = self.dims2(a);
        if self.dims2(mask) != (m, n) {
            return Err(Error::Shape(format!(
                "softmax_masked: mask {:?} against {m}×{n}",
                self.shape_of(mask)
            )));
        }
        let out = self.with_values(a, |ta| {
            self.with_values(mask, |tm| -> Result<Vec<f64>> {
                let mut v = ta.values().to_vec();
                for i in 0..m {
                    kernels::softmax_row_masked(
                        &mut v[i * n..(i + 1) * n],
                        &tm.values()[i * n..(i + 1) * n],
                    )
                    .map_err(|_| {
                        Error::Contract(format!("softmax_masked: row {i} fully masked"))
                    })?;
                }
                Ok(v)
            })
        })?;
        self.record(
            Op::SoftmaxMasked { a, mask },
            Tensor::from_vec(vec![m, n], out)?,
        )
    }

    fn binary_same_shape(
        &self,
        a: Value,
        b: Value,
        name: &str,
        f: impl Fn(f64, f64) -> f64,
        make: impl FnOnce(Value, Value) -> Op,
    ) -> Result<Value> {
        let sa = self.shape_of(a);
        let sb = self.shape_of(b);
        if sa != sb {
            return Err(Error::Shape(format!("{name}: {sa:?} vs {sb:?}")));
        }
        let out = self.with_values(a, |ta| {
            self.with_values(b, |tb| {
                ta.values()
                    .iter()
                    .zip(tb.values())
                    .map(|(&x, &y)| f(x, y))
                    .collect::<Vec<f64>>()
            })
        });
        self.record(make(a, b), Tensor::from_vec(sa, out)?)
    }

    pub fn add(&self, a: Value, b: Value) -> Result<Value> {
        self.binary_same_shape(a, b, "add", |x, y| x + y, |a, b| Op::Add { a, b })
    }

    pub fn sub(&self, a: Value, b: Value) -> Result<Value> {
        self.binary_same_shape(a, b, "sub", |x, y| x - y, |a, b| Op::Sub { a, b })
    }

    pub fn mul(&self, a: Value, b: Value) -> Result<Value> {
        self.binary_same_shape(a, b, "mul", |x, y| x * y, |a, b| Op::Mul { a, b })
    }

    pub fn add_scalar(&self, a: Value, c: f64) -> Result<Value> {
        self.unary(a, |x| x + c, |a| Op::AddScalar { a })
    }

    pub fn mul_scalar(&self, a: Value, c: f64) -> Result<Value> {
        self.unary(a, |x| x * c, |a| Op::MulScalar { a, c })
    }

    /// Concatenate along columns; all parts must share the row count.
    pub fn concat_cols(&self, parts: &[Value]) -> Result<Value> {
        if parts.is_empty() {
            return Err(Error::Contract("concat_cols: no parts".into()));
        }
        let (m, _) = self.dims2(parts[0]);
        let mut total = 0;
        for &p in parts {
            let (pm, pn) = self.dims2(p);
            if pm != m {
                return Err(Error::Shape(format!(
                    "concat_cols: rows {pm} vs {m} across parts"
                )));
            }
            total += pn;
        }
        let mut out = vec![0.0; m * total];
        let mut off = 0;
        for &p in parts {
            let (_, pn) = self.dims2(p);
            self.with_values(p, |tp| {
                for i in 0..m {
                    out[i * total + off..i * total + off + pn]
                        .copy_from_slice(&tp.values()[i * pn..(i + 1) * pn]);
                }
            });
            off += pn;
        }
        self.record(
            Op::ConcatCols {
                parts: parts.to_vec(),
            },
            Tensor::from_vec(vec![m, total], out)?,
        )
    }

    pub fn slice_cols(&self, a: Value, start: usize, len: usize) -> Result<Value> {
        let (m, n) = self.dims2(a);
        if start + len > n {
            return Err(Error::Shape(format!(
                "slice_cols: [{start}, {}) out of {n}",
                start + len
            )));
        }
        let out = self.with_values(a, |ta| {
            let mut v = vec![0.0; m * len];
            for i in 0..m {
                v[i * len..(i + 1) * len]
                    .copy_from_slice(&ta.values()[i * n + start..i * n + start + len]);
            }
            v
        });
        self.record(
            Op::SliceCols { a, start, len },
            Tensor::from_vec(vec![m, len], out)?,
        )
    }

    /// Scale each row of `a` by the matching entry of a B×1 column.
    pub fn mul_broadcast_col(&self, a: Value, col: Value) -> Result<Value> {
        let (m, n) = self.dims2(a);
        let (cm, cn) = self.dims2(col);
        if cm != m || cn != 1 {
            return Err(Error::Shape(format!(
                "mul_broadcast_col: col {cm}×{cn} against {m}×{n}"
            )));
        }
        let out = self.with_values(a, |ta| {
            self.with_values(col, |tc| {
                let mut v = ta.values().to_vec();
                for i in 0..m {
                    let c = tc.values()[i];
                    for x in &mut v[i * n..(i + 1) * n] {
                        *x *= c;
                    }
                }
                v
            })
        });
        self.record(
            Op::MulBroadcastCol { a, col },
            Tensor::from_vec(vec![m, n], out)?,
        )
    }

    /// Divide each row of `a` by the matching entry of a B×1 column.
    /// 0/0 yields 0; x/0 for x ≠ 0 is a numeric error.
    pub fn div_broadcast_col(&self, a: Value, col: Value) -> Result<Value> {
        let (m, n) = self.dims2(a);
        let (cm, cn) = self.dims2(col);
        if cm != m || cn != 1 {
            return Err(Error::Shape(format!(
                "div_broadcast_col: col {cm}×{cn} against {m}×{n}"
            )));
        }
        let out = self.with_values(a, |ta| {
            self.with_values(col, |tc| {
                let mut v = ta.values().to_vec();
                for i in 0..m {
                    let c = tc.values()[i];
                    for x in &mut v[i * n..(i + 1) * n] {
                        *x = if c == 0.0 && *x == 0.0 { 0.0 } else { *x / c };
                    }
                }
                v
            })
        });
        self.record(
            Op::DivBroadcastCol { a, col },
            Tensor::from_vec(vec![m, n], out)?,
        )
    }

    pub fn sum_all(&self, a: Value) -> Result<Value> {
        let s = self.with_values(a, |ta| ta.values().iter().sum::<f64>());
        self.record(Op::SumAll { a }, Tensor::scalar(s))
    }

    pub fn mean_all(&self, a: Value) -> Result<Value> {
        let (s, n) = self.with_values(a, |ta| (ta.values().iter().sum::<f64>(), ta.len()));
        self.record(Op::MeanAll { a }, Tensor::scalar(s / n as f64))
    }

    pub fn sum_axis0(&self, a: Value) -> Result<Value> {
        let (m, n) = self.dims2(a);
        let out = self.with_values(a, |ta| {
            let mut v = vec![0.0; n];
            for i in 0..m {
                for (acc, x) in v.iter_mut().zip(&ta.values()[i * n..(i + 1) * n]) {
                    *acc += x;
                }
            }
            v
        });
        self.record(Op::SumAxis0 { a }, Tensor::from_vec(vec![1, n], out)?)
    }

    pub fn sum_axis1(&self, a: Value) -> Result<Value> {
        let (m, n) = self.dims2(a);
        let out = self.with_values(a, |ta| {
            (0..m)
                .map(|i| ta.values()[i * n..(i + 1) * n].iter().sum::<f64>())
                .collect::<Vec<f64>>()
        });
        self.record(Op::SumAxis1 { a }, Tensor::from_vec(vec![m, 1], out)?)
    }

    pub fn broadcast_scalar(&self, s: Value, rows: usize, cols: usize) -> Result<Value> {
        if !self.with_values(s, |t| t.is_scalar()) {
            return Err(Error::Shape("broadcast_scalar: source not scalar".into()));
        }
        let v = self.scalar_of(s);
        self.record(
            Op::BroadcastScalar { s },
            Tensor::full(vec![rows, cols], v),
        )
    }

    /// Euclidean norm of each row.
    pub fn l2norm_rows(&self, a: Value) -> Result<Value> {
        let (m, n) = self.dims2(a);
        let out = self.with_values(a, |ta| {
            (0..m)
                .map(|i| {
                    ta.values()[i * n..(i + 1) * n]
                        .iter()
                        .map(|x| x * x)
                        .sum::<f64>()
                        .sqrt()
                })
                .collect::<Vec<f64>>()
        });
        self.record(Op::L2NormRows { a }, Tensor::from_vec(vec![m, 1], out)?)
    }

    /// Euclidean norm of the whole tensor, as a 1×1 value.
    pub fn l2norm(&self, a: Value) -> Result<Value> {
        let n = self.with_values(a, |t| t.len());
        let flat = self.reshape(a, vec![1, n])?;
        self.l2norm_rows(flat)
    }

    /// Reinterpret the row-major buffer under a new shape (free).
    pub fn reshape(&self, a: Value, shape: Vec<usize>) -> Result<Value> {
        let (vals, old) = self.with_values(a, |t| (t.values().to_vec(), t.shape().to_vec()));
        if shape.iter().product::<usize>() != vals.len() {
            return Err(Error::Shape(format!(
                "reshape: {old:?} to {shape:?} changes element count"
            )));
        }
        self.record(Op::Reshape { a }, Tensor::from_vec(shape, vals)?)
    }

    /// Natural log. With `floor`, inputs below it are clamped and counted;
    /// without, non-positive input is a numeric error.
    pub fn ln(&self, a: Value, floor: Option<f64>) -> Result<Value> {
        let (vals, shape) = self.with_values(a, |ta| {
            (ta.values().to_vec(), ta.shape().to_vec())
        });
        let mut out = Vec::with_capacity(vals.len());
        for &x in &vals {
            match floor {
                Some(f) => {
                    if x < f {
                        self.ln_clamps.set(self.ln_clamps.get() + 1);
                        out.push(f.ln());
                    } else {
                        out.push(x.ln());
                    }
                }
                None => {
                    if x <= 0.0 {
                        return Err(Error::Numeric(format!("ln: non-positive input {x}")));
                    }
                    out.push(x.ln());
                }
            }
        }
        self.record(Op::Ln { a, floor }, Tensor::from_vec(shape, out)?)
    }

    /// Mean over all elements of the squared difference.
    pub fn mse(&self, a: Value, b: Value) -> Result<Value> {
        let sa = self.shape_of(a);
        let sb = self.shape_of(b);
        if sa != sb {
            return Err(Error::Shape(format!("mse: {sa:?} vs {sb:?}")));
        }
        let s = self.with_values(a, |ta| {
            self.with_values(b, |tb| {
                ta.values()
                    .iter()
                    .zip(tb.values())
                    .map(|(&x, &y)| (x - y) * (x - y))
                    .sum::<f64>()
                    / ta.len() as f64
            })
        });
        self.record(Op::Mse { a, b }, Tensor::scalar(s))
    }

    /// Inverted dropout: keeps an element with probability 1−rate and scales
    /// it by 1/(1−rate), so the expected output equals the input. Rate 0 is
    /// the identity (no node recorded).
    pub fn dropout(&self, a: Value, rate: f64, rng: &mut Rng) -> Result<Value> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Contract(format!("dropout rate {rate} outside [0,1)")));
        }
        if rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 - rate;
        let inv = 1.0 / keep;
        let (vals, shape) = self.with_values(a, |ta| {
            (ta.values().to_vec(), ta.shape().to_vec())
        });
        let scaled_mask: Vec<f64> = (0..vals.len())
            .map(|_| if rng.bernoulli(keep) { inv } else { 0.0 })
            .collect();
        let out: Vec<f64> = vals
            .iter()
            .zip(&scaled_mask)
            .map(|(&x, &m)| x * m)
            .collect();
        self.record(Op::Dropout { a, scaled_mask }, Tensor::from_vec(shape, out)?)
    }

    /// Look up embedding rows for a batch of token ids.
    pub fn embed(&self, table: Value, ids: &[u32]) -> Result<Value> {
        let (v, e) = self.dims2(table);
        if ids.is_empty() {
            return Err(Error::Contract("embed: empty id batch".into()));
        }
        for &id in ids {
            if id as usize >= v {
                return Err(Error::Data(format!(
                    "embed: id {id} out of vocabulary range {v}"
                )));
            }
        }
        let out = self.with_values(table, |tt| {
            let mut buf = vec![0.0; ids.len() * e];
            for (i, &id) in ids.iter().enumerate() {
                buf[i * e..(i + 1) * e]
                    .copy_from_slice(&tt.values()[id as usize * e..(id as usize + 1) * e]);
            }
            buf
        });
        self.record(
            Op::Embed {
                table,
                ids: ids.to_vec(),
            },
            Tensor::from_vec(vec![ids.len(), e], out)?,
        )
    }

    /// Pick one probability per row: out[i] = a[i, ids[i]].
    pub fn gather_per_row(&self, a: Value, ids: &[u32]) -> Result<Value> {
        let (m, n) = self.dims2(a);
        if ids.len() != m {
            return Err(Error::Shape(format!(
                "gather_per_row: {} ids for {m} rows",
                ids.len()
            )));
        }
        for &id in ids {
            if id as usize >= n {
                return Err(Error::Data(format!(
                    "gather_per_row: id {id} out of range {n}"
                )));
            }
        }
        let out = self.with_values(a, |ta| {
            ids.iter()
                .enumerate()
                .map(|(i, &id)| ta.values()[i * n + id as usize])
                .collect::<Vec<f64>>()
        });
        self.record(
            Op::GatherPerRow {
                a,
                ids: ids.to_vec(),
            },
            Tensor::from_vec(vec![m, 1], out)?,
        )
    }
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

pub(crate) mod kernels {
    pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &a[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (kk, &av) in arow.iter().enumerate() {
                if av != 0.0 {
                    let brow = &b[kk * n..(kk + 1) * n];
                    for (o, &bv) in orow.iter_mut().zip(brow) {
                        *o += av * bv;
                    }
                }
            }
        }
        out
    }

    /// a(m×k) · b(n×k)ᵀ
    pub fn matmul_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &a[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (j, o) in orow.iter_mut().enumerate() {
                let brow = &b[j * k..(j + 1) * k];
                *o = arow.iter().zip(brow).map(|(&x, &y)| x * y).sum();
            }
        }
        out
    }

    /// a(k×m)ᵀ · b(k×n)
    pub fn matmul_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for r in 0..k {
            let arow = &a[r * m..(r + 1) * m];
            let brow = &b[r * n..(r + 1) * n];
            for (i, &av) in arow.iter().enumerate() {
                if av != 0.0 {
                    let orow = &mut out[i * n..(i + 1) * n];
                    for (o, &bv) in orow.iter_mut().zip(brow) {
                        *o += av * bv;
                    }
                }
            }
        }
        out
    }

    pub fn sigmoid(x: f64) -> f64 {
        if x >= 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        }
    }

    /// In-place softmax with max subtraction.
    pub fn softmax_row(row: &mut [f64]) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }

    /// Softmax over entries with mask 1; masked entries become exactly 0.
    /// Err(()) when nothing is unmasked.
    pub fn softmax_row_masked(row: &mut [f64], mask: &[f64]) -> Result<(), ()> {
        let mut max = f64::NEG_INFINITY;
        for (v, &m) in row.iter().zip(mask) {
            if m != 0.0 && *v > max {
                max = *v;
            }
        }
        if max == f64::NEG_INFINITY {
            return Err(());
        }
        let mut sum = 0.0;
        for (v, &m) in row.iter_mut().zip(mask) {
            if m != 0.0 {
                *v = (*v - max).exp();
                sum += *v;
            } else {
                *v = 0.0;
            }
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
        Ok(())
    }
}
