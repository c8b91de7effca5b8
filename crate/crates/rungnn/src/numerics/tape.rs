//! Reverse-mode differentiation over tensor primitives.
//!
//! A [`Tape`] records every forward operation; [`Tape::backward`] replays the
//! record in exact reverse order and deposits parameter gradients into the
//! [`ParamStore`]. One tape serves one query encoding and is dropped (or
//! cleared) afterwards, which bounds memory to a single forward pass.

use std::rc::Rc;

use super::params::{ParamId, ParamStore};
use super::scalar::Scalar;
use super::tensor::Tensor;
use super::NumericsError;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueId(usize);

enum Op<T: Scalar> {
    Leaf,
    Matmul(ValueId, ValueId),
    /// A·Bᵀ
    MatmulNT(ValueId, ValueId),
    Add(ValueId, ValueId),
    Sub(ValueId, ValueId),
    Hadamard(ValueId, ValueId),
    /// matrix [m×n] + row [1×n], broadcast over rows
    AddRow(ValueId, ValueId),
    /// matrix [m×n] ⊙ column [m×1], broadcast over columns
    ScaleRows(ValueId, ValueId),
    ConcatCols(Vec<ValueId>),
    SliceCols(ValueId, usize, usize),
    Sigmoid(ValueId),
    Tanh(ValueId),
    Relu(ValueId),
    /// out[i] = a[idx[i]] (zero row where idx[i] is None)
    GatherRows(ValueId, Rc<Vec<Option<usize>>>),
    /// out[g] = Σ_{groups[e]=g} a[e], ascending e
    ScatterSumRows(ValueId, Rc<Vec<usize>>),
    /// within-group softmax over an [E×1] column
    ScatterSoftmax(ValueId, Rc<Vec<usize>>),
    /// log(Σ exp(a_i) + zero_count), max-stabilized
    LogSumExpWithZeros(ValueId, usize),
    SumAll(ValueId),
    ScaleConst(ValueId, T),
}

struct Node<T: Scalar> {
    value: Tensor<T>,
    op: Op<T>,
    param: Option<ParamId>,
}

/// Record of one forward computation, replayable in reverse.
pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    /// Number of recorded values.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drop every recorded node and its storage.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.nodes.shrink_to_fit();
    }

    pub fn value(&self, id: ValueId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, param: Option<ParamId>) -> ValueId {
        debug_assert!(
            value.all_finite(),
            "non-finite value produced by a forward operation"
        );
        self.nodes.push(Node { value, op, param });
        ValueId(self.nodes.len() - 1)
    }

    /// Record a constant: no gradient flows into it.
    pub fn leaf(&mut self, value: Tensor<T>) -> ValueId {
        self.push(value, Op::Leaf, None)
    }

    pub fn zeros(&mut self, rows: usize, cols: usize) -> ValueId {
        self.leaf(Tensor::zeros(rows, cols))
    }

    pub fn ones(&mut self, rows: usize, cols: usize) -> ValueId {
        self.leaf(Tensor::ones(rows, cols))
    }

    /// Record a trainable parameter; backward accumulates into its store slot.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> ValueId {
        self.push(store.value(id).clone(), Op::Leaf, Some(id))
    }

    fn check(&self, id: ValueId) -> Result<&Tensor<T>, NumericsError> {
        self.nodes
            .get(id.0)
            .map(|n| &n.value)
            .ok_or(NumericsError::DetachedValue)
    }

    pub fn matmul(&mut self, a: ValueId, b: ValueId) -> Result<ValueId, NumericsError> {
        let out = self.check(a)?.matmul(self.check(b)?)?;
        Ok(self.push(out, Op::Matmul(a, b), None))
    }

    /// A·Bᵀ: applies a weight matrix stored with output rows, as in x·Wᵀ.
    pub fn matmul_nt(&mut self, a: ValueId, b: ValueId) -> Result<ValueId, NumericsError> {
        let out = self.check(a)?.matmul_nt(self.check(b)?)?;
        Ok(self.push(out, Op::MatmulNT(a, b), None))
    }

    fn elementwise(
        &mut self,
        op_name: &'static str,
        a: ValueId,
        b: ValueId,
        f: impl Fn(T, T) -> T,
        op: Op<T>,
    ) -> Result<ValueId, NumericsError> {
        let ta = self.check(a)?;
        let tb = self.check(b)?;
        if ta.shape() != tb.shape() {
            return Err(NumericsError::ShapeMismatch {
                op: op_name,
                lhs: ta.shape(),
                rhs: tb.shape(),
            });
        }
        let (r, c) = ta.shape();
        let data = ta
            .data()
            .iter()
            .zip(tb.data().iter())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let out = Tensor::from_vec(r, c, data).expect("elementwise shape");
        Ok(self.push(out, op, None))
    }

    pub fn add(&mut self, a: ValueId, b: ValueId) -> Result<ValueId, NumericsError> {
        self.elementwise("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: ValueId, b: ValueId) -> Result<ValueId, NumericsError> {
        self.elementwise("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn hadamard(&mut self, a: ValueId, b: ValueId) -> Result<ValueId, NumericsError> {
        self.elementwise("hadamard", a, b, |x, y| x * y, Op::Hadamard(a, b))
    }

    pub fn add_row(&mut self, a: ValueId, row: ValueId) -> Result<ValueId, NumericsError> {
        let ta = self.check(a)?;
        let tr = self.check(row)?;
        if tr.rows() != 1 || tr.cols() != ta.cols() {
            return Err(NumericsError::ShapeMismatch {
                op: "add_row",
                lhs: ta.shape(),
                rhs: tr.shape(),
            });
        }
        let mut out = ta.clone();
        let bias = tr.data().to_vec();
        for i in 0..out.rows() {
            for (v, &b) in out.row_mut(i).iter_mut().zip(bias.iter()) {
                *v += b;
            }
        }
        Ok(self.push(out, Op::AddRow(a, row), None))
    }

    pub fn scale_rows(&mut self, a: ValueId, scale: ValueId) -> Result<ValueId, NumericsError> {
        let ta = self.check(a)?;
        let ts = self.check(scale)?;
        if ts.cols() != 1 || ts.rows() != ta.rows() {
            return Err(NumericsError::ShapeMismatch {
                op: "scale_rows",
                lhs: ta.shape(),
                rhs: ts.shape(),
            });
        }
        let mut out = ta.clone();
        for i in 0..out.rows() {
            let s = ts.get(i, 0);
            for v in out.row_mut(i) {
                *v *= s;
            }
        }
        Ok(self.push(out, Op::ScaleRows(a, scale), None))
    }

    pub fn concat_cols(&mut self, parts: &[ValueId]) -> Result<ValueId, NumericsError> {
        if parts.is_empty() {
            return Err(NumericsError::EmptyInput { op: "concat_cols" });
        }
        let rows = self.check(parts[0])?.rows();
        let mut cols = 0;
        for &p in parts {
            let t = self.check(p)?;
            if t.rows() != rows {
                return Err(NumericsError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: (rows, 0),
                    rhs: t.shape(),
                });
            }
            cols += t.cols();
        }
        let mut out = Tensor::zeros(rows, cols);
        let mut offset = 0;
        for &p in parts {
            let t = &self.nodes[p.0].value;
            let w = t.cols();
            for r in 0..rows {
                out.row_mut(r)[offset..offset + w].copy_from_slice(t.row(r));
            }
            offset += w;
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec()), None))
    }

    pub fn slice_cols(
        &mut self,
        a: ValueId,
        from: usize,
        to: usize,
    ) -> Result<ValueId, NumericsError> {
        let ta = self.check(a)?;
        if from > to || to > ta.cols() {
            return Err(NumericsError::BadSlice {
                from,
                to,
                cols: ta.cols(),
            });
        }
        let rows = ta.rows();
        let mut out = Tensor::zeros(rows, to - from);
        for r in 0..rows {
            out.row_mut(r).copy_from_slice(&ta.row(r)[from..to]);
        }
        Ok(self.push(out, Op::SliceCols(a, from, to), None))
    }

    fn unary(
        &mut self,
        a: ValueId,
        f: impl Fn(T) -> T,
        op: Op<T>,
    ) -> Result<ValueId, NumericsError> {
        let out = self.check(a)?.map(f);
        Ok(self.push(out, op, None))
    }

    pub fn sigmoid(&mut self, a: ValueId) -> Result<ValueId, NumericsError> {
        self.unary(a, |x| x.sigmoid(), Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: ValueId) -> Result<ValueId, NumericsError> {
        self.unary(a, |x| x.tanh(), Op::Tanh(a))
    }

    pub fn relu(&mut self, a: ValueId) -> Result<ValueId, NumericsError> {
        self.unary(a, |x| x.maximum(T::ZERO), Op::Relu(a))
    }

    /// Row gather; `None` entries read as a zero row and receive no gradient.
    pub fn gather_rows(
        &mut self,
        a: ValueId,
        indices: Rc<Vec<Option<usize>>>,
    ) -> Result<ValueId, NumericsError> {
        let ta = self.check(a)?;
        let cols = ta.cols();
        let mut out = Tensor::zeros(indices.len(), cols);
        for (i, idx) in indices.iter().enumerate() {
            if let Some(src) = idx {
                if *src >= ta.rows() {
                    return Err(NumericsError::IndexOutOfRange {
                        op: "gather_rows",
                        index: *src,
                        len: ta.rows(),
                    });
                }
                out.row_mut(i).copy_from_slice(ta.row(*src));
            }
        }
        Ok(self.push(out, Op::GatherRows(a, indices), None))
    }

    /// Broadcast a 1×d row to n×d.
    pub fn broadcast_row(&mut self, a: ValueId, n: usize) -> Result<ValueId, NumericsError> {
        let ta = self.check(a)?;
        if ta.rows() != 1 {
            return Err(NumericsError::ShapeMismatch {
                op: "broadcast_row",
                lhs: ta.shape(),
                rhs: (1, ta.cols()),
            });
        }
        self.gather_rows(a, Rc::new(vec![Some(0); n]))
    }

    /// Per-group vector sum with deterministic ascending accumulation order.
    pub fn scatter_sum_rows(
        &mut self,
        a: ValueId,
        groups: Rc<Vec<usize>>,
        num_groups: usize,
    ) -> Result<ValueId, NumericsError> {
        let ta = self.check(a)?;
        if groups.len() != ta.rows() {
            return Err(NumericsError::GroupCount {
                op: "scatter_sum_rows",
                expected: ta.rows(),
                got: groups.len(),
            });
        }
        let cols = ta.cols();
        let mut out = Tensor::zeros(num_groups, cols);
        for (e, &g) in groups.iter().enumerate() {
            if g >= num_groups {
                return Err(NumericsError::IndexOutOfRange {
                    op: "scatter_sum_rows",
                    index: g,
                    len: num_groups,
                });
            }
            let src = ta.row(e).to_vec();
            for (o, s) in out.row_mut(g).iter_mut().zip(src.iter()) {
                *o += *s;
            }
        }
        Ok(self.push(out, Op::ScatterSumRows(a, groups), None))
    }

    /// Softmax over an [E×1] column, normalized within each group, with
    /// per-group max subtraction for stability.
    pub fn scatter_softmax(
        &mut self,
        a: ValueId,
        groups: Rc<Vec<usize>>,
        num_groups: usize,
    ) -> Result<ValueId, NumericsError> {
        let ta = self.check(a)?;
        if ta.cols() != 1 {
            return Err(NumericsError::ShapeMismatch {
                op: "scatter_softmax",
                lhs: ta.shape(),
                rhs: (ta.rows(), 1),
            });
        }
        if groups.len() != ta.rows() {
            return Err(NumericsError::GroupCount {
                op: "scatter_softmax",
                expected: ta.rows(),
                got: groups.len(),
            });
        }
        let mut max_by_group: Vec<Option<T>> = vec![None; num_groups];
        for (e, &g) in groups.iter().enumerate() {
            if g >= num_groups {
                return Err(NumericsError::IndexOutOfRange {
                    op: "scatter_softmax",
                    index: g,
                    len: num_groups,
                });
            }
            let v = ta.get(e, 0);
            max_by_group[g] = Some(match max_by_group[g] {
                Some(m) => m.maximum(v),
                None => v,
            });
        }
        let mut denom = vec![T::ZERO; num_groups];
        let mut shifted = vec![T::ZERO; groups.len()];
        for (e, &g) in groups.iter().enumerate() {
            let m = max_by_group[g].expect("group max set above");
            let x = (ta.get(e, 0) - m).exp();
            shifted[e] = x;
            denom[g] += x;
        }
        let data: Vec<T> = groups
            .iter()
            .enumerate()
            .map(|(e, &g)| shifted[e] / denom[g])
            .collect();
        let out = Tensor::from_vec(groups.len(), 1, data).expect("softmax shape");
        Ok(self.push(out, Op::ScatterSoftmax(a, groups), None))
    }

    /// log(Σᵢ exp(aᵢ) + zero_count·exp(0)) over an [N×1] column: the
    /// normalizer over a full vocabulary where `zero_count` entities carry
    /// an implicit score of exactly zero.
    pub fn logsumexp_with_zeros(
        &mut self,
        a: ValueId,
        zero_count: usize,
    ) -> Result<ValueId, NumericsError> {
        let ta = self.check(a)?;
        if ta.cols() != 1 && !ta.is_empty() {
            return Err(NumericsError::ShapeMismatch {
                op: "logsumexp_with_zeros",
                lhs: ta.shape(),
                rhs: (ta.rows(), 1),
            });
        }
        if ta.is_empty() && zero_count == 0 {
            return Err(NumericsError::EmptyInput {
                op: "logsumexp_with_zeros",
            });
        }
        let m = lse_shift(ta, zero_count);
        let mut sum = T::from_f64(zero_count as f64) * (-m).exp();
        for &x in ta.data() {
            sum += (x - m).exp();
        }
        let out = Tensor::scalar(m + sum.ln());
        Ok(self.push(out, Op::LogSumExpWithZeros(a, zero_count), None))
    }

    pub fn sum_all(&mut self, a: ValueId) -> Result<ValueId, NumericsError> {
        let total = self.check(a)?.data().iter().copied().sum();
        Ok(self.push(Tensor::scalar(total), Op::SumAll(a), None))
    }

    pub fn scale_const(&mut self, a: ValueId, c: T) -> Result<ValueId, NumericsError> {
        let out = self.check(a)?.map(|x| x * c);
        Ok(self.push(out, Op::ScaleConst(a, c), None))
    }

    /// Reverse pass from a recorded scalar. Parameter gradients ACCUMULATE
    /// into the store; call [`ParamStore::zero_grads`] between batches.
    pub fn backward(
        &self,
        loss: ValueId,
        store: &mut ParamStore<T>,
    ) -> Result<(), NumericsError> {
        let grads = self.backward_grads(loss, store.len())?;
        for (i, g) in grads.into_iter().enumerate() {
            if let Some(g) = g {
                let slot = &mut store.get_mut(ParamId(i)).grad;
                for (a, &b) in slot.data_mut().iter_mut().zip(g.data().iter()) {
                    *a += b;
                }
            }
        }
        Ok(())
    }

    /// Reverse pass returning per-parameter gradients (indexed by
    /// [`ParamId`]) without touching any store, so parallel workers each
    /// compute their own and a coordinator merges them in a fixed order.
    pub fn backward_grads(
        &self,
        loss: ValueId,
        num_params: usize,
    ) -> Result<Vec<Option<Tensor<T>>>, NumericsError> {
        if loss.0 >= self.nodes.len() {
            return Err(NumericsError::DetachedValue);
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(NumericsError::NotScalar {
                shape: self.nodes[loss.0].value.shape(),
            });
        }
        let mut param_grads: Vec<Option<Tensor<T>>> = (0..num_params).map(|_| None).collect();
        let mut grads: Vec<Option<Tensor<T>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(T::ONE));

        for idx in (0..=loss.0).rev() {
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            if let Some(pid) = node.param {
                debug_assert!(matches!(node.op, Op::Leaf), "param on non-leaf node");
                acc(&mut param_grads, pid.index(), grad.clone());
            }
            match &node.op {
                Op::Leaf => {}
                Op::Matmul(a, b) => {
                    let ga = grad.matmul_nt(&self.nodes[b.0].value).expect("dA shape");
                    let gb = self.nodes[a.0].value.matmul_tn(&grad).expect("dB shape");
                    acc(&mut grads, a.0, ga);
                    acc(&mut grads, b.0, gb);
                }
                Op::MatmulNT(a, b) => {
                    // C = A·Bᵀ ⟹ dA = dC·B, dB = dCᵀ·A
                    let ga = grad.matmul(&self.nodes[b.0].value).expect("dA shape");
                    let gb = grad.matmul_tn(&self.nodes[a.0].value).expect("dB shape");
                    acc(&mut grads, a.0, ga);
                    acc(&mut grads, b.0, gb);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, a.0, grad.clone());
                    acc(&mut grads, b.0, grad);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, a.0, grad.clone());
                    acc(&mut grads, b.0, grad.map(|x| -x));
                }
                Op::Hadamard(a, b) => {
                    let ga = mul_elem(&grad, &self.nodes[b.0].value);
                    let gb = mul_elem(&grad, &self.nodes[a.0].value);
                    acc(&mut grads, a.0, ga);
                    acc(&mut grads, b.0, gb);
                }
                Op::AddRow(a, row) => {
                    let mut grow = Tensor::zeros(1, grad.cols());
                    for r in 0..grad.rows() {
                        for (g, &d) in grow.row_mut(0).iter_mut().zip(grad.row(r).iter()) {
                            *g += d;
                        }
                    }
                    acc(&mut grads, a.0, grad);
                    acc(&mut grads, row.0, grow);
                }
                Op::ScaleRows(a, scale) => {
                    let ts = &self.nodes[scale.0].value;
                    let ta = &self.nodes[a.0].value;
                    let mut ga = grad.clone();
                    let mut gs = Tensor::zeros(ts.rows(), 1);
                    for i in 0..grad.rows() {
                        let s = ts.get(i, 0);
                        let mut dot = T::ZERO;
                        for (g, &x) in ga.row_mut(i).iter_mut().zip(ta.row(i).iter()) {
                            dot += *g * x;
                            *g *= s;
                        }
                        gs.set(i, 0, dot);
                    }
                    acc(&mut grads, a.0, ga);
                    acc(&mut grads, scale.0, gs);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.nodes[p.0].value.cols();
                        let mut gp = Tensor::zeros(grad.rows(), w);
                        for r in 0..grad.rows() {
                            gp.row_mut(r).copy_from_slice(&grad.row(r)[offset..offset + w]);
                        }
                        acc(&mut grads, p.0, gp);
                        offset += w;
                    }
                }
                Op::SliceCols(a, from, _to) => {
                    let ta = &self.nodes[a.0].value;
                    let mut ga = Tensor::zeros(ta.rows(), ta.cols());
                    for r in 0..grad.rows() {
                        ga.row_mut(r)[*from..*from + grad.cols()].copy_from_slice(grad.row(r));
                    }
                    acc(&mut grads, a.0, ga);
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let ga = zip_map(&grad, y, |d, s| d * s * (T::ONE - s));
                    acc(&mut grads, a.0, ga);
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let ga = zip_map(&grad, y, |d, t| d * (T::ONE - t * t));
                    acc(&mut grads, a.0, ga);
                }
                Op::Relu(a) => {
                    let x = &self.nodes[a.0].value;
                    let ga = zip_map(&grad, x, |d, v| if v > T::ZERO { d } else { T::ZERO });
                    acc(&mut grads, a.0, ga);
                }
                Op::GatherRows(a, indices) => {
                    let ta = &self.nodes[a.0].value;
                    let mut ga = Tensor::zeros(ta.rows(), ta.cols());
                    for (i, idx) in indices.iter().enumerate() {
                        if let Some(src) = idx {
                            for (g, &d) in ga.row_mut(*src).iter_mut().zip(grad.row(i).iter()) {
                                *g += d;
                            }
                        }
                    }
                    acc(&mut grads, a.0, ga);
                }
                Op::ScatterSumRows(a, groups) => {
                    let mut ga = Tensor::zeros(groups.len(), grad.cols());
                    for (e, &g) in groups.iter().enumerate() {
                        ga.row_mut(e).copy_from_slice(grad.row(g));
                    }
                    acc(&mut grads, a.0, ga);
                }
                Op::ScatterSoftmax(a, groups) => {
                    let y = &node.value;
                    let num_groups = groups.iter().copied().max().map_or(0, |g| g + 1);
                    let mut inner = vec![T::ZERO; num_groups];
                    for (e, &g) in groups.iter().enumerate() {
                        inner[g] += grad.get(e, 0) * y.get(e, 0);
                    }
                    let mut ga = Tensor::zeros(groups.len(), 1);
                    for (e, &g) in groups.iter().enumerate() {
                        let v = y.get(e, 0) * (grad.get(e, 0) - inner[g]);
                        ga.set(e, 0, v);
                    }
                    acc(&mut grads, a.0, ga);
                }
                Op::LogSumExpWithZeros(a, zero_count) => {
                    let ta = &self.nodes[a.0].value;
                    let m = lse_shift(ta, *zero_count);
                    let mut denom = T::from_f64(*zero_count as f64) * (-m).exp();
                    for &x in ta.data() {
                        denom += (x - m).exp();
                    }
                    let d = grad.item();
                    let mut ga = Tensor::zeros(ta.rows(), 1);
                    for (i, &x) in ta.data().iter().enumerate() {
                        ga.set(i, 0, d * (x - m).exp() / denom);
                    }
                    acc(&mut grads, a.0, ga);
                }
                Op::SumAll(a) => {
                    let ta = &self.nodes[a.0].value;
                    let d = grad.item();
                    acc(&mut grads, a.0, Tensor::zeros(ta.rows(), ta.cols()).map(|_| d));
                }
                Op::ScaleConst(a, c) => {
                    acc(&mut grads, a.0, grad.map(|x| x * *c));
                }
            }
            // grad storage for this node frees here as we walk back.
        }
        Ok(param_grads)
    }
}

/// Shift used by the stabilized log-sum-exp: max over the scores and, when
/// implicit zeros participate, zero itself.
fn lse_shift<T: Scalar>(t: &Tensor<T>, zero_count: usize) -> T {
    let mut m: Option<T> = if zero_count > 0 { Some(T::ZERO) } else { None };
    for &x in t.data() {
        m = Some(match m {
            Some(cur) => cur.maximum(x),
            None => x,
        });
    }
    m.expect("logsumexp over empty support")
}

fn acc<T: Scalar>(grads: &mut [Option<Tensor<T>>], idx: usize, delta: Tensor<T>) {
    match &mut grads[idx] {
        Some(g) => {
            for (a, &b) in g.data_mut().iter_mut().zip(delta.data().iter()) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(delta),
    }
}

fn mul_elem<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    zip_map(a, b, |x, y| x * y)
}

fn zip_map<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::from_vec(a.rows(), a.cols(), data).expect("zip shape")
}
