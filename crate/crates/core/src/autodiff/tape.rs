//! Recording tape for reverse-mode differentiation over dense matrices.
//!
//! Every forward operation evaluates eagerly, stores its result on the
//! tape together with the handles of its inputs, and returns a [`Var`].
//! [`Tape::backward`] then walks the tape once in reverse, accumulating
//! adjoints into every node that depends on a trainable leaf.
//!
//! Hard selections (`gather_rows`, `topk_per_column`) record the chosen
//! indices. During the backward pass those indices are constants: the
//! gradient flows to the selected entries and every other entry gets zero.

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRowBroadcast(Var, Var),
    Hadamard(Var, Var),
    BroadcastMulCol(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Affine(Var, f64),
    ScaleBy(Var, Var),
    Transpose(Var),
    ConcatRows(Vec<Var>),
    GatherRows(Var, Vec<usize>),
    TopkPerColumn(Var, Vec<Vec<usize>>),
    Sum(Var),
    MaskedSoftmaxRows(Var, Vec<bool>),
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `var`, or `None` if `var` does
    /// not depend on any trainable leaf or does not influence the loss.
    pub fn get(&self, var: Var) -> Option<&Matrix> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, var: Var) -> Option<Matrix> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, var: Var) -> &Matrix {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> (usize, usize) {
        self.nodes[var.0].value.shape()
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    /// A trainable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A non-trainable leaf.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Every index list chosen by a selection op so far, in recording order.
    ///
    /// Two evaluations with equal signatures took the same branch through
    /// every hard selection.
    pub fn selection_signature(&self) -> Vec<Vec<usize>> {
        let mut sig = Vec::new();
        for node in &self.nodes {
            match &node.op {
                Op::GatherRows(_, idx) => sig.push(idx.clone()),
                Op::TopkPerColumn(_, cols) => sig.extend(cols.iter().cloned()),
                _ => {}
            }
        }
        sig
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn unary(&mut self, a: Var, value: Matrix, op: Op) -> Var {
        let rg = self.requires_grad(a);
        self.push(value, op, rg)
    }

    fn binary(&mut self, a: Var, b: Var, value: Matrix, op: Op) -> Var {
        let rg = self.requires_grad(a) || self.requires_grad(b);
        self.push(value, op, rg)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.binary(a, b, value, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), "add", |x, y| x + y)?;
        Ok(self.binary(a, b, value, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), "sub", |x, y| x - y)?;
        Ok(self.binary(a, b, value, Op::Sub(a, b)))
    }

    /// Adds the `1×c` row `bias` to every row of the `m×c` matrix `a`.
    pub fn add_row_broadcast(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (m, c) = self.shape(a);
        let bs = self.shape(bias);
        if bs != (1, c) {
            return Err(Error::ShapeMismatch {
                op: "add_row_broadcast",
                left: (m, c),
                right: bs,
            });
        }
        let av = self.value(a);
        let bv = self.value(bias);
        let value = Matrix::from_fn(m, c, |i, j| av.get(i, j) + bv.get(0, j));
        Ok(self.binary(a, bias, value, Op::AddRowBroadcast(a, bias)))
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self
            .value(a)
            .zip_map(self.value(b), "hadamard", |x, y| x * y)?;
        Ok(self.binary(a, b, value, Op::Hadamard(a, b)))
    }

    /// Scales row `i` of the `m×c` matrix `a` by entry `i` of the `m×1` column `s`.
    pub fn broadcast_mul(&mut self, a: Var, s: Var) -> Result<Var> {
        let (m, c) = self.shape(a);
        let ss = self.shape(s);
        if ss != (m, 1) {
            return Err(Error::ShapeMismatch {
                op: "broadcast_mul",
                left: (m, c),
                right: ss,
            });
        }
        let av = self.value(a);
        let sv = self.value(s);
        let value = Matrix::from_fn(m, c, |i, j| av.get(i, j) * sv.get(i, 0));
        Ok(self.binary(a, s, value, Op::BroadcastMulCol(a, s)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        self.unary(a, value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        self.unary(a, value, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        // NaN must survive so that divergence stays visible
        let value = self.value(a).map(|x| if x < 0.0 { 0.0 } else { x });
        self.unary(a, value, Op::Relu(a))
    }

    /// `alpha * a + beta`, elementwise.
    pub fn affine(&mut self, a: Var, alpha: f64, beta: f64) -> Var {
        let value = self.value(a).map(|x| alpha * x + beta);
        self.unary(a, value, Op::Affine(a, alpha))
    }

    /// Multiplies every entry of `a` by the `1×1` value `s`.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var> {
        let ss = self.shape(s);
        if ss != (1, 1) {
            return Err(Error::ShapeMismatch {
                op: "scale_by",
                left: self.shape(a),
                right: ss,
            });
        }
        let k = self.value(s).item();
        let value = self.value(a).scale(k);
        Ok(self.binary(a, s, value, Op::ScaleBy(a, s)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        self.unary(a, value, Op::Transpose(a))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(&first) = parts.first() else {
            return Err(Error::ShapeMismatch {
                op: "concat_rows",
                left: (0, 0),
                right: (0, 0),
            });
        };
        let cols = self.shape(first).1;
        let mut data = Vec::new();
        let mut rows = 0;
        let mut rg = false;
        for &p in parts {
            let v = self.value(p);
            if v.cols() != cols {
                return Err(Error::ShapeMismatch {
                    op: "concat_rows",
                    left: self.shape(first),
                    right: v.shape(),
                });
            }
            rows += v.rows();
            data.extend_from_slice(v.data());
            rg |= self.requires_grad(p);
        }
        let value = Matrix::from_vec(rows, cols, data)?;
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), rg))
    }

    /// Rows of `a` at `idx`, in the given order.
    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let (m, c) = self.shape(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= m) {
            return Err(Error::ShapeMismatch {
                op: "gather_rows",
                left: (m, c),
                right: (bad, 0),
            });
        }
        let value = self.value(a).select_rows(idx);
        Ok(self.unary(a, value, Op::GatherRows(a, idx.to_vec())))
    }

    /// Per column, the `k` largest entries in descending order (ties go to
    /// the lower row index). Columns with fewer than `k` rows are padded
    /// with zeros below the selected values.
    pub fn topk_per_column(&mut self, a: Var, k: usize) -> Var {
        let av = self.value(a);
        let (m, c) = av.shape();
        let mut out = Matrix::zeros(k, c);
        let mut selected = Vec::with_capacity(c);
        for j in 0..c {
            let idx = top_indices(&av.column(j), k.min(m));
            for (r, &i) in idx.iter().enumerate() {
                out.set(r, j, av.get(i, j));
            }
            selected.push(idx);
        }
        self.unary(a, out, Op::TopkPerColumn(a, selected))
    }

    /// Sum of all entries, as a `1×1` value.
    pub fn sum(&mut self, a: Var) -> Var {
        let value = Matrix::scalar(self.value(a).sum());
        self.unary(a, value, Op::Sum(a))
    }

    /// Row-wise softmax restricted to columns where `mask` is true; masked-out
    /// columns are exactly zero. A row with no unmasked column is all zeros.
    pub fn masked_softmax_rows(&mut self, a: Var, mask: &[bool]) -> Result<Var> {
        let (m, c) = self.shape(a);
        if mask.len() != c {
            return Err(Error::ShapeMismatch {
                op: "masked_softmax_rows",
                left: (m, c),
                right: (1, mask.len()),
            });
        }
        let av = self.value(a);
        let mut out = Matrix::zeros(m, c);
        for i in 0..m {
            let row = av.row(i);
            let max = row
                .iter()
                .zip(mask)
                .filter(|(_, &keep)| keep)
                .map(|(&x, _)| x)
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                continue;
            }
            let mut total = 0.0;
            for j in 0..c {
                if mask[j] {
                    let e = (row[j] - max).exp();
                    out.set(i, j, e);
                    total += e;
                }
            }
            for j in 0..c {
                out.set(i, j, out.get(i, j) / total);
            }
        }
        Ok(self.unary(a, out, Op::MaskedSoftmaxRows(a, mask.to_vec())))
    }

    /// Reverse pass from a `1×1` loss.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(Error::NonScalarLoss(shape));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Matrix::scalar(1.0));

        for id in (0..=loss.0).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[id].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads)?;
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        let mut send = |var: Var, delta: Matrix| -> Result<()> {
            if !self.nodes[var.0].requires_grad {
                return Ok(());
            }
            match &mut grads[var.0] {
                Some(acc) => acc.add_assign(&delta),
                slot @ None => {
                    *slot = Some(delta);
                    Ok(())
                }
            }
        };
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                if self.requires_grad(*a) {
                    send(*a, g.matmul(&bv.transpose())?)?;
                }
                if self.requires_grad(*b) {
                    send(*b, av.transpose().matmul(g)?)?;
                }
            }
            Op::Add(a, b) => {
                send(*a, g.clone())?;
                send(*b, g.clone())?;
            }
            Op::Sub(a, b) => {
                send(*a, g.clone())?;
                send(*b, g.scale(-1.0))?;
            }
            Op::AddRowBroadcast(a, bias) => {
                send(*a, g.clone())?;
                let col_sums =
                    Matrix::from_fn(1, g.cols(), |_, j| (0..g.rows()).map(|i| g.get(i, j)).sum());
                send(*bias, col_sums)?;
            }
            Op::Hadamard(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                send(*a, g.zip_map(bv, "hadamard", |x, y| x * y)?)?;
                send(*b, g.zip_map(av, "hadamard", |x, y| x * y)?)?;
            }
            Op::BroadcastMulCol(a, s) => {
                let av = self.value(*a);
                let sv = self.value(*s);
                let da = Matrix::from_fn(g.rows(), g.cols(), |i, j| g.get(i, j) * sv.get(i, 0));
                let ds = Matrix::from_fn(g.rows(), 1, |i, _| {
                    (0..g.cols()).map(|j| g.get(i, j) * av.get(i, j)).sum()
                });
                send(*a, da)?;
                send(*s, ds)?;
            }
            Op::Sigmoid(a) => send(*a, g.zip_map(y, "sigmoid", |d, s| d * s * (1.0 - s))?)?,
            Op::Tanh(a) => send(*a, g.zip_map(y, "tanh", |d, t| d * (1.0 - t * t))?)?,
            Op::Relu(a) => {
                let x = self.value(*a);
                send(
                    *a,
                    g.zip_map(x, "relu", |d, x| if x > 0.0 { d } else { 0.0 })?,
                )?;
            }
            Op::Affine(a, alpha) => send(*a, g.scale(*alpha))?,
            Op::ScaleBy(a, s) => {
                let k = self.value(*s).item();
                let av = self.value(*a);
                send(*a, g.scale(k))?;
                let ds = g.zip_map(av, "scale_by", |d, x| d * x)?.sum();
                send(*s, Matrix::scalar(ds))?;
            }
            Op::Transpose(a) => send(*a, g.transpose())?,
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let rows = self.shape(p).0;
                    let idx: Vec<usize> = (offset..offset + rows).collect();
                    send(p, g.select_rows(&idx))?;
                    offset += rows;
                }
            }
            Op::GatherRows(a, idx) => {
                let (m, c) = self.shape(*a);
                let mut da = Matrix::zeros(m, c);
                for (r, &i) in idx.iter().enumerate() {
                    for j in 0..c {
                        da.set(i, j, da.get(i, j) + g.get(r, j));
                    }
                }
                send(*a, da)?;
            }
            Op::TopkPerColumn(a, selected) => {
                let (m, c) = self.shape(*a);
                let mut da = Matrix::zeros(m, c);
                for (j, idx) in selected.iter().enumerate() {
                    for (r, &i) in idx.iter().enumerate() {
                        da.set(i, j, da.get(i, j) + g.get(r, j));
                    }
                }
                send(*a, da)?;
            }
            Op::Sum(a) => {
                let (m, c) = self.shape(*a);
                send(*a, Matrix::filled(m, c, g.item()))?;
            }
            Op::MaskedSoftmaxRows(a, mask) => {
                let mut da = Matrix::zeros(y.rows(), y.cols());
                for i in 0..y.rows() {
                    let dot: f64 = (0..y.cols()).map(|j| y.get(i, j) * g.get(i, j)).sum();
                    for (j, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                        da.set(i, j, y.get(i, j) * (g.get(i, j) - dot));
                    }
                }
                send(*a, da)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Indices of the `k` largest values, in descending value order; ties go to
/// the lower index.
pub fn top_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_and_tanh_at_zero() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::scalar(0.0));
        let s = t.sigmoid(x);
        let h = t.tanh(x);
        assert_eq!(t.value(s).item(), 0.5);
        assert_eq!(t.value(h).item(), 0.0);
    }

    #[test]
    fn topk_per_column_sorts_descending() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::from_rows(&[[0.9], [0.2], [0.5]]));
        let y = t.topk_per_column(x, 2);
        assert_eq!(t.value(y), &Matrix::from_rows(&[[0.9], [0.5]]));
    }

    #[test]
    fn topk_pads_with_zeros() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::from_rows(&[[-0.3, 0.7]]));
        let y = t.topk_per_column(x, 3);
        assert_eq!(
            t.value(y),
            &Matrix::from_rows(&[[-0.3, 0.7], [0.0, 0.0], [0.0, 0.0]])
        );
    }

    #[test]
    fn top_indices_breaks_ties_by_lower_index() {
        assert_eq!(top_indices(&[0.5, 0.7, 0.5, 0.7], 3), vec![1, 3, 0]);
    }

    #[test]
    fn gradient_of_sum_is_ones() {
        let mut t = Tape::new();
        let w = t.param(Matrix::from_rows(&[[1.0, -2.0], [3.0, 4.0]]));
        let loss = t.sum(w);
        let g = t.backward(loss).unwrap();
        assert_eq!(g.get(w).unwrap(), &Matrix::filled(2, 2, 1.0));
    }

    #[test]
    fn gradient_of_sum_tanh_at_zero_is_ones() {
        let mut t = Tape::new();
        let w = t.param(Matrix::zeros(2, 3));
        let h = t.tanh(w);
        let loss = t.sum(h);
        let g = t.backward(loss).unwrap();
        assert_eq!(g.get(w).unwrap(), &Matrix::filled(2, 3, 1.0));
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut t = Tape::new();
        let w = t.param(Matrix::zeros(2, 1));
        assert!(matches!(t.backward(w), Err(Error::NonScalarLoss((2, 1)))));
    }

    #[test]
    fn topk_routes_gradient_to_selected_entries_only() {
        let mut t = Tape::new();
        let w = t.param(Matrix::from_rows(&[[0.9], [0.2], [0.5]]));
        let y = t.topk_per_column(w, 2);
        let loss = t.sum(y);
        let g = t.backward(loss).unwrap();
        assert_eq!(
            g.get(w).unwrap(),
            &Matrix::from_rows(&[[1.0], [0.0], [1.0]])
        );
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut t = Tape::new();
        let c = t.constant(Matrix::filled(1, 1, 2.0));
        let w = t.param(Matrix::filled(1, 1, 3.0));
        let p = t.hadamard(c, w).unwrap();
        let g = t.backward(p).unwrap();
        assert!(g.get(c).is_none());
        assert_eq!(g.get(w).unwrap().item(), 2.0);
    }

    #[test]
    fn masked_softmax_zeroes_masked_columns() {
        let mut t = Tape::new();
        let x = t.constant(Matrix::from_rows(&[[std::f64::consts::LN_2, 0.0, 5.0]]));
        let y = t.masked_softmax_rows(x, &[true, true, false]).unwrap();
        let v = t.value(y);
        assert!((v.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((v.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(v.get(0, 2), 0.0);
    }
}
