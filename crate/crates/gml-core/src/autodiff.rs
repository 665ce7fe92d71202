//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A `Tape` records primitive matrix operations eagerly (each node caches
//! its forward value as soon as it is recorded), then `backward` walks the
//! nodes in reverse to accumulate gradients for every parameter. The op set
//! is exactly what the models in this crate need; no broadcasting beyond
//! bias rows, no higher-order derivatives.
//!
//! `grad_check` re-executes the recorded program under central-difference
//! perturbations, which is the oracle every op's backward rule is tested
//! against.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::matrix::Matrix;

/// Floor for probabilities inside the cross-entropy loss.
const CE_PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Linear,
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Tanh,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + libm::exp(-x)),
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative given the input x and the cached output y.
    /// relu takes subgradient 0 at x = 0.
    fn derivative(&self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Handle to a node on a tape. Only valid for the tape that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Parameter,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// x (n x d) plus a bias row (1 x d) broadcast over all rows.
    AddBiasRow(NodeId, NodeId),
    ConcatCols(Vec<NodeId>),
    RowMeanPool(NodeId),
    Activation(Activation, NodeId),
    SoftmaxRows(NodeId),
    MseLoss(NodeId, NodeId),
    /// Cross-entropy of row-wise class probabilities against a target
    /// distribution of the same shape; probabilities are floored at 1e-12
    /// inside the log.
    CrossEntropyLoss(NodeId, NodeId),
    /// alpha * x + y
    ScaleAdd(f64, NodeId, NodeId),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Constant => "Constant",
            Op::Parameter => "Parameter",
            Op::MatMul(..) => "MatMul",
            Op::Add(..) => "Add",
            Op::AddBiasRow(..) => "AddBiasRow",
            Op::ConcatCols(..) => "ConcatCols",
            Op::RowMeanPool(..) => "RowMeanPool",
            Op::Activation(..) => "Activation",
            Op::SoftmaxRows(..) => "SoftmaxRows",
            Op::MseLoss(..) => "MseLoss",
            Op::CrossEntropyLoss(..) => "CrossEntropyLoss",
            Op::ScaleAdd(..) => "ScaleAdd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TapeError {
    ShapeMismatch { op: &'static str, detail: String },
    NonFinite { op: &'static str },
    NonScalarLoss { rows: usize, cols: usize },
}

impl core::fmt::Display for TapeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TapeError::ShapeMismatch { op, detail } => {
                write!(f, "{op}: shape mismatch: {detail}")
            }
            TapeError::NonFinite { op } => {
                write!(f, "{op}: forward value contains NaN or Inf")
            }
            TapeError::NonScalarLoss { rows, cols } => {
                write!(f, "loss node must be 1x1, got {rows}x{cols}")
            }
        }
    }
}

struct Node {
    op: Op,
    value: Matrix,
    grad: Matrix,
}

/// A recorded computation over matrices.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<NodeId>,
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    /// Gradient accumulated in the last `backward` pass.
    pub fn grad(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].grad
    }

    pub fn param_ids(&self) -> &[NodeId] {
        &self.params
    }

    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Constant, value)
    }

    pub fn parameter(&mut self, value: Matrix) -> NodeId {
        let id = self.push(Op::Parameter, value);
        self.params.push(id);
        id
    }

    /// Overwrite a leaf's value (used between training steps so the tape
    /// layout can be rebuilt cheaply, and by grad_check's perturbations).
    pub fn set_leaf_value(&mut self, id: NodeId, value: Matrix) {
        let node = &mut self.nodes[id.0];
        debug_assert!(matches!(node.op, Op::Constant | Op::Parameter));
        debug_assert!(node.value.same_shape(&value));
        node.value = value;
    }

    fn push(&mut self, op: Op, value: Matrix) -> NodeId {
        let grad = Matrix::zeros(value.rows(), value.cols());
        self.nodes.push(Node { op, value, grad });
        NodeId(self.nodes.len() - 1)
    }

    fn check(&self, id: NodeId) -> &Matrix {
        assert!(id.0 < self.nodes.len(), "node id from another tape");
        &self.nodes[id.0].value
    }

    fn record(&mut self, op: Op) -> Result<NodeId, TapeError> {
        let value = self.compute(&op)?;
        if !value.all_finite() {
            return Err(TapeError::NonFinite { op: op.name() });
        }
        Ok(self.push(op, value))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TapeError> {
        self.record(Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TapeError> {
        self.record(Op::Add(a, b))
    }

    pub fn add_bias_row(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId, TapeError> {
        self.record(Op::AddBiasRow(x, bias))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, TapeError> {
        self.record(Op::ConcatCols(parts.to_vec()))
    }

    pub fn row_mean_pool(&mut self, x: NodeId) -> Result<NodeId, TapeError> {
        self.record(Op::RowMeanPool(x))
    }

    pub fn activation(&mut self, act: Activation, x: NodeId) -> Result<NodeId, TapeError> {
        self.record(Op::Activation(act, x))
    }

    pub fn softmax_rows(&mut self, x: NodeId) -> Result<NodeId, TapeError> {
        self.record(Op::SoftmaxRows(x))
    }

    pub fn mse_loss(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId, TapeError> {
        self.record(Op::MseLoss(pred, target))
    }

    pub fn cross_entropy_loss(
        &mut self,
        probs: NodeId,
        target: NodeId,
    ) -> Result<NodeId, TapeError> {
        self.record(Op::CrossEntropyLoss(probs, target))
    }

    pub fn scale_add(&mut self, alpha: f64, x: NodeId, y: NodeId) -> Result<NodeId, TapeError> {
        self.record(Op::ScaleAdd(alpha, x, y))
    }

    fn compute(&self, op: &Op) -> Result<Matrix, TapeError> {
        let mismatch = |detail: String| TapeError::ShapeMismatch {
            op: op.name(),
            detail,
        };
        match op {
            Op::Constant | Op::Parameter => unreachable!("leaves carry their value"),
            Op::MatMul(a, b) => {
                let (a, b) = (self.check(*a), self.check(*b));
                if a.cols() != b.rows() {
                    return Err(mismatch(format!(
                        "{}x{} * {}x{}",
                        a.rows(),
                        a.cols(),
                        b.rows(),
                        b.cols()
                    )));
                }
                Ok(a.matmul(b))
            }
            Op::Add(a, b) => {
                let (a, b) = (self.check(*a), self.check(*b));
                if !a.same_shape(b) {
                    return Err(mismatch(format!(
                        "{}x{} + {}x{}",
                        a.rows(),
                        a.cols(),
                        b.rows(),
                        b.cols()
                    )));
                }
                Ok(a.add(b))
            }
            Op::AddBiasRow(x, bias) => {
                let (x, bias) = (self.check(*x), self.check(*bias));
                if bias.rows() != 1 || bias.cols() != x.cols() {
                    return Err(mismatch(format!(
                        "bias {}x{} against {}x{}",
                        bias.rows(),
                        bias.cols(),
                        x.rows(),
                        x.cols()
                    )));
                }
                let mut out = x.clone();
                for i in 0..out.rows() {
                    for (o, b) in out.row_mut(i).iter_mut().zip(bias.row(0)) {
                        *o += *b;
                    }
                }
                Ok(out)
            }
            Op::ConcatCols(parts) => {
                if parts.is_empty() {
                    return Err(mismatch("no inputs".into()));
                }
                let rows = self.check(parts[0]).rows();
                let mut cols = 0;
                for &p in parts {
                    let m = self.check(p);
                    if m.rows() != rows {
                        return Err(mismatch(format!(
                            "row counts differ: {} vs {}",
                            rows,
                            m.rows()
                        )));
                    }
                    cols += m.cols();
                }
                let mut out = Matrix::zeros(rows, cols);
                for i in 0..rows {
                    let orow = out.row_mut(i);
                    let mut offset = 0;
                    for &p in parts {
                        let m = self.check(p);
                        orow[offset..offset + m.cols()].copy_from_slice(m.row(i));
                        offset += m.cols();
                    }
                }
                Ok(out)
            }
            Op::RowMeanPool(x) => {
                let x = self.check(*x);
                let mut out = Matrix::zeros(1, x.cols());
                for i in 0..x.rows() {
                    for (o, v) in out.row_mut(0).iter_mut().zip(x.row(i)) {
                        *o += *v;
                    }
                }
                let inv = 1.0 / x.rows() as f64;
                Ok(out.scale(inv))
            }
            Op::Activation(act, x) => Ok(self.check(*x).map(|v| act.apply(v))),
            Op::SoftmaxRows(x) => {
                let x = self.check(*x);
                let mut out = Matrix::zeros(x.rows(), x.cols());
                for i in 0..x.rows() {
                    let row = x.row(i);
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let orow = out.row_mut(i);
                    let mut sum = 0.0;
                    for (o, &v) in orow.iter_mut().zip(row) {
                        *o = libm::exp(v - max);
                        sum += *o;
                    }
                    for o in orow.iter_mut() {
                        *o /= sum;
                    }
                }
                Ok(out)
            }
            Op::MseLoss(pred, target) => {
                let (p, t) = (self.check(*pred), self.check(*target));
                if !p.same_shape(t) {
                    return Err(mismatch(format!(
                        "{}x{} vs {}x{}",
                        p.rows(),
                        p.cols(),
                        t.rows(),
                        t.cols()
                    )));
                }
                let count = (p.rows() * p.cols()) as f64;
                let sum: f64 = p
                    .data()
                    .iter()
                    .zip(t.data())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                Ok(Matrix::from_vec(1, 1, alloc::vec![sum / count]))
            }
            Op::CrossEntropyLoss(probs, target) => {
                let (p, t) = (self.check(*probs), self.check(*target));
                if !p.same_shape(t) {
                    return Err(mismatch(format!(
                        "{}x{} vs {}x{}",
                        p.rows(),
                        p.cols(),
                        t.rows(),
                        t.cols()
                    )));
                }
                let mut sum = 0.0;
                for (pv, tv) in p.data().iter().zip(t.data()) {
                    if *tv != 0.0 {
                        sum -= tv * libm::log(pv.max(CE_PROB_FLOOR));
                    }
                }
                Ok(Matrix::from_vec(1, 1, alloc::vec![sum / p.rows() as f64]))
            }
            Op::ScaleAdd(_, x, y) => {
                let (xm, ym) = (self.check(*x), self.check(*y));
                if !xm.same_shape(ym) {
                    return Err(mismatch(format!(
                        "{}x{} vs {}x{}",
                        xm.rows(),
                        xm.cols(),
                        ym.rows(),
                        ym.cols()
                    )));
                }
                let Op::ScaleAdd(alpha, ..) = op else { unreachable!() };
                let mut out = ym.clone();
                out.add_scaled_assign(xm, *alpha);
                Ok(out)
            }
        }
    }

    /// Reverse accumulation from a scalar loss node. Returns the gradient
    /// for every parameter node, in registration order.
    pub fn backward(&mut self, loss: NodeId) -> Result<Vec<Matrix>, TapeError> {
        let lv = self.check(loss);
        if !lv.is_scalar() {
            return Err(TapeError::NonScalarLoss {
                rows: lv.rows(),
                cols: lv.cols(),
            });
        }
        for node in self.nodes.iter_mut() {
            node.grad.fill(0.0);
        }
        self.nodes[loss.0].grad[(0, 0)] = 1.0;

        for k in (0..=loss.0).rev() {
            // split borrow: clone the (small) grad of the node being expanded
            let g = self.nodes[k].grad.clone();
            match self.nodes[k].op.clone() {
                Op::Constant | Op::Parameter => {}
                Op::MatMul(a, b) => {
                    let da = g.matmul(&self.nodes[b.0].value.transpose());
                    let db = self.nodes[a.0].value.transpose().matmul(&g);
                    self.nodes[a.0].grad.add_assign(&da);
                    self.nodes[b.0].grad.add_assign(&db);
                }
                Op::Add(a, b) => {
                    self.nodes[a.0].grad.add_assign(&g);
                    self.nodes[b.0].grad.add_assign(&g);
                }
                Op::AddBiasRow(x, bias) => {
                    self.nodes[x.0].grad.add_assign(&g);
                    let mut bg = Matrix::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for (o, v) in bg.row_mut(0).iter_mut().zip(g.row(i)) {
                            *o += *v;
                        }
                    }
                    self.nodes[bias.0].grad.add_assign(&bg);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let pc = self.nodes[p.0].value.cols();
                        let mut pg = Matrix::zeros(g.rows(), pc);
                        for i in 0..g.rows() {
                            pg.row_mut(i).copy_from_slice(&g.row(i)[offset..offset + pc]);
                        }
                        self.nodes[p.0].grad.add_assign(&pg);
                        offset += pc;
                    }
                }
                Op::RowMeanPool(x) => {
                    let rows = self.nodes[x.0].value.rows();
                    let inv = 1.0 / rows as f64;
                    let xg = &mut self.nodes[x.0].grad;
                    for i in 0..rows {
                        for (o, v) in xg.row_mut(i).iter_mut().zip(g.row(0)) {
                            *o += *v * inv;
                        }
                    }
                }
                Op::Activation(act, x) => {
                    let out = self.nodes[k].value.clone();
                    let xv = &self.nodes[x.0].value;
                    let mut xg = Matrix::zeros(xv.rows(), xv.cols());
                    for ((o, gv), (xin, yout)) in xg
                        .data_mut()
                        .iter_mut()
                        .zip(g.data())
                        .zip(xv.data().iter().zip(out.data()))
                    {
                        *o = gv * act.derivative(*xin, *yout);
                    }
                    self.nodes[x.0].grad.add_assign(&xg);
                }
                Op::SoftmaxRows(x) => {
                    let y = self.nodes[k].value.clone();
                    let mut xg = Matrix::zeros(y.rows(), y.cols());
                    for i in 0..y.rows() {
                        let dot: f64 = g
                            .row(i)
                            .iter()
                            .zip(y.row(i))
                            .map(|(gv, yv)| gv * yv)
                            .sum();
                        for ((o, gv), yv) in
                            xg.row_mut(i).iter_mut().zip(g.row(i)).zip(y.row(i))
                        {
                            *o = yv * (gv - dot);
                        }
                    }
                    self.nodes[x.0].grad.add_assign(&xg);
                }
                Op::MseLoss(pred, target) => {
                    let gs = g.scalar();
                    let p = self.nodes[pred.0].value.clone();
                    let t = self.nodes[target.0].value.clone();
                    let scale = 2.0 * gs / (p.rows() * p.cols()) as f64;
                    let mut diff = p.sub(&t);
                    diff = diff.scale(scale);
                    self.nodes[pred.0].grad.add_assign(&diff);
                    self.nodes[target.0].grad.add_scaled_assign(&diff, -1.0);
                }
                Op::CrossEntropyLoss(probs, target) => {
                    let gs = g.scalar();
                    let p = self.nodes[probs.0].value.clone();
                    let t = self.nodes[target.0].value.clone();
                    let inv_rows = gs / p.rows() as f64;
                    let mut pg = Matrix::zeros(p.rows(), p.cols());
                    let mut tg = Matrix::zeros(p.rows(), p.cols());
                    for ((pgv, tgv), (pv, tv)) in pg
                        .data_mut()
                        .iter_mut()
                        .zip(tg.data_mut())
                        .zip(p.data().iter().zip(t.data()))
                    {
                        let clamped = pv.max(CE_PROB_FLOOR);
                        if *tv != 0.0 {
                            *pgv = -tv / clamped * inv_rows;
                        }
                        *tgv = -libm::log(clamped) * inv_rows;
                    }
                    self.nodes[probs.0].grad.add_assign(&pg);
                    self.nodes[target.0].grad.add_assign(&tg);
                }
                Op::ScaleAdd(alpha, x, y) => {
                    self.nodes[x.0].grad.add_scaled_assign(&g, alpha);
                    self.nodes[y.0].grad.add_assign(&g);
                }
            }
        }

        Ok(self
            .params
            .iter()
            .map(|id| self.nodes[id.0].grad.clone())
            .collect())
    }

    /// Recompute every non-leaf value from current leaf values.
    pub fn replay(&mut self) -> Result<(), TapeError> {
        for k in 0..self.nodes.len() {
            let op = self.nodes[k].op.clone();
            if matches!(op, Op::Constant | Op::Parameter) {
                continue;
            }
            let value = self.compute(&op)?;
            self.nodes[k].value = value;
        }
        Ok(())
    }

    /// Max relative error between analytic gradients and central finite
    /// differences over every entry of every parameter.
    ///
    /// Relative error is |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
    pub fn grad_check(&mut self, loss: NodeId, step: f64) -> Result<f64, TapeError> {
        assert!(step > 0.0, "step must be positive");
        let analytic = self.backward(loss)?;
        let mut worst = 0.0f64;
        let param_ids = self.params.clone();
        for (grad, pid) in analytic.iter().zip(param_ids) {
            let entries = self.nodes[pid.0].value.data().len();
            for e in 0..entries {
                let orig = self.nodes[pid.0].value.data()[e];
                self.nodes[pid.0].value.data_mut()[e] = orig + step;
                self.replay()?;
                let up = self.nodes[loss.0].value.scalar();
                self.nodes[pid.0].value.data_mut()[e] = orig - step;
                self.replay()?;
                let down = self.nodes[loss.0].value.scalar();
                self.nodes[pid.0].value.data_mut()[e] = orig;
                let fd = (up - down) / (2.0 * step);
                let ad = grad.data()[e];
                let rel = libm::fabs(ad - fd) / (libm::fabs(ad) + libm::fabs(fd)).max(1e-8);
                worst = worst.max(rel);
            }
        }
        self.replay()?;
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_shapes() {
        let mut tape = Tape::new();
        let a = tape.constant(Matrix::zeros(3, 2));
        let b = tape.constant(Matrix::zeros(2, 4));
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.value(c).rows(), 3);
        assert_eq!(tape.value(c).cols(), 4);
    }

    #[test]
    fn add_shape_mismatch_is_reported() {
        let mut tape = Tape::new();
        let a = tape.constant(Matrix::zeros(3, 2));
        let b = tape.constant(Matrix::zeros(2, 2));
        let err = tape.add(a, b).unwrap_err();
        assert!(matches!(err, TapeError::ShapeMismatch { op: "Add", .. }));
    }

    #[test]
    fn relu_forward_value() {
        let mut tape = Tape::new();
        let x = tape.constant(Matrix::from_rows(&[&[-1.0, 2.0]]));
        let y = tape.activation(Activation::Relu, x).unwrap();
        assert_eq!(tape.value(y), &Matrix::from_rows(&[&[0.0, 2.0]]));
    }

    #[test]
    fn mse_of_identical_inputs_has_zero_gradient() {
        let mut tape = Tape::new();
        let x = tape.parameter(Matrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]));
        let loss = tape.mse_loss(x, x).unwrap();
        assert_eq!(tape.value(loss).scalar(), 0.0);
        let grads = tape.backward(loss).unwrap();
        assert!(grads[0].data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn unreachable_parameter_gets_zero_gradient() {
        let mut tape = Tape::new();
        let used = tape.parameter(Matrix::from_rows(&[&[2.0]]));
        let unused = tape.parameter(Matrix::from_rows(&[&[5.0, 5.0]]));
        let target = tape.constant(Matrix::from_rows(&[&[1.0]]));
        let loss = tape.mse_loss(used, target).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_ne!(grads[0].data()[0], 0.0);
        assert_eq!(grads[1], Matrix::zeros(1, 2));
        let _ = unused;
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut tape = Tape::new();
        let x = tape.parameter(Matrix::zeros(2, 2));
        assert!(matches!(
            tape.backward(x),
            Err(TapeError::NonScalarLoss { rows: 2, cols: 2 })
        ));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut tape = Tape::new();
        let x = tape.constant(Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[-5.0, 0.0, 5.0]]));
        let y = tape.softmax_rows(x).unwrap();
        for i in 0..2 {
            let s: f64 = tape.value(y).row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            for &v in tape.value(y).row(i) {
                assert!(v > 0.0 && v < 1.0);
            }
        }
    }

    #[test]
    fn tanh_gradient_at_zero_is_identity_scale() {
        // d/dx tanh(x) = 1 at x = 0, so the loss gradient passes through
        // unchanged.
        let mut tape = Tape::new();
        let w = tape.parameter(Matrix::zeros(1, 1));
        let y = tape.activation(Activation::Tanh, w).unwrap();
        let t = tape.constant(Matrix::from_rows(&[&[1.0]]));
        let loss = tape.mse_loss(y, t).unwrap();
        let grads = tape.backward(loss).unwrap();
        // d mse/dy = 2(y-t) = -2; times tanh'(0)=1
        assert_eq!(grads[0].data()[0], -2.0);
    }

    #[test]
    fn finite_difference_on_linear_regression() {
        // loss = MSE(W*1, target) for 2x2 W
        let mut tape = Tape::new();
        let w = tape.parameter(Matrix::from_rows(&[&[0.3, -0.6], &[1.2, 0.1]]));
        let ones = tape.constant(Matrix::ones_column(2));
        let pred = tape.matmul(w, ones).unwrap();
        let target = tape.constant(Matrix::from_rows(&[&[1.0], &[-1.0]]));
        let loss = tape.mse_loss(pred, target).unwrap();
        let worst = tape.grad_check(loss, 1e-5).unwrap();
        assert!(worst < 1e-6, "max rel err {worst}");
    }

    #[test]
    fn forward_is_deterministic() {
        let build = || {
            let mut tape = Tape::new();
            let w = tape.parameter(Matrix::from_rows(&[&[0.25, -1.5], &[2.0, 0.75]]));
            let x = tape.constant(Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]));
            let y = tape.matmul(x, w).unwrap();
            let z = tape.activation(Activation::Sigmoid, y).unwrap();
            tape.value(z).clone()
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn replay_restores_values_exactly() {
        let mut tape = Tape::new();
        let w = tape.parameter(Matrix::from_rows(&[&[0.5, 0.5]]));
        let x = tape.constant(Matrix::from_rows(&[&[2.0], &[4.0]]));
        let y = tape.matmul(w, x).unwrap();
        let t = tape.constant(Matrix::from_rows(&[&[1.0]]));
        let loss = tape.mse_loss(y, t).unwrap();
        let before = tape.value(loss).scalar();
        let _ = tape.grad_check(loss, 1e-5).unwrap();
        assert_eq!(tape.value(loss).scalar(), before);
    }

    #[test]
    fn scale_add_composes_gin_form() {
        // (1+eps)*(h W) + (A h) W == ((1+eps)I + A) h W up to rounding
        let eps = 0.3;
        let adj = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let h = Matrix::from_rows(&[&[0.7, -0.2], &[0.4, 1.1]]);
        let w = Matrix::from_rows(&[&[0.5, 1.0], &[-0.25, 0.75]]);

        let mut tape = Tape::new();
        let hc = tape.constant(h.clone());
        let wc = tape.parameter(w.clone());
        let ac = tape.constant(adj.clone());
        let hw = tape.matmul(hc, wc).unwrap();
        let ah = tape.matmul(ac, hc).unwrap();
        let ahw = tape.matmul(ah, wc).unwrap();
        let combined = tape.scale_add(1.0 + eps, hw, ahw).unwrap();

        let mut direct = Matrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                direct[(i, j)] = adj[(i, j)] + if i == j { 1.0 + eps } else { 0.0 };
            }
        }
        let expect = direct.matmul(&h).matmul(&w);
        for (a, b) in tape.value(combined).data().iter().zip(expect.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_check_every_op_kind() {
        // one composite graph touching all differentiable ops
        let mut tape = Tape::new();
        let w1 = tape.parameter(Matrix::from_rows(&[&[0.4, -0.3], &[0.9, 0.2], &[-0.5, 0.6]]));
        let x = tape.constant(Matrix::from_rows(&[
            &[1.0, 0.0, 2.0],
            &[0.5, 1.5, -1.0],
            &[2.0, 1.0, 0.0],
            &[0.0, -2.0, 1.0],
        ]));
        let bias = tape.parameter(Matrix::from_rows(&[&[0.1, -0.1]]));
        let h = tape.matmul(x, w1).unwrap();
        let h = tape.add_bias_row(h, bias).unwrap();
        let a = tape.activation(Activation::Tanh, h).unwrap();
        let b = tape.activation(Activation::Sigmoid, h).unwrap();
        let cat = tape.concat_cols(&[a, b]).unwrap();
        let sum = tape.add(a, b).unwrap();
        let mix = tape.scale_add(0.7, a, sum).unwrap();
        let cat2 = tape.concat_cols(&[cat, mix]).unwrap();
        let sm = tape.softmax_rows(cat2).unwrap();
        let pooled = tape.row_mean_pool(sm).unwrap();
        let target = {
            let mut t = Matrix::zeros(1, 6);
            t[(0, 2)] = 1.0;
            tape.constant(t)
        };
        let ce = tape.cross_entropy_loss(pooled, target).unwrap();
        let mse_t = tape.constant(Matrix::zeros(4, 6));
        let mse = tape.mse_loss(cat2, mse_t).unwrap();
        let both = tape.concat_cols(&[ce, mse]).unwrap();
        let loss = tape.row_mean_pool(both).unwrap();
        // row_mean_pool of 1x2 -> 1x2; pool again over columns via matmul
        let one = tape.constant(Matrix::ones_column(2));
        let total = tape.matmul(loss, one).unwrap();
        let worst = tape.grad_check(total, 1e-6).unwrap();
        assert!(worst < 1e-5, "max rel err {worst}");
    }
}
