//! Model assembly from autodiff primitives: plain GCN layers
//! σ(f(A)·h·W + b), the modular block running several propagation rules in
//! parallel with a node-wise mixing layer, residual concatenation of all
//! layer outputs into an aggregation head, the mean-pooling classifier
//! head, and the fully connected baseline that flattens the adjacency.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::autodiff::{Activation, NodeId, Tape, TapeError};
use crate::graph::Graph;
use crate::graph_ops::{propagation_matrix, PropagationRule};
use crate::matrix::Matrix;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arch {
    /// Flatten A, one sigmoid hidden layer, linear output per node.
    FcBaseline,
    /// Stacked σ(f(A)·h·W + b) layers with a single propagation rule.
    PlainGcn,
    /// Per-layer parallel branches, one per propagation rule, concatenated
    /// and mixed by a node-wise fully connected map.
    ModularGcn,
}

impl Arch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Arch::FcBaseline => "fc_baseline",
            Arch::PlainGcn => "plain_gcn",
            Arch::ModularGcn => "modular_gcn",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Node-wise scalar output: the last layer directly (no residuals) or
    /// a node-wise linear map over the concatenation of all layer outputs.
    RegressionAggregate,
    /// Node-wise FC to class logits, row softmax, mean-pool over nodes.
    ClassifierMeanPool,
}

impl Head {
    pub fn as_str(&self) -> &'static str {
        match self {
            Head::RegressionAggregate => "regression",
            Head::ClassifierMeanPool => "classifier",
        }
    }
}

/// Declarative description of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub arch: Arch,
    pub layers: usize,
    /// Width of hidden layers (and of the modular mixing output).
    pub units: usize,
    /// Width of each propagation branch inside a modular layer. Usually
    /// equal to `units`; the ablation widens it to keep parameter counts
    /// matched across rule subsets.
    pub branch_units: usize,
    pub rules: Vec<PropagationRule>,
    pub activation: Activation,
    pub use_bias: bool,
    pub residual: bool,
    pub head: Head,
    /// Class count; used by the classifier head only.
    pub classes: usize,
}

impl ModelSpec {
    pub fn plain_gcn(
        layers: usize,
        units: usize,
        rule: PropagationRule,
        activation: Activation,
        use_bias: bool,
        residual: bool,
    ) -> Self {
        ModelSpec {
            arch: Arch::PlainGcn,
            layers,
            units,
            branch_units: units,
            rules: alloc::vec![rule],
            activation,
            use_bias,
            residual,
            head: Head::RegressionAggregate,
            classes: 0,
        }
    }

    pub fn modular_classifier(
        layers: usize,
        units: usize,
        rules: &[PropagationRule],
        classes: usize,
    ) -> Self {
        ModelSpec {
            arch: Arch::ModularGcn,
            layers,
            units,
            branch_units: units,
            rules: rules.to_vec(),
            activation: Activation::Linear,
            use_bias: true,
            residual: true,
            head: Head::ClassifierMeanPool,
            classes,
        }
    }

    pub fn fc_baseline(hidden_units: usize) -> Self {
        ModelSpec {
            arch: Arch::FcBaseline,
            layers: 1,
            units: hidden_units,
            branch_units: hidden_units,
            rules: Vec::new(),
            activation: Activation::Sigmoid,
            use_bias: true,
            residual: false,
            head: Head::RegressionAggregate,
            classes: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers == 0 {
            return Err(ModelError::InvalidSpec("layer count must be positive".into()));
        }
        if self.units == 0 {
            return Err(ModelError::InvalidSpec("units must be positive".into()));
        }
        match self.arch {
            Arch::FcBaseline => {}
            Arch::PlainGcn => {
                if self.rules.len() != 1 {
                    return Err(ModelError::InvalidSpec(format!(
                        "plain GCN takes exactly one propagation rule, got {}",
                        self.rules.len()
                    )));
                }
            }
            Arch::ModularGcn => {
                if self.rules.is_empty() {
                    return Err(ModelError::InvalidSpec(
                        "modular GCN needs a non-empty rule subset".into(),
                    ));
                }
                if self.branch_units == 0 {
                    return Err(ModelError::InvalidSpec("branch units must be positive".into()));
                }
            }
        }
        if self.head == Head::ClassifierMeanPool && self.classes < 2 {
            return Err(ModelError::InvalidSpec(format!(
                "classifier needs at least 2 classes, got {}",
                self.classes
            )));
        }
        Ok(())
    }

    /// Output width of layer `i` (0-based). Hidden layers use `units`; a
    /// non-residual regression model narrows its last layer to one unit so
    /// the layer stack itself produces the node-wise prediction.
    fn layer_width(&self, i: usize) -> usize {
        if self.head == Head::RegressionAggregate && !self.residual && i + 1 == self.layers {
            1
        } else {
            self.units
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    InvalidSpec(String),
    ParamMismatch { expected: usize, actual: usize },
    Tape(TapeError),
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::InvalidSpec(msg) => write!(f, "invalid model spec: {msg}"),
            ModelError::ParamMismatch { expected, actual } => {
                write!(f, "expected {expected} parameter matrices, got {actual}")
            }
            ModelError::Tape(e) => write!(f, "{e}"),
        }
    }
}

impl From<TapeError> for ModelError {
    fn from(e: TapeError) -> Self {
        ModelError::Tape(e)
    }
}

/// Shape of one named parameter matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamShape {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

/// The ordered parameter matrices backing a ModelSpec.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub values: Vec<Matrix>,
}

impl ModelParams {
    /// Glorot-uniform initialization: each entry uniform in [-s, s] with
    /// s = sqrt(6 / (fan_in + fan_out)).
    pub fn init(spec: &ModelSpec, n_nodes: usize, seed: u64) -> Result<Self, ModelError> {
        let shapes = param_shapes(spec, n_nodes)?;
        let mut rng = rng_from_seed(seed);
        let values = shapes
            .iter()
            .map(|shape| {
                let s = libm::sqrt(6.0 / (shape.rows + shape.cols) as f64);
                let mut m = Matrix::zeros(shape.rows, shape.cols);
                for v in m.data_mut() {
                    *v = rng.gen_range(-s..=s);
                }
                m
            })
            .collect();
        Ok(ModelParams { values })
    }

    pub fn zeros(spec: &ModelSpec, n_nodes: usize) -> Result<Self, ModelError> {
        let shapes = param_shapes(spec, n_nodes)?;
        Ok(ModelParams {
            values: shapes
                .iter()
                .map(|s| Matrix::zeros(s.rows, s.cols))
                .collect(),
        })
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// Total number of trainable scalars.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(|m| m.rows() * m.cols()).sum()
    }
}

/// Derive every parameter shape for a spec on graphs of `n_nodes` nodes.
/// Only the FC baseline depends on the graph size.
pub fn param_shapes(spec: &ModelSpec, n_nodes: usize) -> Result<Vec<ParamShape>, ModelError> {
    spec.validate()?;
    let mut shapes = Vec::new();
    let mut push = |name: String, rows: usize, cols: usize| {
        shapes.push(ParamShape { name, rows, cols });
    };
    match spec.arch {
        Arch::FcBaseline => {
            push("hidden.w".into(), n_nodes * n_nodes, spec.units);
            if spec.use_bias {
                push("hidden.b".into(), 1, spec.units);
            }
            push("out.w".into(), spec.units, n_nodes);
            if spec.use_bias {
                push("out.b".into(), 1, n_nodes);
            }
        }
        Arch::PlainGcn => {
            let mut d_in = 1;
            for layer in 0..spec.layers {
                let d_out = spec.layer_width(layer);
                push(format!("layer{layer}.w"), d_in, d_out);
                if spec.use_bias {
                    push(format!("layer{layer}.b"), 1, d_out);
                }
                d_in = d_out;
            }
        }
        Arch::ModularGcn => {
            let mut d_in = 1;
            for layer in 0..spec.layers {
                let d_out = spec.layer_width(layer);
                for rule in &spec.rules {
                    push(
                        format!("layer{layer}.{}.w", rule.short_name()),
                        d_in,
                        spec.branch_units,
                    );
                }
                push(
                    format!("layer{layer}.mix.w"),
                    spec.rules.len() * spec.branch_units,
                    d_out,
                );
                if spec.use_bias {
                    push(format!("layer{layer}.mix.b"), 1, d_out);
                }
                d_in = d_out;
            }
        }
    }
    match spec.head {
        Head::RegressionAggregate => {
            if spec.residual {
                let concat_width: usize = (0..spec.layers).map(|i| spec.layer_width(i)).sum();
                push("head.w".into(), concat_width, 1);
            }
            // without residuals the last layer is the output
        }
        Head::ClassifierMeanPool => {
            let feed_width: usize = if spec.residual {
                (0..spec.layers).map(|i| spec.layer_width(i)).sum()
            } else {
                spec.layer_width(spec.layers - 1)
            };
            push("head.w".into(), feed_width, spec.classes);
            if spec.use_bias {
                push("head.b".into(), 1, spec.classes);
            }
        }
    }
    Ok(shapes)
}

/// The n x 1 all-ones attribute matrix: node attributes are fixed to 1, so
/// models see topology only.
pub fn init_attributes(g: &Graph) -> Matrix {
    Matrix::ones_column(g.n())
}

/// One GCN layer: records σ(fA·h·W + b) and returns the output node.
pub fn gcn_layer(
    tape: &mut Tape,
    prop: NodeId,
    h: NodeId,
    weight: NodeId,
    bias: Option<NodeId>,
    act: Activation,
) -> Result<NodeId, TapeError> {
    let propagated = tape.matmul(prop, h)?;
    let mut z = tape.matmul(propagated, weight)?;
    if let Some(b) = bias {
        z = tape.add_bias_row(z, b)?;
    }
    tape.activation(act, z)
}

/// One modular block: a linear GCN branch per rule, column concatenation,
/// then a node-wise fully connected mixing map carrying the block's
/// activation.
#[allow(clippy::too_many_arguments)]
pub fn modular_block(
    tape: &mut Tape,
    props: &[NodeId],
    h: NodeId,
    branch_weights: &[NodeId],
    mix_weight: NodeId,
    mix_bias: Option<NodeId>,
    act: Activation,
) -> Result<NodeId, TapeError> {
    debug_assert_eq!(props.len(), branch_weights.len());
    let mut branches = Vec::with_capacity(props.len());
    for (&prop, &w) in props.iter().zip(branch_weights) {
        branches.push(gcn_layer(tape, prop, h, w, None, Activation::Linear)?);
    }
    let cat = tape.concat_cols(&branches)?;
    let mut z = tape.matmul(cat, mix_weight)?;
    if let Some(b) = mix_bias {
        z = tape.add_bias_row(z, b)?;
    }
    tape.activation(act, z)
}

/// Residual aggregation head: concatenate the layer outputs (last first)
/// and apply a node-wise linear map, Y_iμ = σ(Σ_m a^(m)_μ · h^(m)_i).
pub fn residual_head(
    tape: &mut Tape,
    layer_outputs: &[NodeId],
    aggregation: NodeId,
    act: Activation,
) -> Result<NodeId, TapeError> {
    let reversed: Vec<NodeId> = layer_outputs.iter().rev().copied().collect();
    let z = tape.concat_cols(&reversed)?;
    let y = tape.matmul(z, aggregation)?;
    tape.activation(act, y)
}

/// Classifier head: node-wise FC to `classes` logits, row softmax, then
/// mean-pool over nodes into a single probability row.
pub fn classifier_head(
    tape: &mut Tape,
    h: NodeId,
    weight: NodeId,
    bias: Option<NodeId>,
    classes: usize,
) -> Result<NodeId, TapeError> {
    debug_assert!(classes >= 2);
    let mut logits = tape.matmul(h, weight)?;
    if let Some(b) = bias {
        logits = tape.add_bias_row(logits, b)?;
    }
    let probs = tape.softmax_rows(logits)?;
    tape.row_mean_pool(probs)
}

/// FC baseline: flatten A to a 1 x N² row, one hidden layer, linear output
/// of width N holding the per-node predictions.
pub fn fc_baseline(
    tape: &mut Tape,
    g: &Graph,
    weights: &FcParams,
    act: Activation,
) -> Result<NodeId, TapeError> {
    let n = g.n();
    let flat = Matrix::from_vec(1, n * n, g.adj().data().to_vec());
    let input = tape.constant(flat);
    let mut hidden = tape.matmul(input, weights.hidden_w)?;
    if let Some(b) = weights.hidden_b {
        hidden = tape.add_bias_row(hidden, b)?;
    }
    let hidden = tape.activation(act, hidden)?;
    let mut out = tape.matmul(hidden, weights.out_w)?;
    if let Some(b) = weights.out_b {
        out = tape.add_bias_row(out, b)?;
    }
    Ok(out)
}

pub struct FcParams {
    pub hidden_w: NodeId,
    pub hidden_b: Option<NodeId>,
    pub out_w: NodeId,
    pub out_b: Option<NodeId>,
}

/// A model instantiated on one graph: the tape plus its output node.
pub struct BuiltModel {
    pub tape: Tape,
    pub output: NodeId,
}

/// Compose a full model for one graph. Parameters are registered on the
/// tape in `param_shapes` order; the returned output node is n x 1 for
/// regression heads and 1 x classes for the classifier head.
pub fn build_model(
    spec: &ModelSpec,
    g: &Graph,
    params: &ModelParams,
) -> Result<BuiltModel, ModelError> {
    let props: Vec<Matrix> = spec
        .rules
        .iter()
        .map(|&rule| propagation_matrix(g, rule))
        .collect();
    build_model_with_props(spec, g, &props, params)
}

/// Like `build_model`, but with precomputed propagation matrices (one per
/// spec rule, same order). Training loops cache these per graph.
pub fn build_model_with_props(
    spec: &ModelSpec,
    g: &Graph,
    props: &[Matrix],
    params: &ModelParams,
) -> Result<BuiltModel, ModelError> {
    let shapes = param_shapes(spec, g.n())?;
    if params.values.len() != shapes.len() {
        return Err(ModelError::ParamMismatch {
            expected: shapes.len(),
            actual: params.values.len(),
        });
    }
    for (shape, value) in shapes.iter().zip(&params.values) {
        if value.rows() != shape.rows || value.cols() != shape.cols {
            return Err(ModelError::InvalidSpec(format!(
                "parameter {} must be {}x{}, got {}x{}",
                shape.name,
                shape.rows,
                shape.cols,
                value.rows(),
                value.cols()
            )));
        }
    }

    let mut tape = Tape::new();
    let mut param_nodes: Vec<NodeId> = Vec::with_capacity(params.values.len());
    for value in &params.values {
        param_nodes.push(tape.parameter(value.clone()));
    }
    let mut next_param = {
        let mut k = 0;
        move || {
            let id = param_nodes[k];
            k += 1;
            id
        }
    };

    let output = match spec.arch {
        Arch::FcBaseline => {
            let hidden_w = next_param();
            let hidden_b = spec.use_bias.then(&mut next_param);
            let out_w = next_param();
            let out_b = spec.use_bias.then(&mut next_param);
            fc_baseline(
                &mut tape,
                g,
                &FcParams {
                    hidden_w,
                    hidden_b,
                    out_w,
                    out_b,
                },
                spec.activation,
            )?
        }
        Arch::PlainGcn | Arch::ModularGcn => {
            let prop_nodes: Vec<NodeId> =
                props.iter().map(|p| tape.constant(p.clone())).collect();
            let mut h = tape.constant(init_attributes(g));
            let mut layer_outputs = Vec::with_capacity(spec.layers);
            for _layer in 0..spec.layers {
                h = match spec.arch {
                    Arch::PlainGcn => {
                        let w = next_param();
                        let b = spec.use_bias.then(&mut next_param);
                        gcn_layer(&mut tape, prop_nodes[0], h, w, b, spec.activation)?
                    }
                    Arch::ModularGcn => {
                        let branch_weights: Vec<NodeId> =
                            (0..spec.rules.len()).map(|_| next_param()).collect();
                        let mix_w = next_param();
                        let mix_b = spec.use_bias.then(&mut next_param);
                        modular_block(
                            &mut tape,
                            &prop_nodes,
                            h,
                            &branch_weights,
                            mix_w,
                            mix_b,
                            spec.activation,
                        )?
                    }
                    Arch::FcBaseline => unreachable!(),
                };
                layer_outputs.push(h);
            }
            match spec.head {
                Head::RegressionAggregate => {
                    if spec.residual {
                        let agg = next_param();
                        residual_head(&mut tape, &layer_outputs, agg, spec.activation)?
                    } else {
                        h
                    }
                }
                Head::ClassifierMeanPool => {
                    let feed = if spec.residual {
                        let reversed: Vec<NodeId> =
                            layer_outputs.iter().rev().copied().collect();
                        tape.concat_cols(&reversed)?
                    } else {
                        h
                    };
                    let w = next_param();
                    let b = spec.use_bias.then(&mut next_param);
                    classifier_head(&mut tape, feed, w, b, spec.classes)?
                }
            }
        }
    };
    Ok(BuiltModel { tape, output })
}
