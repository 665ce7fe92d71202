//! Deterministic training: dataset splitting, Adam, and the regression /
//! classification loops.
//!
//! Targets for moment regression are standardized to mean 0 and variance 1
//! over the whole dataset before training, so reported MSE values are
//! comparable across moment orders (an MSE of 1.0 is what predicting the
//! mean would score). Everything is a pure function of (spec, dataset,
//! config): reruns produce bit-identical reports.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::autodiff::TapeError;
use crate::graph::Graph;
use crate::graph_ops::propagation_matrix;
use crate::graphgen::LabeledGraph;
use crate::matrix::Matrix;
use crate::nn::{build_model_with_props, Arch, ModelError, ModelParams, ModelSpec};
use crate::rng::{child_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    /// Stop after this many epochs without a new best validation loss.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 300,
            batch_size: 32,
            seed: 0,
            train_fraction: 0.7,
            val_fraction: 0.15,
            test_fraction: 0.15,
            patience: 30,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let sum = self.train_fraction + self.val_fraction + self.test_fraction;
        if libm::fabs(sum - 1.0) > 1e-9 {
            return Err(TrainError::BadFractions { sum });
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::BadConfig("epochs and batch size must be positive"));
        }
        if self.learning_rate <= 0.0 {
            return Err(TrainError::BadConfig("learning rate must be positive"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    DatasetTooSmall { size: usize },
    BadFractions { sum: f64 },
    BadConfig(&'static str),
    TargetLength { expected: usize, actual: usize },
    SingleClass,
    Model(ModelError),
}

impl core::fmt::Display for TrainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TrainError::DatasetTooSmall { size } => {
                write!(f, "dataset of {size} graphs is too small (need >= 10)")
            }
            TrainError::BadFractions { sum } => {
                write!(f, "split fractions sum to {sum}, expected 1")
            }
            TrainError::BadConfig(msg) => write!(f, "{msg}"),
            TrainError::TargetLength { expected, actual } => {
                write!(f, "target length {actual} does not match node count {expected}")
            }
            TrainError::SingleClass => write!(f, "classification needs at least 2 classes"),
            TrainError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl From<ModelError> for TrainError {
    fn from(e: ModelError) -> Self {
        TrainError::Model(e)
    }
}

impl From<TapeError> for TrainError {
    fn from(e: TapeError) -> Self {
        TrainError::Model(ModelError::Tape(e))
    }
}

/// Index partition of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Split `n` samples into train/val/test. With `labels` the split is
/// stratified: each class is partitioned separately, so per-split class
/// counts match up to rounding.
pub fn split(
    n: usize,
    labels: Option<&[usize]>,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<SplitIndices, TrainError> {
    cfg.validate()?;
    if n < 10 {
        return Err(TrainError::DatasetTooSmall { size: n });
    }
    let groups: Vec<Vec<usize>> = match labels {
        None => vec![(0..n).collect()],
        Some(labels) => {
            assert_eq!(labels.len(), n, "label count must match dataset size");
            let classes = labels.iter().max().map_or(0, |&m| m + 1);
            let mut groups = vec![Vec::new(); classes];
            for (i, &l) in labels.iter().enumerate() {
                groups[l].push(i);
            }
            groups.retain(|g| !g.is_empty());
            groups
        }
    };
    let mut rng = rng_from_seed(seed);
    let mut out = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for mut group in groups {
        group.shuffle(&mut rng);
        let gn = group.len();
        let n_train = libm::round(gn as f64 * cfg.train_fraction) as usize;
        let n_val = libm::round(gn as f64 * cfg.val_fraction) as usize;
        let n_train = n_train.min(gn);
        let n_val = n_val.min(gn - n_train);
        out.train.extend_from_slice(&group[..n_train]);
        out.val.extend_from_slice(&group[n_train..n_train + n_val]);
        out.test.extend_from_slice(&group[n_train + n_val..]);
    }
    Ok(out)
}

/// Adam first/second moment state.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u32,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros = |p: &Matrix| Matrix::zeros(p.rows(), p.cols());
        AdamState {
            m: params.values.iter().map(zeros).collect(),
            v: params.values.iter().map(zeros).collect(),
            t: 0,
        }
    }
}

/// One Adam update with bias correction.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &[Matrix],
    state: &mut AdamState,
    cfg: &TrainConfig,
) {
    assert_eq!(params.values.len(), grads.len(), "gradient count mismatch");
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - libm::pow(cfg.beta1, t as f64);
    let bc2 = 1.0 - libm::pow(cfg.beta2, t as f64);
    for ((p, g), (m, v)) in params
        .values
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for ((pe, &ge), (me, ve)) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut()))
        {
            *me = cfg.beta1 * *me + (1.0 - cfg.beta1) * ge;
            *ve = cfg.beta2 * *ve + (1.0 - cfg.beta2) * ge * ge;
            let m_hat = *me / bc1;
            let v_hat = *ve / bc2;
            *pe -= cfg.learning_rate * m_hat / (libm::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

/// Outcome of a training run. `wall_clock_secs` is zero when produced by
/// the core loops; the lab harness stamps it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    /// Normalized test MSE for regression, test accuracy for classification.
    pub test_metric: f64,
    pub epochs_run: usize,
    pub seed: u64,
    pub wall_clock_secs: f64,
}

/// Standardize pooled target entries to mean 0, variance 1. Returns the
/// transformed targets; a zero-variance dataset passes through shifted
/// only.
pub fn standardize_targets(targets: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let count: usize = targets.iter().map(Vec::len).sum();
    let mean = targets.iter().flatten().sum::<f64>() / count as f64;
    let var = targets
        .iter()
        .flatten()
        .map(|&t| (t - mean) * (t - mean))
        .sum::<f64>()
        / count as f64;
    let scale = if var > 1e-24 { 1.0 / libm::sqrt(var) } else { 1.0 };
    targets
        .iter()
        .map(|ts| ts.iter().map(|&t| (t - mean) * scale).collect())
        .collect()
}

/// Propagation matrices for every graph, in spec rule order.
fn prop_cache(spec: &ModelSpec, graphs: &[&Graph]) -> Vec<Vec<Matrix>> {
    graphs
        .iter()
        .map(|g| {
            spec.rules
                .iter()
                .map(|&r| propagation_matrix(g, r))
                .collect()
        })
        .collect()
}

fn target_matrix(spec: &ModelSpec, target: &[f64]) -> Matrix {
    match spec.arch {
        // the FC baseline predicts a 1 x N row
        Arch::FcBaseline => Matrix::from_vec(1, target.len(), target.to_vec()),
        _ => Matrix::from_vec(target.len(), 1, target.to_vec()),
    }
}

fn one_hot(classes: usize, label: usize) -> Matrix {
    let mut t = Matrix::zeros(1, classes);
    t[(0, label)] = 1.0;
    t
}

enum Task<'a> {
    Regression(&'a [Matrix]),
    Classification { classes: usize, labels: &'a [usize] },
}

/// Forward + loss for one sample; backward optionally.
fn sample_loss(
    spec: &ModelSpec,
    graph: &Graph,
    props: &[Matrix],
    params: &ModelParams,
    task: &Task<'_>,
    idx: usize,
    with_grad: bool,
) -> Result<(f64, Option<Vec<Matrix>>, Option<usize>), TrainError> {
    let mut built = build_model_with_props(spec, graph, props, params)?;
    let (loss_node, predicted_class) = match task {
        Task::Regression(targets) => {
            let t = built.tape.constant(targets[idx].clone());
            (built.tape.mse_loss(built.output, t)?, None)
        }
        Task::Classification { classes, labels } => {
            let t = built.tape.constant(one_hot(*classes, labels[idx]));
            let probs = built.tape.value(built.output);
            let argmax = probs
                .row(0)
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, _)| k);
            (
                built.tape.cross_entropy_loss(built.output, t)?,
                argmax,
            )
        }
    };
    let loss = built.tape.value(loss_node).scalar();
    let grads = if with_grad {
        Some(built.tape.backward(loss_node)?)
    } else {
        None
    };
    Ok((loss, grads, predicted_class))
}

fn mean_loss(
    spec: &ModelSpec,
    graphs: &[&Graph],
    props: &[Vec<Matrix>],
    params: &ModelParams,
    task: &Task<'_>,
    indices: &[usize],
) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for &i in indices {
        let (loss, _, _) = sample_loss(spec, graphs[i], &props[i], params, task, i, false)?;
        total += loss;
    }
    Ok(total / indices.len() as f64)
}

/// Shared epoch loop. Early-stops on validation loss with the configured
/// patience and restores the best-epoch parameters for the test metric.
fn run_training(
    spec: &ModelSpec,
    graphs: &[&Graph],
    task: &Task<'_>,
    cfg: &TrainConfig,
    splits: &SplitIndices,
) -> Result<(TrainReport, ModelParams), TrainError> {
    let n_nodes = graphs[0].n();
    let props = prop_cache(spec, graphs);
    let mut params = ModelParams::init(spec, n_nodes, child_seed(cfg.seed, 1))?;
    let mut adam = AdamState::new(&params);
    let mut shuffle_rng = rng_from_seed(child_seed(cfg.seed, 2));

    let mut train_curve = Vec::with_capacity(cfg.epochs);
    let mut val_curve = Vec::with_capacity(cfg.epochs);
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params = params.clone();
    let mut order: Vec<usize> = splits.train.clone();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grad_sum: Vec<Matrix> = params
                .values
                .iter()
                .map(|p| Matrix::zeros(p.rows(), p.cols()))
                .collect();
            for &i in batch {
                let (loss, grads, _) =
                    sample_loss(spec, graphs[i], &props[i], &params, task, i, true)?;
                epoch_loss += loss;
                for (acc, g) in grad_sum.iter_mut().zip(grads.expect("with_grad")) {
                    acc.add_assign(&g);
                }
            }
            let inv = 1.0 / batch.len() as f64;
            for g in grad_sum.iter_mut() {
                *g = g.scale(inv);
            }
            adam_step(&mut params, &grad_sum, &mut adam, cfg);
        }
        train_curve.push(epoch_loss / splits.train.len() as f64);

        let val = mean_loss(spec, graphs, &props, &params, task, &splits.val)?;
        val_curve.push(val);
        if val < best_val {
            best_val = val;
            best_epoch = epoch;
            best_params = params.clone();
        } else if epoch - best_epoch > cfg.patience {
            break;
        }
    }

    let test_metric = match task {
        Task::Regression(_) => {
            mean_loss(spec, graphs, &props, &best_params, task, &splits.test)?
        }
        Task::Classification { .. } => {
            let mut correct = 0usize;
            let Task::Classification { labels, .. } = task else { unreachable!() };
            for &i in &splits.test {
                let (_, _, pred) =
                    sample_loss(spec, graphs[i], &props[i], &best_params, task, i, false)?;
                if pred == Some(labels[i]) {
                    correct += 1;
                }
            }
            correct as f64 / splits.test.len() as f64
        }
    };

    let epochs_run = train_curve.len();
    Ok((
        TrainReport {
            train_loss: train_curve,
            val_loss: val_curve,
            best_val_loss: best_val,
            best_epoch,
            test_metric,
            epochs_run,
            seed: cfg.seed,
            wall_clock_secs: 0.0,
        },
        best_params,
    ))
}

/// Train a regression model against per-node targets (standardized before
/// training; all reported losses are in normalized units).
pub fn train_regression(
    spec: &ModelSpec,
    dataset: &[(Graph, Vec<f64>)],
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    spec.validate()?;
    cfg.validate()?;
    if dataset.len() < 10 {
        return Err(TrainError::DatasetTooSmall {
            size: dataset.len(),
        });
    }
    for (g, t) in dataset {
        if t.len() != g.n() {
            return Err(TrainError::TargetLength {
                expected: g.n(),
                actual: t.len(),
            });
        }
    }
    let raw: Vec<Vec<f64>> = dataset.iter().map(|(_, t)| t.clone()).collect();
    let standardized = standardize_targets(&raw);
    let targets: Vec<Matrix> = standardized
        .iter()
        .map(|t| target_matrix(spec, t))
        .collect();
    let graphs: Vec<&Graph> = dataset.iter().map(|(g, _)| g).collect();
    let splits = split(dataset.len(), None, cfg, child_seed(cfg.seed, 0))?;
    let task = Task::Regression(&targets);
    run_training(spec, &graphs, &task, cfg, &splits).map(|(report, _)| report)
}

/// Train a classifier on labeled graphs; the test metric is accuracy.
pub fn train_classifier(
    spec: &ModelSpec,
    dataset: &[LabeledGraph],
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    spec.validate()?;
    cfg.validate()?;
    if dataset.len() < 10 {
        return Err(TrainError::DatasetTooSmall {
            size: dataset.len(),
        });
    }
    let labels: Vec<usize> = dataset.iter().map(|lg| lg.label).collect();
    let distinct = {
        let mut seen: Vec<usize> = labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    };
    if distinct < 2 {
        return Err(TrainError::SingleClass);
    }
    let graphs: Vec<&Graph> = dataset.iter().map(|lg| &lg.graph).collect();
    let splits = split(dataset.len(), Some(&labels), cfg, child_seed(cfg.seed, 0))?;
    let task = Task::Classification {
        classes: spec.classes,
        labels: &labels,
    };
    run_training(spec, &graphs, &task, cfg, &splits).map(|(report, _)| report)
}

/// Human-readable summary line for logs.
pub fn summarize(report: &TrainReport) -> String {
    alloc::format!(
        "epochs={} best_epoch={} best_val={:.6} test={:.6}",
        report.epochs_run, report.best_epoch, report.best_val_loss, report.test_metric
    )
}
