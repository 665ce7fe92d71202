//! Numerical core for probing what graph convolutional networks can learn
//! about graph topology.
//!
//! Everything here runs on dense 64-bit matrices at desk scale (graphs of a
//! few dozen nodes): random graph generators, graph-moment operators, a
//! two-sample Kolmogorov-Smirnov statistic, a small reverse-mode autodiff
//! tape, GCN model assembly, and deterministic Adam training loops.
//!
//! The crate is `no_std` (with `alloc`); file formats, experiment scripts,
//! and the CLI live in the companion `gml-lab` crate.

#![no_std]

extern crate alloc;

pub mod autodiff;
pub mod graph;
pub mod graph_ops;
pub mod graphgen;
pub mod matrix;
pub mod nn;
pub mod rng;
pub mod stats;
pub mod training;

pub use autodiff::{Activation, NodeId, Tape};
pub use graph::Graph;
pub use graph_ops::{MomentTarget, PropagationRule};
pub use matrix::Matrix;
pub use nn::{Arch, Head, ModelParams, ModelSpec};
pub use training::{TrainConfig, TrainReport};
