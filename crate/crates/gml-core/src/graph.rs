//! Simple undirected graphs as dense 0/1 adjacency matrices.

use alloc::vec::Vec;
use core::fmt;

use crate::matrix::Matrix;

/// An undirected simple graph: symmetric 0/1 adjacency with zero diagonal.
///
/// Constructors enforce the invariants; everything downstream (operators,
/// moments, generators) relies on them.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    adj: Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    EmptyGraph,
    NotSquare { rows: usize, cols: usize },
    NotBinary { i: usize, j: usize },
    SelfLoop { i: usize },
    NotSymmetric { i: usize, j: usize },
    EdgeOutOfBounds { u: usize, v: usize, n: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::EmptyGraph => write!(f, "graph must have at least one node"),
            GraphError::NotSquare { rows, cols } => {
                write!(f, "adjacency must be square, got {rows}x{cols}")
            }
            GraphError::NotBinary { i, j } => {
                write!(f, "adjacency entry ({i},{j}) is not 0 or 1")
            }
            GraphError::SelfLoop { i } => write!(f, "self-loop at node {i}"),
            GraphError::NotSymmetric { i, j } => {
                write!(f, "adjacency not symmetric at ({i},{j})")
            }
            GraphError::EdgeOutOfBounds { u, v, n } => {
                write!(f, "edge ({u},{v}) out of bounds for {n} nodes")
            }
        }
    }
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        Ok(Graph {
            n,
            adj: Matrix::zeros(n, n),
        })
    }

    /// Build from an undirected edge list. Inserting an edge twice is fine;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = Graph::empty(n)?;
        for &(u, v) in edges {
            g.insert_edge(u, v)?;
        }
        Ok(g)
    }

    /// Validate an arbitrary matrix as an adjacency matrix.
    pub fn from_adjacency(adj: Matrix) -> Result<Self, GraphError> {
        let n = adj.rows();
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        if adj.rows() != adj.cols() {
            return Err(GraphError::NotSquare {
                rows: adj.rows(),
                cols: adj.cols(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let a = adj[(i, j)];
                if a != 0.0 && a != 1.0 {
                    return Err(GraphError::NotBinary { i, j });
                }
                if i == j && a != 0.0 {
                    return Err(GraphError::SelfLoop { i });
                }
                if adj[(i, j)] != adj[(j, i)] {
                    return Err(GraphError::NotSymmetric { i, j });
                }
            }
        }
        Ok(Graph { n, adj })
    }

    pub(crate) fn insert_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        if u >= self.n || v >= self.n {
            return Err(GraphError::EdgeOutOfBounds { u, v, n: self.n });
        }
        if u == v {
            return Err(GraphError::SelfLoop { i: u });
        }
        self.adj[(u, v)] = 1.0;
        self.adj[(v, u)] = 1.0;
        Ok(())
    }

    pub(crate) fn remove_edge(&mut self, u: usize, v: usize) {
        debug_assert!(self.has_edge(u, v));
        self.adj[(u, v)] = 0.0;
        self.adj[(v, u)] = 0.0;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adj(&self) -> &Matrix {
        &self.adj
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[(u, v)] == 1.0
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj.row(i).iter().filter(|&&a| a == 1.0).count()
    }

    /// Degree of every node, as integer counts.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.degrees().iter().sum::<usize>() / 2
    }

    /// Edges as (u, v) with u < v, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }
}
