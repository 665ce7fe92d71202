//! Graph operators and graph moments.
//!
//! The moment of order p at node i is the row sum of the p-th adjacency
//! power, sum_j (A^p)_ij — the number of length-p walks starting at i.
//! These vectors are the regression targets throughout, and the operators
//! A, D⁻¹A, D⁻¹ᐟ²AD⁻¹ᐟ² are the three propagation rules a GCN layer can
//! multiply by.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::Graph;
use crate::matrix::Matrix;

/// The matrix f(A) a GCN layer propagates node features with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PropagationRule {
    /// f(A) = A
    Adjacency,
    /// f(A) = D⁻¹A (GraphSAGE mean aggregation)
    RandomWalk,
    /// f(A) = D⁻¹ᐟ²AD⁻¹ᐟ² (Kipf–Welling normalization)
    SymmetricNorm,
}

impl PropagationRule {
    pub const ALL: [PropagationRule; 3] = [
        PropagationRule::Adjacency,
        PropagationRule::RandomWalk,
        PropagationRule::SymmetricNorm,
    ];

    /// Short names f1/f2/f3 as used in the ablation tables.
    pub fn short_name(&self) -> &'static str {
        match self {
            PropagationRule::Adjacency => "f1",
            PropagationRule::RandomWalk => "f2",
            PropagationRule::SymmetricNorm => "f3",
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PropagationRule::Adjacency => "adjacency",
            PropagationRule::RandomWalk => "random_walk",
            PropagationRule::SymmetricNorm => "symmetric_norm",
        }
    }
}

/// A linear combination of graph moments: sum_m a_m * M_m.
///
/// `coefficients[k]` weights the moment of order k+1; at least one
/// coefficient must be nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTarget {
    coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllZeroCoefficients;

impl fmt::Display for AllZeroCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "moment target needs at least one nonzero coefficient")
    }
}

impl MomentTarget {
    pub fn new(coefficients: Vec<f64>) -> Result<Self, AllZeroCoefficients> {
        if coefficients.iter().all(|&c| c == 0.0) {
            return Err(AllZeroCoefficients);
        }
        Ok(MomentTarget { coefficients })
    }

    /// The single moment of order p.
    pub fn single(p: usize) -> Self {
        assert!(p >= 1, "moment order must be at least 1");
        let mut coefficients = vec![0.0; p];
        coefficients[p - 1] = 1.0;
        MomentTarget { coefficients }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }
}

/// Node degrees as floats: entry i is sum_j A_ij.
pub fn degree_vector(g: &Graph) -> Vec<f64> {
    (0..g.n()).map(|i| g.adj().row(i).iter().sum()).collect()
}

/// f(A) for a rule. Zero-degree rows take the pseudo-inverse convention
/// (D⁻¹)_kk = 0, so isolated nodes emit and receive nothing.
pub fn propagation_matrix(g: &Graph, rule: PropagationRule) -> Matrix {
    let n = g.n();
    let deg = degree_vector(g);
    match rule {
        PropagationRule::Adjacency => g.adj().clone(),
        PropagationRule::RandomWalk => {
            let mut out = g.adj().clone();
            for i in 0..n {
                let scale = if deg[i] > 0.0 { 1.0 / deg[i] } else { 0.0 };
                for v in out.row_mut(i) {
                    *v *= scale;
                }
            }
            out
        }
        PropagationRule::SymmetricNorm => {
            let inv_sqrt: Vec<f64> = deg
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / libm::sqrt(d) } else { 0.0 })
                .collect();
            let mut out = g.adj().clone();
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
                }
            }
            out
        }
    }
}

/// A^p by repeated dense multiplication.
pub fn graph_power(g: &Graph, p: usize) -> Matrix {
    assert!(p >= 1, "power must be at least 1");
    let mut acc = g.adj().clone();
    for _ in 1..p {
        acc = acc.matmul(g.adj());
    }
    acc
}

/// Row sums of A^p, computed as p matrix-vector products. Exact for 0/1
/// adjacency (all intermediates are integers).
pub fn moment_vector(g: &Graph, p: usize) -> Vec<f64> {
    assert!(p >= 1, "moment order must be at least 1");
    let mut v = Matrix::ones_column(g.n());
    for _ in 0..p {
        v = g.adj().matmul(&v);
    }
    v.data().to_vec()
}

/// sum_m a_m * moment_vector(g, m).
pub fn mixed_moment_vector(g: &Graph, target: &MomentTarget) -> Vec<f64> {
    let n = g.n();
    let mut out = vec![0.0; n];
    let mut v = Matrix::ones_column(n);
    for &a in target.coefficients() {
        v = g.adj().matmul(&v);
        if a != 0.0 {
            for (o, &x) in out.iter_mut().zip(v.data()) {
                *o += a * x;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{apply_permutation, gen_er, permute_nodes};

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn degree_vector_examples() {
        assert_eq!(degree_vector(&triangle()), [2.0, 2.0, 2.0]);
        assert_eq!(degree_vector(&Graph::empty(4).unwrap()), [0.0; 4]);
        assert_eq!(degree_vector(&path3()), [1.0, 2.0, 1.0]);
    }

    #[test]
    fn random_walk_on_triangle() {
        let m = propagation_matrix(&triangle(), PropagationRule::RandomWalk);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 0.5 };
                assert_eq!(m[(i, j)], expect);
            }
        }
    }

    #[test]
    fn adjacency_rule_is_identity_on_adj() {
        let g = gen_er(8, 0.5, 3).unwrap();
        assert_eq!(&propagation_matrix(&g, PropagationRule::Adjacency), g.adj());
    }

    #[test]
    fn isolated_node_rows_are_zero() {
        // node 2 isolated
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let rw = propagation_matrix(&g, PropagationRule::RandomWalk);
        assert_eq!(rw.row(2), [0.0, 0.0, 0.0]);
        let sym = propagation_matrix(&g, PropagationRule::SymmetricNorm);
        assert_eq!(sym.row(2), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn random_walk_row_sums_are_zero_or_one() {
        for seed in 0..10 {
            let g = gen_er(9, 0.25, seed).unwrap();
            let m = propagation_matrix(&g, PropagationRule::RandomWalk);
            for i in 0..g.n() {
                let s: f64 = m.row(i).iter().sum();
                assert!(
                    s.abs() < 1e-12 || (s - 1.0).abs() < 1e-12,
                    "row sum {s}"
                );
            }
        }
    }

    #[test]
    fn symmetric_norm_is_symmetric() {
        for seed in 0..10 {
            let g = gen_er(9, 0.4, seed).unwrap();
            let m = propagation_matrix(&g, PropagationRule::SymmetricNorm);
            for i in 0..g.n() {
                for j in 0..g.n() {
                    assert_eq!(m[(i, j)], m[(j, i)]);
                }
            }
        }
    }

    #[test]
    fn power_examples() {
        let g = path3();
        assert_eq!(&graph_power(&g, 1), g.adj());
        let sq = graph_power(&g, 2);
        assert_eq!(
            sq,
            Matrix::from_rows(&[&[1.0, 0.0, 1.0], &[0.0, 2.0, 0.0], &[1.0, 0.0, 1.0]])
        );
        // each triangle node closes a 3-walk in two orientations
        let cube = graph_power(&triangle(), 3);
        for i in 0..3 {
            assert_eq!(cube[(i, i)], 2.0);
        }
    }

    /// Exhaustive oracle: count length-p walks i -> j by enumeration.
    fn walk_count(g: &Graph, from: usize, to: usize, p: usize) -> usize {
        if p == 0 {
            return usize::from(from == to);
        }
        (0..g.n())
            .filter(|&mid| g.has_edge(from, mid))
            .map(|mid| walk_count(g, mid, to, p - 1))
            .sum()
    }

    #[test]
    fn power_matches_walk_enumeration() {
        for seed in 0..12 {
            let n = 3 + (seed as usize % 4); // 3..=6 nodes
            let g = gen_er(n, 0.5, seed).unwrap();
            for p in 1..=4 {
                let ap = graph_power(&g, p);
                for i in 0..n {
                    for j in 0..n {
                        assert_eq!(
                            ap[(i, j)],
                            walk_count(&g, i, j, p) as f64,
                            "n={n} seed={seed} p={p} ({i},{j})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn moment_examples() {
        assert_eq!(moment_vector(&triangle(), 1), [2.0, 2.0, 2.0]);
        assert_eq!(moment_vector(&path3(), 2), [2.0, 2.0, 2.0]);
        assert_eq!(moment_vector(&Graph::empty(3).unwrap(), 5), [0.0; 3]);
    }

    #[test]
    fn moment_vector_is_rowsum_of_power() {
        for seed in 0..8 {
            let g = gen_er(7, 0.4, seed).unwrap();
            for p in 1..=4 {
                let ap = graph_power(&g, p);
                let rowsums: Vec<f64> = (0..g.n()).map(|i| ap.row(i).iter().sum()).collect();
                assert_eq!(moment_vector(&g, p), rowsums);
            }
        }
    }

    #[test]
    fn mixed_moment_examples() {
        let t = MomentTarget::new(vec![1.0, 0.0, 0.0]).unwrap();
        let g = gen_er(6, 0.5, 2).unwrap();
        assert_eq!(mixed_moment_vector(&g, &t), moment_vector(&g, 1));
        // K3: A^2 row sums are 4, so (1,1) gives 2+4=6 per node
        let t2 = MomentTarget::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(mixed_moment_vector(&triangle(), &t2), [6.0, 6.0, 6.0]);
        assert!(MomentTarget::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn moments_are_permutation_equivariant() {
        for seed in 0..6 {
            let g = gen_er(8, 0.4, seed).unwrap();
            let mut perm: Vec<usize> = (0..8).collect();
            // a fixed non-trivial permutation derived from the seed
            perm.rotate_left(1 + seed as usize % 5);
            let pg = apply_permutation(&g, &perm);
            for p in 1..=3 {
                let base = moment_vector(&g, p);
                let permuted = moment_vector(&pg, p);
                for i in 0..8 {
                    assert_eq!(base[i], permuted[perm[i]], "seed={seed} p={p}");
                }
            }
        }
    }

    #[test]
    fn permute_nodes_preserves_moment_multisets() {
        for seed in 0..6 {
            let g = gen_er(9, 0.35, seed).unwrap();
            let shuffled = permute_nodes(&g, seed + 100);
            for p in 1..=3 {
                let mut a = moment_vector(&g, p);
                let mut b = moment_vector(&shuffled, p);
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                assert_eq!(a, b);
            }
        }
    }
}
