//! Two-sample Kolmogorov–Smirnov statistics over node-level graph-moment
//! distributions.
//!
//! Only the statistic is computed, never a p-value: the comparison of
//! interest is between whole distributions of statistics (real-real pairs
//! against real-fake pairs), not a hypothesis test.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng as _;

use crate::graph::Graph;
use crate::graph_ops::moment_vector;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatsError {
    EmptySample,
    EmptyGraphSet,
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::EmptySample => write!(f, "KS statistic needs non-empty samples"),
            StatsError::EmptyGraphSet => write!(f, "KS profile needs non-empty graph sets"),
        }
    }
}

/// How a real graph gets matched with a fake one when sampling real-fake
/// pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FakePairing {
    /// Real k is compared against fake k (its own rewiring).
    Partner,
    /// Real and fake drawn independently and uniformly.
    Independent,
}

/// Distributions of KS statistics for one moment order.
#[derive(Debug, Clone)]
pub struct KsProfile {
    pub order: usize,
    pub real_real: Vec<f64>,
    pub real_fake: Vec<f64>,
}

impl KsProfile {
    pub fn real_real_mean(&self) -> f64 {
        mean(&self.real_real)
    }

    pub fn real_fake_mean(&self) -> f64 {
        mean(&self.real_fake)
    }

    pub fn real_real_std(&self) -> f64 {
        let m = self.real_real_mean();
        let var = self
            .real_real
            .iter()
            .map(|x| (x - m) * (x - m))
            .sum::<f64>()
            / self.real_real.len() as f64;
        libm::sqrt(var)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-sample KS statistic: sup_t |ECDF_x(t) - ECDF_y(t)|, evaluated by a
/// single merge pass over both sorted samples so ties are handled at every
/// pooled point.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let nx = xs.len() as f64;
    let ny = ys.len() as f64;
    // integer consumption counters keep the ECDF difference exact: equal
    // counts at equal fractions give literally 0.0
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = 0.0f64;
    while i < xs.len() || j < ys.len() {
        let advance_x = match (xs.get(i), ys.get(j)) {
            (Some(&xv), Some(&yv)) => xv <= yv,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if advance_x {
            // consume the full run of equal values on both sides
            let v = xs[i];
            while i < xs.len() && xs[i] == v {
                i += 1;
            }
            while j < ys.len() && ys[j] == v {
                j += 1;
            }
        } else {
            let v = ys[j];
            while j < ys.len() && ys[j] == v {
                j += 1;
            }
        }
        let diff = i as f64 / nx - j as f64 / ny;
        best = best.max(diff.abs());
    }
    Ok(best)
}

/// Sample `pair_count` real-real pairs (two distinct reals) and
/// `pair_count` real-fake pairs, and compute the KS statistic between the
/// two graphs' order-p moment distributions for each pair.
pub fn ks_profile(
    reals: &[Graph],
    fakes: &[Graph],
    p: usize,
    pair_count: usize,
    seed: u64,
    pairing: FakePairing,
) -> Result<KsProfile, StatsError> {
    if reals.is_empty() || fakes.is_empty() {
        return Err(StatsError::EmptyGraphSet);
    }
    let real_moments: Vec<Vec<f64>> = reals.iter().map(|g| moment_vector(g, p)).collect();
    let fake_moments: Vec<Vec<f64>> = fakes.iter().map(|g| moment_vector(g, p)).collect();
    let mut rng = rng_from_seed(seed);

    let mut real_real = Vec::with_capacity(pair_count);
    for _ in 0..pair_count {
        let a = rng.gen_range(0..reals.len());
        let b = if reals.len() == 1 {
            a
        } else {
            // distinct partner
            let mut b = rng.gen_range(0..reals.len() - 1);
            if b >= a {
                b += 1;
            }
            b
        };
        real_real.push(ks_statistic(&real_moments[a], &real_moments[b])?);
    }

    let mut real_fake = Vec::with_capacity(pair_count);
    for _ in 0..pair_count {
        let a = rng.gen_range(0..reals.len());
        let b = match pairing {
            FakePairing::Partner => a.min(fakes.len() - 1),
            FakePairing::Independent => rng.gen_range(0..fakes.len()),
        };
        real_fake.push(ks_statistic(&real_moments[a], &fake_moments[b])?);
    }

    Ok(KsProfile {
        order: p,
        real_real,
        real_fake,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{gen_ba, rewire_preserving_degrees};
    use alloc::vec;

    #[test]
    fn identical_samples_give_zero() {
        let x = vec![3.0, 1.0, 2.0, 2.0];
        assert_eq!(ks_statistic(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports_give_one() {
        assert_eq!(ks_statistic(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn shifted_triple() {
        // ECDF gap peaks at 1/3 for {1,2,3} vs {2,3,4}
        let d = ks_statistic(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-15, "got {d}");
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert_eq!(ks_statistic(&[], &[1.0]), Err(StatsError::EmptySample));
    }

    /// Brute force oracle: evaluate both ECDFs at every pooled point.
    fn ks_brute(x: &[f64], y: &[f64]) -> f64 {
        let ecdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
        let mut best = 0.0f64;
        for &t in x.iter().chain(y) {
            best = best.max((ecdf(x, t) - ecdf(y, t)).abs());
        }
        best
    }

    #[test]
    fn merge_matches_brute_force() {
        let mut rng = crate::rng::rng_from_seed(12);
        for _ in 0..200 {
            let nx = rng.gen_range(1..=20);
            let ny = rng.gen_range(1..=20);
            // small integer grid to force plenty of ties
            let x: Vec<f64> = (0..nx).map(|_| rng.gen_range(0..6) as f64).collect();
            let y: Vec<f64> = (0..ny).map(|_| rng.gen_range(0..6) as f64).collect();
            let fast = ks_statistic(&x, &y).unwrap();
            let slow = ks_brute(&x, &y);
            assert!((fast - slow).abs() < 1e-12, "{x:?} vs {y:?}: {fast} != {slow}");
        }
    }

    #[test]
    fn symmetric_and_rescaling_invariant() {
        let mut rng = crate::rng::rng_from_seed(5);
        for _ in 0..50 {
            let x: Vec<f64> = (0..12).map(|_| rng.gen::<f64>()).collect();
            let y: Vec<f64> = (0..9).map(|_| rng.gen::<f64>()).collect();
            let d1 = ks_statistic(&x, &y).unwrap();
            let d2 = ks_statistic(&y, &x).unwrap();
            assert_eq!(d1, d2);
            // common strictly monotone rescale
            let fx: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
            let fy: Vec<f64> = y.iter().map(|v| 3.0 * v + 1.0).collect();
            assert_eq!(ks_statistic(&fx, &fy).unwrap(), d1);
        }
    }

    #[test]
    fn profile_of_identical_sets_is_zero() {
        let g = gen_ba(12, 2, 4).unwrap();
        let reals = vec![g.clone()];
        let fakes = vec![g];
        let prof = ks_profile(&reals, &fakes, 2, 20, 9, FakePairing::Partner).unwrap();
        assert!(prof.real_real.iter().all(|&d| d == 0.0));
        assert!(prof.real_fake.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn partnered_rewiring_has_zero_degree_ks() {
        let reals: Vec<Graph> = (0..10).map(|s| gen_ba(20, 3, s).unwrap()).collect();
        let fakes: Vec<Graph> = reals
            .iter()
            .enumerate()
            .map(|(k, g)| rewire_preserving_degrees(g, 1000 + k as u64))
            .collect();
        let prof = ks_profile(&reals, &fakes, 1, 50, 3, FakePairing::Partner).unwrap();
        assert!(prof.real_fake.iter().all(|&d| d == 0.0), "{:?}", prof.real_fake);
    }

    #[test]
    fn statistics_stay_in_unit_interval() {
        let reals: Vec<Graph> = (0..6).map(|s| gen_ba(15, 2, s).unwrap()).collect();
        let fakes: Vec<Graph> = (0..6).map(|s| gen_ba(15, 4, 50 + s).unwrap()).collect();
        for p in 1..=4 {
            let prof = ks_profile(&reals, &fakes, p, 40, 7, FakePairing::Independent).unwrap();
            for d in prof.real_real.iter().chain(&prof.real_fake) {
                assert!((0.0..=1.0).contains(d));
            }
        }
    }
}
