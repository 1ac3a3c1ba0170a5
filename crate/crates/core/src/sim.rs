//! Loss-pattern oracle for the recovery probability: the recovery protocol
//! is run on realized losses, either over every pattern or on random
//! samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree::{ExplicitTree, TreeSpec};

/// Largest number of non-root photons `exact_p_rec` will enumerate.
pub const ENUMERATION_BOUND: usize = 24;

/// Lost flags for the non-root vertices; entry `v - 1` belongs to vertex `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LossPattern {
    lost: Vec<bool>,
}

impl LossPattern {
    pub fn new(tree: &ExplicitTree, lost: Vec<bool>) -> Result<Self> {
        if lost.len() + 1 != tree.len() {
            return Err(Error::InvalidParameter(format!(
                "loss pattern has {} flags, tree has {} non-root photons",
                lost.len(),
                tree.len() - 1
            )));
        }
        Ok(LossPattern { lost })
    }

    pub fn none(tree: &ExplicitTree) -> Self {
        LossPattern { lost: vec![false; tree.len() - 1] }
    }

    pub fn all(tree: &ExplicitTree) -> Self {
        LossPattern { lost: vec![true; tree.len() - 1] }
    }

    fn from_bits(m: usize, bits: u32) -> Self {
        LossPattern { lost: (0..m).map(|i| bits >> i & 1 == 1).collect() }
    }

    pub fn is_lost(&self, v: usize) -> bool {
        v > 0 && self.lost[v - 1]
    }

    pub fn set(&mut self, v: usize, lost: bool) {
        self.lost[v - 1] = lost;
    }

    pub fn lost_count(&self) -> usize {
        self.lost.iter().filter(|&&l| l).count()
    }
}

/// Per-vertex Z availability: `(direct or indirect, indirect)`.
fn z_tables(tree: &ExplicitTree, pattern: &LossPattern) -> (Vec<bool>, Vec<bool>) {
    let n = tree.len();
    let mut zm = vec![false; n];
    let mut ind = vec![false; n];
    // Sons have larger indices than their parents.
    for v in (0..n).rev() {
        ind[v] = tree
            .children(v)
            .iter()
            .any(|&s| !pattern.is_lost(s) && tree.children(s).iter().all(|&g| zm[g]));
        zm[v] = !pattern.is_lost(v) || ind[v];
    }
    (zm, ind)
}

/// Whether vertex `v`'s Z value is available, directly or through one of its
/// sons.
pub fn can_measure_z(tree: &ExplicitTree, v: usize, pattern: &LossPattern) -> bool {
    z_tables(tree, pattern).0[v]
}

/// Runs the recovery protocol on one loss pattern. The first surviving
/// branch root is committed to; there is no retry on a later branch.
pub fn recovery_succeeds(tree: &ExplicitTree, pattern: &LossPattern) -> bool {
    let (zm, ind) = z_tables(tree, pattern);
    let roots = tree.branch_roots();
    let Some(k) = roots.iter().position(|&r| !pattern.is_lost(r)) else {
        return false;
    };
    tree.children(roots[k]).iter().all(|&s| zm[s])
        && roots[..k].iter().all(|&r| ind[r])
        && roots[k + 1..].iter().all(|&r| zm[r])
}

/// Number of successful patterns grouped by how many photons are lost.
pub fn success_counts(tree: &ExplicitTree) -> Result<Vec<u64>> {
    let m = tree.len() - 1;
    if m > ENUMERATION_BOUND {
        return Err(Error::TooLarge(m, ENUMERATION_BOUND));
    }
    let total = 1u64 << m;
    let chunk = 1u64 << 14;
    let chunks = total.div_ceil(chunk);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; m + 1];
            for bits in c * chunk..((c + 1) * chunk).min(total) {
                let p = LossPattern::from_bits(m, bits as u32);
                if recovery_succeeds(tree, &p) {
                    counts[bits.count_ones() as usize] += 1;
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; m + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts)
}

/// Weights grouped success counts by `eps^lost (1-eps)^kept`.
pub fn weigh_counts(counts: &[u64], eps: f64) -> f64 {
    let m = counts.len() - 1;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 * eps.powi(k as i32) * (1.0 - eps).powi((m - k) as i32))
        .sum()
}

pub fn exact_p_rec(tree: &TreeSpec, eps: f64) -> Result<f64> {
    let t = ExplicitTree::from_spec(tree);
    Ok(weigh_counts(&success_counts(&t)?, eps))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimEstimate {
    pub estimate: f64,
    pub samples: u64,
    pub std_err: f64,
    pub seed: u64,
    pub workers: usize,
}

/// Monte Carlo estimate of the recovery probability. Worker `w` draws from
/// stream `w` of a generator seeded with `seed`, so the result depends only
/// on `(seed, workers)`.
pub fn mc_p_rec(tree: &TreeSpec, eps: f64, samples: u64, seed: u64, workers: usize) -> Result<SimEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let workers = workers.max(1);
    let t = ExplicitTree::from_spec(tree);
    let m = t.len() - 1;
    let hits: u64 = (0..workers)
        .into_par_iter()
        .map(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(w as u64);
            let share = samples / workers as u64 + u64::from((w as u64) < samples % workers as u64);
            let mut pattern = LossPattern { lost: vec![false; m] };
            let mut hits = 0u64;
            for _ in 0..share {
                for l in pattern.lost.iter_mut() {
                    *l = rng.gen::<f64>() < eps;
                }
                hits += u64::from(recovery_succeeds(&t, &pattern));
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    Ok(SimEstimate {
        estimate: p,
        samples,
        std_err: (p * (1.0 - p) / samples as f64).sqrt(),
        seed,
        workers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_one() -> ExplicitTree {
        ExplicitTree::from_spec(&TreeSpec::Symmetric(vec![2, 1]))
    }

    #[test]
    fn z_measurability_by_hand() {
        // root 0, branch roots 1,2, leaves 3 (son of 1), 4 (son of 2)
        let t = two_one();
        let mut p = LossPattern::none(&t);
        assert!(can_measure_z(&t, 3, &p));
        p.set(3, true);
        assert!(!can_measure_z(&t, 3, &p));
        p.set(3, false);
        p.set(1, true);
        assert!(can_measure_z(&t, 1, &p));
    }

    #[test]
    fn later_branch_commits() {
        let t = two_one();
        let p = LossPattern::new(&t, vec![true, false, false, false]).unwrap();
        assert!(recovery_succeeds(&t, &p));
        assert!(recovery_succeeds(&t, &LossPattern::none(&t)));
        assert!(!recovery_succeeds(&t, &LossPattern::all(&t)));
    }

    #[test]
    fn enumeration_counts_two_one() {
        let counts = success_counts(&two_one()).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 4);
        assert_eq!(exact_p_rec(&TreeSpec::Symmetric(vec![2, 1]), 0.5).unwrap(), 0.25);
    }

    #[test]
    fn bound_is_enforced() {
        let big = TreeSpec::Symmetric(vec![25]);
        assert!(matches!(exact_p_rec(&big, 0.1), Err(Error::TooLarge(25, 24))));
    }

    #[test]
    fn mc_extremes_and_repeatability() {
        let t = TreeSpec::Symmetric(vec![2, 2]);
        assert_eq!(mc_p_rec(&t, 0.0, 100, 1, 3).unwrap().estimate, 1.0);
        assert_eq!(mc_p_rec(&t, 1.0, 100, 1, 3).unwrap().estimate, 0.0);
        let a = mc_p_rec(&t, 0.3, 5000, 9, 4).unwrap();
        let b = mc_p_rec(&t, 0.3, 5000, 9, 4).unwrap();
        assert_eq!(a, b);
    }
}
