//! Analytic recovery probability of a tree code under independent photon
//! loss.
//!
//! Branch vectors are indexed from the branch root: for `c = (c0, c1, ..)`
//! the branch root has `c0` sons, each of those has `c1` sons, and so on.
//! Level `m` of the recursion refers to vertices at depth `m` inside the
//! branch, so `R_0` is the chance of measuring the branch root's Z
//! indirectly and `R_1` the same for its sons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{Branch, TreeSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LossModel {
    pub epsilon: f64,
}

impl LossModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!("loss probability {epsilon} outside [0,1]")));
        }
        Ok(LossModel { epsilon })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchProfile {
    pub p_x: f64,
    pub p_z: f64,
    pub p_zind: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryProfile {
    pub epsilon: f64,
    pub branches: Vec<BranchProfile>,
    pub p_rec: f64,
    pub eps_eff: f64,
}

/// `x^n` with `0^0 = 1`.
fn pow(x: f64, n: u32) -> f64 {
    if n == 0 {
        1.0
    } else {
        x.powi(n as i32)
    }
}

/// All indirect-Z probabilities `R_0..=R_d` of a branch, bottom-up.
pub fn indirect_z_levels(branch: &[u32], eps: f64) -> Vec<f64> {
    let d = branch.len();
    let b = |m: usize| branch.get(m).copied().unwrap_or(0);
    // Two spare slots keep `R_{m+2}` in range at the bottom.
    let mut r = vec![0.0; d + 3];
    for m in (0..d).rev() {
        let inner = (1.0 - eps) * pow(1.0 - eps + eps * r[m + 2], b(m + 1));
        r[m] = 1.0 - pow(1.0 - inner, b(m));
    }
    r.truncate(d + 1);
    r
}

/// `R_m` for a branch; zero below the last level.
pub fn indirect_z_prob(branch: &[u32], m: usize, eps: f64) -> f64 {
    indirect_z_levels(branch, eps).get(m).copied().unwrap_or(0.0)
}

pub fn branch_profile(branch: &[u32], eps: f64) -> BranchProfile {
    let b = |m: usize| branch.get(m).copied().unwrap_or(0);
    // Rolling `R_{m+1}`, `R_{m+2}` of the same recursion as above.
    let (mut r1, mut r2) = (0.0, 0.0);
    for m in (0..branch.len()).rev() {
        let inner = (1.0 - eps) * pow(1.0 - eps + eps * r2, b(m + 1));
        let rm = 1.0 - pow(1.0 - inner, b(m));
        r2 = r1;
        r1 = rm;
    }
    let (p_zind, r_sons) = (r1, r2);
    BranchProfile {
        p_x: pow(1.0 - eps + eps * r_sons, b(0)),
        p_z: 1.0 - eps + eps * p_zind,
        p_zind,
    }
}

/// Recovery probability of a root with the given branches, scanned in order.
pub fn p_rec_profiles(profiles: &[BranchProfile], eps: f64) -> f64 {
    p_rec_scan(profiles.iter().rev(), eps)
}

/// Same sum from the last branch backwards: `T_k = P_X(k) prod_{j>k} P_Z(j)
/// + eps P_Zind(k) T_{k+1}`, and `P_rec = (1 - eps) T_0`.
fn p_rec_scan<'a>(reversed: impl Iterator<Item = &'a BranchProfile>, eps: f64) -> f64 {
    let mut t = 0.0;
    let mut suffix = 1.0;
    for p in reversed {
        t = p.p_x * suffix + eps * p.p_zind * t;
        suffix *= p.p_z;
    }
    (1.0 - eps) * t
}

pub fn p_rec_general(tree: &TreeSpec, eps: f64) -> RecoveryProfile {
    let branches: Vec<BranchProfile> = tree.branch_list().iter().map(|b| branch_profile(b, eps)).collect();
    let p_rec = p_rec_profiles(&branches, eps);
    RecoveryProfile { epsilon: eps, branches, p_rec, eps_eff: 1.0 - p_rec }
}

/// Compact form for symmetric trees. Non-symmetric specs fall back to the
/// general sum.
pub fn p_rec_symmetric(tree: &TreeSpec, eps: f64) -> RecoveryProfile {
    let TreeSpec::Symmetric(b) = tree else {
        return p_rec_general(tree, eps);
    };
    let n = b[0];
    let prof = branch_profile(&b[1..], eps);
    let p_rec = prof.p_x * (pow(prof.p_z, n) - pow(eps * prof.p_zind, n));
    RecoveryProfile {
        epsilon: eps,
        branches: vec![prof; n as usize],
        p_rec,
        eps_eff: 1.0 - p_rec,
    }
}

/// How branches are ordered before the scan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchOrder {
    /// Use the order of the spec.
    AsGiven,
    /// Sort by P_X descending; for four or fewer branches try every distinct
    /// order and keep the best.
    #[default]
    Best,
}

/// Recovery probability with branch reordering. Returns the ordered branch
/// list that achieved it.
pub fn p_rec_ordered(branches: &[Branch], eps: f64, order: BranchOrder) -> (f64, Vec<Branch>) {
    let n = branches.len();
    if n <= SMALL {
        let mut profiles = [BranchProfile { p_x: 0.0, p_z: 0.0, p_zind: 0.0 }; SMALL];
        for (p, b) in profiles.iter_mut().zip(branches) {
            *p = branch_profile(b, eps);
        }
        let (v, perm) = best_small(branches, &profiles[..n], eps, order);
        return (v, perm[..n].iter().map(|&i| branches[i].clone()).collect());
    }
    let profiles: Vec<BranchProfile> = branches.iter().map(|b| branch_profile(b, eps)).collect();
    if order == BranchOrder::AsGiven {
        return (p_rec_profiles(&profiles, eps), branches.to_vec());
    }
    let mut idx: Vec<usize> = (0..n).collect();
    sort_by_px(&mut idx, branches, &profiles);
    let v = p_rec_scan(idx.iter().rev().map(|&i| &profiles[i]), eps);
    (v, idx.iter().map(|&i| branches[i].clone()).collect())
}

/// Branch counts up to this size try every distinct order.
const SMALL: usize = 4;

/// P_X descending; ties keep the larger branch first for a deterministic
/// order.
fn sort_by_px(idx: &mut [usize], branches: &[Branch], profiles: &[BranchProfile]) {
    idx.sort_by(|&a, &b| profiles[b].p_x.total_cmp(&profiles[a].p_x).then_with(|| branches[b].cmp(&branches[a])));
}

fn best_small(branches: &[Branch], profiles: &[BranchProfile], eps: f64, order: BranchOrder) -> (f64, [usize; SMALL]) {
    let n = profiles.len();
    let mut idx = [0, 1, 2, 3];
    if order == BranchOrder::AsGiven {
        return (p_rec_profiles(profiles, eps), idx);
    }
    sort_by_px(&mut idx[..n], branches, profiles);
    let eval = |perm: &[usize]| p_rec_scan(perm.iter().rev().map(|&i| &profiles[i]), eps);
    let mut best = eval(&idx[..n]);
    let mut best_perm = idx;
    // Equal branches share a key, so only distinct orders are visited; keys
    // start in P_X order so ties resolve to it.
    let mut keys = [0usize; SMALL];
    for p in 0..n {
        keys[p] = (0..p).find(|&q| branches[idx[q]] == branches[idx[p]]).unwrap_or(p);
    }
    while next_permutation(&mut keys[..n]) {
        let mut perm = [0usize; SMALL];
        for p in 0..n {
            perm[p] = idx[keys[p]];
        }
        let v = eval(&perm[..n]);
        if v > best {
            best = v;
            best_perm = perm;
        }
    }
    (best, best_perm)
}

/// Value-only form of [`p_rec_ordered`] for search loops.
pub(crate) fn p_rec_value(branches: &[Branch], eps: f64, order: BranchOrder) -> f64 {
    let n = branches.len();
    if n > SMALL {
        return p_rec_ordered(branches, eps, order).0;
    }
    let mut profiles = [BranchProfile { p_x: 0.0, p_z: 0.0, p_zind: 0.0 }; SMALL];
    for (p, b) in profiles.iter_mut().zip(branches) {
        *p = branch_profile(b, eps);
    }
    best_small(branches, &profiles[..n], eps, order).0
}

/// Lexicographic successor of `v`; false once `v` is the last permutation.
fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
