use ltc_core::recovery::{p_rec_general, p_rec_ordered, BranchOrder, LossModel};
use ltc_core::tree::Branch;
use ltc_core::TreeSpec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight transcription of the branch-by-branch sum, with the indirect
/// measurement probabilities from their defining recursion.
fn oracle(branches: &[Branch], eps: f64) -> f64 {
    let r = |c: &Branch, level: usize| -> f64 {
        // r[m] for m = depth..0, with b_m = 0 past the branch's depth.
        let b = |m: usize| c.get(m).copied().unwrap_or(0) as i32;
        let mut r = vec![0.0f64; c.len() + 3];
        for m in (0..c.len()).rev() {
            let hit = (1.0 - eps) * (1.0 - eps + eps * r[m + 2]).powi(b(m + 1));
            r[m] = 1.0 - (1.0 - hit).powi(b(m));
        }
        r[level]
    };
    let mut total = 0.0;
    for k in 0..branches.len() {
        let before: f64 = branches[..k].iter().map(|c| eps * r(c, 0)).product();
        let px = (1.0 - eps + eps * r(&branches[k], 1)).powi(branches[k].first().copied().unwrap_or(0) as i32);
        let after: f64 = branches[k + 1..].iter().map(|c| 1.0 - eps + eps * r(c, 0)).product();
        total += before * (1.0 - eps) * px * after;
    }
    total
}

fn random_branches(rng: &mut ChaCha8Rng, max_branches: usize) -> Vec<Branch> {
    let n = rng.gen_range(1..=max_branches);
    (0..n)
        .map(|_| {
            let depth = rng.gen_range(0..=3);
            (0..depth).map(|_| rng.gen_range(1..=6)).collect()
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn given_order_matches_the_transcribed_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let b = random_branches(&mut rng, 7);
        let eps = rng.gen_range(0.0..1.0);
        let (got, order) = p_rec_ordered(&b, eps, BranchOrder::AsGiven);
        assert_eq!(order, b);
        assert!((got - oracle(&b, eps)).abs() <= 1e-12, "{b:?} at {eps}");
        let spec = TreeSpec::BranchList(b.clone());
        assert!((p_rec_general(&spec, eps).p_rec - got).abs() <= 1e-12);
    }
}

#[test]
fn best_order_is_the_best_permutation_for_small_lists() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let b = random_branches(&mut rng, 4);
        let eps = rng.gen_range(0.05..0.6);
        let brute = permutations(b.len())
            .into_iter()
            .map(|p| oracle(&p.iter().map(|&i| b[i].clone()).collect::<Vec<_>>(), eps))
            .fold(0.0f64, f64::max);
        let (got, order) = p_rec_ordered(&b, eps, BranchOrder::Best);
        assert!((got - brute).abs() <= 1e-12, "{b:?} at {eps}");
        assert!((oracle(&order, eps) - got).abs() <= 1e-12);
    }
}

#[test]
fn out_of_range_loss_is_rejected() {
    assert!(LossModel::new(-0.1).is_err());
    assert!(LossModel::new(1.5).is_err());
    assert!(LossModel::new(f64::NAN).is_err());
}

#[test]
fn lossless_and_total_loss_limits() {
    let t: TreeSpec = "[(4,3),(4,2),(3,1)]".parse().unwrap();
    assert_eq!(p_rec_general(&t, 0.0).p_rec, 1.0);
    assert_eq!(p_rec_general(&t, 1.0).p_rec, 0.0);
}

proptest! {
    #[test]
    fn more_loss_never_helps(
        branches in prop::collection::vec(prop::collection::vec(1u32..6, 0..4), 1..6),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let t = TreeSpec::BranchList(branches);
        let p_lo = p_rec_general(&t, lo).p_rec;
        let p_hi = p_rec_general(&t, hi).p_rec;
        prop_assert!(p_hi <= p_lo + 1e-12, "{} {} -> {} {}", lo, hi, p_lo, p_hi);
    }
}
