use ltc_core::sim::{exact_p_rec, mc_p_rec, recovery_succeeds, success_counts, weigh_counts, LossPattern};
use ltc_core::{p_rec_general, ExplicitTree, TreeSpec};

fn tree(s: &str) -> TreeSpec {
    s.parse().unwrap()
}

#[test]
fn same_seed_same_estimate() {
    let t = tree("[(3,2),(2,2),(2,1)]");
    let a = mc_p_rec(&t, 0.2, 20_000, 5, 3).unwrap();
    let b = mc_p_rec(&t, 0.2, 20_000, 5, 3).unwrap();
    assert_eq!(a, b);
    let c = mc_p_rec(&t, 0.2, 20_000, 6, 3).unwrap();
    assert_ne!(a.estimate, c.estimate);
}

#[test]
fn degenerate_losses() {
    let t = tree("[3,2,2]");
    let none = mc_p_rec(&t, 0.0, 1000, 1, 2).unwrap();
    assert_eq!((none.estimate, none.std_err), (1.0, 0.0));
    let all = mc_p_rec(&t, 1.0, 1000, 1, 2).unwrap();
    assert_eq!(all.estimate, 0.0);
    assert!(mc_p_rec(&t, 0.1, 0, 1, 2).is_err());
}

#[test]
fn pattern_extremes() {
    let e = ExplicitTree::from_spec(&tree("[(2,1),(3)]"));
    assert!(recovery_succeeds(&e, &LossPattern::none(&e)));
    assert!(!recovery_succeeds(&e, &LossPattern::all(&e)));
}

#[test]
fn exact_enumeration_agrees_with_the_formula() {
    for s in ["[2,1]", "[(2,2),(2,1),(1,3)]", "[3,2,2]", "[(1,1,1),(2),(1,2)]"] {
        let t = tree(s);
        let counts = success_counts(&ExplicitTree::from_spec(&t)).unwrap();
        for eps in [0.0, 0.13, 0.5, 0.87, 1.0] {
            let exact = exact_p_rec(&t, eps).unwrap();
            assert_eq!(exact, weigh_counts(&counts, eps));
            assert!((exact - p_rec_general(&t, eps).p_rec).abs() <= 1e-12, "{s} at {eps}");
        }
    }
}

#[test]
fn two_one_counts_by_hand() {
    // Four non-root photons, so the counts weigh 16 equally likely
    // patterns at one half.
    let counts = success_counts(&ExplicitTree::from_spec(&tree("[2,1]"))).unwrap();
    assert_eq!(counts[0], 1);
    assert_eq!(weigh_counts(&counts, 0.5), 0.25);
    assert_eq!(counts.iter().sum::<u64>() as f64 / 16.0, 0.25);
}
