use ltc_core::repeater::{binary_entropy, channel_eps, preset, rate, secret_fraction, RepeaterConfig};
use ltc_core::schedule::{layout_time, Variant};
use ltc_core::TreeSpec;

fn best_over_stations(tree: &TreeSpec, name: &str, length_km: f64) -> (u32, f64) {
    let base = RepeaterConfig::reference(length_km, 1).with_preset(&preset(name).unwrap());
    // Permissive accounting: the tree exceeds the single-emitter capacity.
    let sched = layout_time(tree, Variant::Modified, base.beta, false).unwrap().outputs(base.tau_ph_s);
    (1..=200)
        .map(|m| (m, rate(tree, &RepeaterConfig { stations: m, ..base.clone() }, &sched).unwrap().rate))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a })
}

#[test]
fn hardware_rates_land_in_the_expected_decades() {
    let t: TreeSpec = "[(4,2),(4,2),(4,1)]".parse().unwrap();
    for (name, lo) in [("qdot", 1e5), ("siv", 1e3), ("atom", 1e2)] {
        let (m, r) = best_over_stations(&t, name, 100.0);
        assert!((lo..10.0 * lo).contains(&r), "{name}: {r} Hz at m={m}");
        assert!((30..=70).contains(&m), "{name}: m={m}");
    }
}

#[test]
fn report_is_self_consistent() {
    let t: TreeSpec = "[(4,3),(4,2),(3,1)]".parse().unwrap();
    let cfg = RepeaterConfig::reference(300.0, 90);
    let sched = layout_time(&t, Variant::Modified, cfg.beta, true).unwrap().outputs(cfg.tau_ph_s);
    let r = rate(&t, &cfg, &sched).unwrap();
    assert!(r.rate > 0.0);
    assert_eq!(r.recompute(), r.rate);
    assert!((r.p_succ - r.p_rec.powi(91)).abs() <= 1e-15);
    assert_eq!(r.n_ph, 38);
    assert!((r.f - secret_fraction(r.q)).abs() <= 1e-15);
}

#[test]
fn zero_stations_is_an_error() {
    let t: TreeSpec = "[2,2,1]".parse().unwrap();
    let cfg = RepeaterConfig::reference(300.0, 0);
    let sched = layout_time(&t, Variant::Modified, cfg.beta, true).unwrap().outputs(cfg.tau_ph_s);
    assert!(rate(&t, &cfg, &sched).is_err());
}

#[test]
fn key_fraction_limits() {
    assert_eq!(binary_entropy(0.0), 0.0);
    assert_eq!(binary_entropy(0.5), 1.0);
    assert_eq!(secret_fraction(0.0), 1.0);
    assert_eq!(secret_fraction(0.2), 0.0);
}

#[test]
fn longer_delay_means_more_loss() {
    let cfg = RepeaterConfig::reference(300.0, 50);
    let a = channel_eps(&cfg, 1e-6);
    let b = channel_eps(&cfg, 1e-4);
    assert!((0.0..1.0).contains(&a) && a < b && b < 1.0);
}
