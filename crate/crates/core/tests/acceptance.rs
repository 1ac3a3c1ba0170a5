//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p ltc-core --test acceptance`.

use std::time::{Duration, Instant};

use ltc_core::recovery::{p_rec_general, p_rec_ordered, p_rec_symmetric, BranchOrder};
use ltc_core::repeater::{binary_entropy, channel_eps, rate, secret_fraction, RepeaterConfig, ScheduleOutputs};
use ltc_core::schedule::{build_program, generation_time, simulate_program, verify_target, GenerationTime, Mutation, Variant};
use ltc_core::search::{family_trees, optimize_eps_eff, optimize_rate, photon_budget_sweep, Family, SearchSpace};
use ltc_core::sim::{mc_p_rec, success_counts, weigh_counts};
use ltc_core::tree::branch_photons;
use ltc_core::{ExplicitTree, TreeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn parse(s: &str) -> TreeSpec {
    s.parse().unwrap()
}

fn c1_photon_counts() -> Outcome {
    let tables = [
        ("[2,1,15]", 35),
        ("[2,14,4]", 143),
        ("[3,20,4]", 304),
        ("[3,17,4]", 259),
        ("[3,15,4]", 229),
        ("[3,13,4]", 199),
        ("[3,12,4]", 184),
        ("[3,11,4]", 169),
        ("[3,10,4]", 154),
        ("[3,9,4]", 139),
        ("[3,7,3]", 88),
        ("[3,6,3]", 76),
        ("[2,1,5]", 15),
        ("[2,5,3]", 43),
        ("[3,5,3]", 64),
        ("[(4,4),(4,1),(3,1)]", 38),
        ("[(4,3),(4,1),(3,1)]", 34),
        ("[(4,3),(4,2),(3,1)]", 38),
    ];
    let eps_winners = [
        "[4,5,3]",
        "[3,7,3]",
        "[3,8,3]",
        "[2,10,3]",
        "[2,9,3]",
        "[2,9,4]",
        "[(6,4),(6,4),(6,3),(5,1)]",
        "[(7,4),(6,3),(6,2),(6,2)]",
        "[(7,4),(7,3),(6,2),(6,1)]",
        "[(7,4),(7,3),(7,2),(5,1)]",
        "[(9,4),(8,3),(6,2)]",
        "[(10,4),(9,3),(5,1)]",
        "[(10,3),(10,3)]",
        "[(11,4),(10,3)]",
        "[(11,5),(10,2)]",
        "[(9,3),(9,3)]",
        "[(10,5),(11,2)]",
    ];
    let mut bad = Vec::new();
    for (s, n) in tables {
        let got = parse(s).photon_count();
        if got != n {
            bad.push(format!("{s}: {got} != {n}"));
        }
    }
    for s in eps_winners {
        let got = parse(s).photon_count();
        if got > 100 {
            bad.push(format!("{s}: {got} > 100"));
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { format!("{} trees", tables.len() + eps_winners.len()) } else { bad.join("; ") })
}

/// Every branch vector with at most `limit` vertices.
fn branch_vectors(limit: u64) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, limit: u64, out: &mut Vec<Vec<u32>>) {
        for x in 1.. {
            prefix.push(x);
            let fits = branch_photons(prefix) <= limit;
            if fits {
                out.push(prefix.clone());
                rec(prefix, limit, out);
            }
            prefix.pop();
            if !fits {
                break;
            }
        }
    }
    let mut out = vec![Vec::new()];
    rec(&mut Vec::new(), limit, &mut out);
    out
}

/// Every ordered branch list with at most `limit` non-root vertices.
fn branch_lists(limit: u64) -> Vec<Vec<Vec<u32>>> {
    let vecs = branch_vectors(limit);
    let mut out = Vec::new();
    fn rec(vecs: &[Vec<u32>], left: u64, cur: &mut Vec<Vec<u32>>, out: &mut Vec<Vec<Vec<u32>>>) {
        for v in vecs {
            let p = branch_photons(v);
            if p <= left {
                cur.push(v.clone());
                out.push(cur.clone());
                rec(vecs, left - p, cur, out);
                cur.pop();
            }
        }
    }
    rec(&vecs, limit, &mut Vec::new(), &mut out);
    out
}

fn eps_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

fn c2_exact_oracle() -> Outcome {
    let lists = branch_lists(12);
    let mut worst = 0.0f64;
    let mut worst_tree = String::new();
    for b in &lists {
        let t = TreeSpec::BranchList(b.clone());
        let counts = success_counts(&ExplicitTree::from_spec(&t)).unwrap();
        for eps in eps_grid() {
            let d = (p_rec_general(&t, eps).p_rec - weigh_counts(&counts, eps)).abs();
            if d > worst {
                worst = d;
                worst_tree = format!("{t} at {eps}");
            }
        }
    }
    outcome(worst <= 1e-12, format!("{} trees x 19 eps, max |diff| {worst:.2e} {worst_tree}", lists.len()))
}

fn c3_monte_carlo() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for s in ["[(4,3),(4,2),(3,1)]", "[3,8,3]"] {
        let t = parse(s);
        for eps in [0.05, 0.1, 0.3] {
            let exact = p_rec_general(&t, eps).p_rec;
            let est = mc_p_rec(&t, eps, 1_000_000, 2024, 4).unwrap();
            let z = (est.estimate - exact) / est.std_err;
            ok &= z.abs() <= 4.0;
            lines.push(format!("{s}@{eps}: z={z:+.2}"));
        }
    }
    outcome(ok, lines.join(", "))
}

fn c4_symmetric_collapse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let depth = rng.gen_range(1..=3);
        let b: Vec<u32> = (0..depth).map(|_| rng.gen_range(1..=12)).collect();
        let t = TreeSpec::Symmetric(b);
        for i in 0..10 {
            let eps = 0.05 + 0.09 * i as f64;
            let d = (p_rec_symmetric(&t, eps).p_rec - p_rec_general(&t, eps).p_rec).abs();
            worst = worst.max(d);
        }
    }
    outcome(worst <= 1e-12, format!("1000 specs x 10 eps, max |diff| {worst:.2e}"))
}

fn c5_closed_forms() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=12u32 {
        for eps in eps_grid() {
            // Oracle: all N leaves must survive; the product is taken term by term.
            let oracle: f64 = (0..n).fold(1.0, |acc, _| acc * (1.0 - eps));
            let got = p_rec_general(&TreeSpec::Symmetric(vec![n]), eps).p_rec;
            worst = worst.max((got - oracle).abs() / oracle);
        }
    }
    let half = p_rec_general(&parse("[2,1]"), 0.5).p_rec;
    outcome(worst <= 4.0 * f64::EPSILON && half == 0.25, format!("star max rel diff {worst:.1e}, [2,1]@0.5 = {half}"))
}

fn c6_optimizer() -> Outcome {
    let sym = optimize_eps_eff(&SearchSpace::new(Family::Symmetric), 0.30).unwrap();
    let space = SearchSpace { nph_max: Some(100), ..SearchSpace::new(Family::SingleEmitter) };
    let stations: Vec<u32> = (30..=590).step_by(10).collect();
    let cfg = RepeaterConfig::reference(300.0, 1);
    let r = optimize_rate(&space, &cfg, &stations).unwrap();
    let ok = sym.best.tree == parse("[3,8,3]") && r.best.tree == parse("[(4,3),(4,2),(3,1)]");
    outcome(
        ok,
        format!(
            "eps_eff optimum {} ({:.4}); rate optimum {} at m={} with {:.1} Hz",
            sym.best.tree,
            1.0 - sym.best.value,
            r.best.tree,
            r.best.stations.unwrap(),
            r.best.value
        ),
    )
}

fn c7_heuristic() -> Outcome {
    let space = SearchSpace { nph_max: Some(100), ..SearchSpace::new(Family::BranchList) };
    let r = optimize_eps_eff(&space, 0.35).unwrap();
    let reference = 1.0 - p_rec_ordered(&[vec![10, 3], vec![10, 3]], 0.35, BranchOrder::Best).0;
    let got = 1.0 - r.best.value;
    outcome(got <= reference, format!("{} eps_eff {got:.5} vs [(10,3),(10,3)] {reference:.5}", r.best.tree))
}

/// Criterion 8; also hands back generation times for criterion 9.
fn c8_schedules(times: &mut Vec<GenerationTime>) -> Outcome {
    let space = SearchSpace { nph_max: Some(40), b_max: 40, ..SearchSpace::new(Family::SingleEmitter) };
    let trees = family_trees(&space).unwrap();
    let mut failures = Vec::new();
    let mut undetected = Vec::new();
    let mut mutations = 0usize;
    for t in &trees {
        let p = match build_program(t, Variant::Modified, 500) {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("{t}: {e}"));
                continue;
            }
        };
        match simulate_program(&p, p.min_tau_del) {
            Ok((_, g)) if verify_target(&g, &p.explicit).ok => {}
            Ok((_, g)) => failures.push(format!("{t}: {}", verify_target(&g, &p.explicit).diagnostic())),
            Err(e) => failures.push(format!("{t}: {e}")),
        }
        times.push(generation_time(&p).unwrap());
        let mut muts: Vec<Mutation> = p.links.iter().filter(|l| l.target.is_some()).map(|l| Mutation::Drop(l.arrival)).collect();
        let mut passes: Vec<(usize, usize)> =
            p.links.iter().filter(|l| l.target.is_some()).map(|l| (l.arrival.photon, l.arrival.pass)).collect();
        passes.dedup();
        muts.extend(passes.into_iter().map(|(photon, pass)| Mutation::Merge { photon, pass }));
        for m in muts {
            mutations += 1;
            let still_ok = p
                .mutate(m)
                .and_then(|q| simulate_program(&q, q.min_tau_del).map(|(_, g)| verify_target(&g, &q.explicit).ok))
                .unwrap_or(false);
            if still_ok {
                undetected.push(format!("{t}: {m:?}"));
            }
        }
    }
    let ok = failures.is_empty() && undetected.is_empty();
    let mut detail = format!("{} trees, {} mutations", trees.len(), mutations);
    if !ok {
        detail += &format!("; failures {:?}; undetected {:?}", &failures[..failures.len().min(3)], &undetected[..undetected.len().min(3)]);
    }
    outcome(ok, detail)
}

fn c9_generation_time(times: &[GenerationTime]) -> Outcome {
    let bad = times.iter().filter(|g| {
        let [t1, t2, t3] = g.tau.expect("three-step program");
        g.t_tree != 2 * t1.max(t2) + t2 + t3 || g.tau_del != t1.max(t2)
    });
    let n = bad.count();
    outcome(n == 0 && !times.is_empty(), format!("{} programs, {n} violations", times.len()))
}

fn c10_rate_units() -> Outcome {
    let mut notes = Vec::new();
    let f0 = secret_fraction(0.0);
    let raw = |q: f64| 1.0 - binary_entropy(q) - q - (1.0 - q) * binary_entropy((1.0 - 1.5 * q) / (1.0 - q));
    let (mut lo, mut hi) = (0.05, 0.2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if raw(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q_star = 0.5 * (lo + hi);
    notes.push(format!("f(0)={f0}, Q*={q_star:.5}"));
    let mut ok = f0 == 1.0 && (0.125..=0.127).contains(&q_star) && secret_fraction(q_star + 1e-6) == 0.0;
    let tree = parse("[(4,3),(4,2),(3,1)]");
    let sched = ScheduleOutputs { tau_del_s: 1e-6, t_tree_s: 3e-6, emitters: 1 };
    for m in 1..=10 {
        let r = rate(&tree, &RepeaterConfig::reference(100.0, m), &sched).unwrap();
        ok &= r.p_succ == r.p_rec.powi(m as i32 + 1) && (r.recompute() - r.rate).abs() <= 1e-12 * r.rate.abs();
    }
    let mut monotone = true;
    for m in [1u32, 10, 100] {
        let cfg = RepeaterConfig::reference(300.0, m);
        let series: Vec<f64> = (0..50).map(|i| channel_eps(&cfg, i as f64 * 1e-6)).collect();
        monotone &= series.windows(2).all(|w| w[1] > w[0]);
    }
    for tau in [0.0, 1e-6, 1e-4] {
        let series: Vec<f64> = [1000u32, 300, 100, 30, 10, 3, 1]
            .iter()
            .map(|&m| channel_eps(&RepeaterConfig::reference(300.0, m), tau))
            .collect();
        monotone &= series.windows(2).all(|w| w[1] > w[0]);
    }
    ok &= monotone;
    notes.push(format!("P_succ identity m<=10, channel loss monotone: {monotone}"));
    outcome(ok, notes.join("; "))
}

fn c11_budget_sweep() -> Outcome {
    let base = SearchSpace { nph_max: Some(999), b_max: 999, branch_cap: 999, rounds: 3, ..SearchSpace::default() };
    let sym = photon_budget_sweep(&SearchSpace { family: Family::Symmetric, ..base.clone() }, 0.1).unwrap();
    let asym = photon_budget_sweep(&SearchSpace { family: Family::BranchList, ..base }, 0.1).unwrap();
    let mut ok = true;
    let mut compared = 0;
    let mut ratio_1e4 = None;
    for a in asym.bins.iter().filter(|b| b.hi <= 1e-2 * (1.0 + 1e-9) && b.lo > 0.0) {
        if let Some(s) = sym.bins.iter().find(|s| (s.lo - a.lo).abs() <= 1e-12 * a.lo) {
            compared += 1;
            ok &= a.mean_photons < s.mean_photons;
            if a.lo <= 1e-4 && 1e-4 < a.hi {
                ratio_1e4 = Some(a.mean_photons / s.mean_photons);
            }
        }
    }
    ok &= compared > 0;
    outcome(ok, format!("{compared} shared bins below 1e-2, asym/sym photons near 1e-4: {ratio_1e4:.3?}"))
}

fn main() {
    let mut times = Vec::new();
    type Check<'a> = (usize, u64, Box<dyn FnOnce() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        (1, 1, Box::new(c1_photon_counts)),
        (2, 60, Box::new(c2_exact_oracle)),
        (3, 120, Box::new(c3_monte_carlo)),
        (4, 10, Box::new(c4_symmetric_collapse)),
        (5, 1, Box::new(c5_closed_forms)),
        (6, 600, Box::new(c6_optimizer)),
        (7, 300, Box::new(c7_heuristic)),
        (8, 120, Box::new(|| c8_schedules(&mut times))),
    ];
    let mut all_ok = true;
    let mut run = |id: usize, budget: u64, f: Box<dyn FnOnce() -> Outcome + '_>| {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let pass = o.ok && in_time;
        all_ok &= pass;
        println!(
            "criterion {id:>2}: {} ({:.2?} of {budget} s{}) {}",
            if pass { "PASS" } else { "FAIL" },
            took,
            if in_time { "" } else { ", over budget" },
            o.detail
        );
    };
    for (id, budget, f) in checks {
        run(id, budget, f);
    }
    run(9, 1, Box::new(|| c9_generation_time(&times)));
    run(10, 10, Box::new(c10_rate_units));
    run(11, 600, Box::new(c11_budget_sweep));
    if !all_ok {
        std::process::exit(1);
    }
}
