use criterion::{black_box, criterion_group, criterion_main, Criterion};

use ltc_core::schedule::{build_program, simulate_program, verify_target, Variant};
use ltc_core::search::{optimize_eps_eff, optimize_rate, Family, SearchSpace};
use ltc_core::{exact_p_rec, p_rec_general, p_rec_ordered, BranchOrder, RepeaterConfig, TreeSpec};

fn tree(s: &str) -> TreeSpec {
    s.parse().unwrap()
}

fn recovery(c: &mut Criterion) {
    let t = tree("[(4,3),(4,2),(3,1)]");
    c.bench_function("p_rec_general", |b| b.iter(|| p_rec_general(black_box(&t), 0.1)));
    let b4 = tree("[(9,4),(8,3),(6,2),(5,1)]").branch_list();
    c.bench_function("p_rec_best_order_4", |b| b.iter(|| p_rec_ordered(black_box(&b4), 0.2, BranchOrder::Best)));
    let small = tree("[(2,2),(2,2),(1,2)]");
    c.bench_function("exact_p_rec_15", |b| b.iter(|| exact_p_rec(black_box(&small), 0.2)));
}

fn schedule(c: &mut Criterion) {
    let t = tree("[(4,3),(4,2),(3,1)]");
    c.bench_function("build_and_verify", |b| {
        b.iter(|| {
            let p = build_program(black_box(&t), Variant::Modified, 500).unwrap();
            let (_, g) = simulate_program(&p, p.min_tau_del).unwrap();
            verify_target(&g, &p.explicit).ok
        })
    });
}

fn search(c: &mut Criterion) {
    let mut g = c.benchmark_group("search");
    g.sample_size(10);
    let sym = SearchSpace { k_max: 3, nph_max: Some(100), ..SearchSpace::new(Family::Symmetric) };
    g.bench_function("symmetric_eps_eff", |b| b.iter(|| optimize_eps_eff(&sym, 0.3).unwrap()));
    let asym = SearchSpace { nph_max: Some(100), ..SearchSpace::new(Family::BranchList) };
    g.bench_function("branch_list_eps_eff", |b| b.iter(|| optimize_eps_eff(&asym, 0.3).unwrap()));
    let fam = SearchSpace { nph_max: Some(40), ..SearchSpace::new(Family::SingleEmitter) };
    let cfg = RepeaterConfig::reference(300.0, 1);
    g.bench_function("single_emitter_rate", |b| b.iter(|| optimize_rate(&fam, &cfg, &[100, 200, 300]).unwrap()));
    g.finish();
}

criterion_group!(benches, recovery, schedule, search);
criterion_main!(benches);
