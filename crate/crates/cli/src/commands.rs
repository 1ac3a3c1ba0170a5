use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use ltc_core::repeater::{baseline_outputs, preset, CoherenceModel};
use ltc_core::schedule::{layout_time, verify_state, Bin, EventKind};
use ltc_core::sim::ENUMERATION_BOUND;
use ltc_core::{
    best_rate_per_station, build_program, exact_p_rec, generation_time, mc_p_rec, optimize_eps_eff, optimize_rate,
    p_rec_general, p_rec_ordered, photon_budget_sweep, rate, simulate_program, verify_target, Family, LossModel,
    RepeaterConfig, SearchSpace, TreeSpec, Variant,
};

use crate::args::{Cli, Coherence, Command, LinkArgs, Objective, SpaceArgs, Timing};
use crate::output::{emit, float_grid, int_range, RunManifest};
use crate::{reproduce, ValidationFailure};

pub fn run(mut cli: Cli) -> Result<()> {
    if let Some(path) = cli.from_manifest.take() {
        let m = RunManifest::load(&path)?;
        let mut params = m.params;
        params.out = cli.out.take();
        return run(params);
    }
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    // A second build in the same process (tests) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    cli.workers = Some(workers);
    if let Some(t) = &cli.tree {
        cli.tree = Some(load_tree(t)?.to_string());
    }
    if let Some(p) = cli.reproduce {
        return reproduce::run(&cli, p);
    }
    let Some(command) = cli.command.clone() else {
        bail!("a subcommand or --reproduce is required (see --help)");
    };
    match command {
        Command::Prec { grid, order } => prec(&cli, grid.as_deref(), order.into()),
        Command::McVerify { samples } => mc_verify(&cli, samples),
        Command::Rate { link, stations, variant, timing } => rate_cmd(&cli, &link, &stations, &variant, timing),
        Command::Optimize { space, link, objective, stations, per_station } => {
            optimize(&cli, &space, &link, objective, &stations, per_station)
        }
        Command::Sweep { space, raw } => sweep(&cli, &space, raw),
        Command::Schedule { variant, beta, tau_ph } => schedule(&cli, &variant, beta, tau_ph),
    }
}

/// A tree from a file, a JSON document or table notation.
pub fn load_tree(arg: &str) -> Result<TreeSpec> {
    let path = std::path::Path::new(arg);
    let text = if !arg.trim_start().starts_with(['{', '[']) && path.exists() {
        std::fs::read_to_string(path).with_context(|| format!("cannot read {arg}"))?
    } else {
        arg.to_string()
    };
    let text = text.trim();
    let tree = if text.starts_with('{') { TreeSpec::from_json(text)? } else { text.parse()? };
    Ok(tree)
}

fn tree(cli: &Cli) -> Result<TreeSpec> {
    load_tree(cli.tree.as_deref().context("--tree is required")?)
}

pub fn search_space(s: &SpaceArgs) -> Result<SearchSpace> {
    Ok(SearchSpace {
        family: s.family.parse()?,
        k_min: s.k_min,
        k_max: s.k_max,
        b_max: s.b_max,
        nph_max: (s.nph_max > 0).then_some(s.nph_max),
        branch_cap: s.branch_cap,
        delta: s.delta,
        moved_max: s.moved_max,
        seeds: s.seeds,
        rounds: s.rounds,
        order: s.order.into(),
    })
}

pub fn repeater_config(cli: &Cli, link: &LinkArgs) -> Result<RepeaterConfig> {
    let mut c = RepeaterConfig {
        length_km: link.length,
        eta_d: link.eta_d,
        l_att_km: link.l_att,
        eps_r: link.eps_r,
        beta: link.beta,
        tau_ph_s: link.tau_ph,
        tau_cz_ph: link.tau_cz,
        ..Default::default()
    };
    if let Some(name) = &cli.preset {
        c = c.with_preset(&preset(name)?);
    }
    if let Some(t) = link.t_coh {
        c.t_coh_s = t;
        c.coherence = CoherenceModel::Exponential;
    }
    match link.coherence {
        Some(Coherence::None) => c.coherence = CoherenceModel::None,
        Some(Coherence::Exponential) => c.coherence = CoherenceModel::Exponential,
        None => {}
    }
    c.validate()?;
    Ok(c)
}

fn joined(xs: impl Iterator<Item = f64>) -> String {
    xs.map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
struct PrecRow {
    tree: String,
    eps: f64,
    p_rec: f64,
    eps_eff: f64,
    /// Branches in the order they are measured.
    order: String,
    p_x: String,
    p_z: String,
    p_zind: String,
}

fn prec(cli: &Cli, grid: Option<&str>, order: ltc_core::BranchOrder) -> Result<()> {
    let t = tree(cli)?;
    let mut eps = cli.eps.clone();
    if let Some(g) = grid {
        eps.extend(float_grid(g)?);
    }
    if eps.is_empty() {
        bail!("no loss values: pass --eps or --grid");
    }
    let mut rows = Vec::new();
    for e in eps {
        LossModel::new(e)?;
        let (p_rec, ordered) = p_rec_ordered(&t.branch_list(), e, order);
        let ordered = TreeSpec::BranchList(ordered);
        let prof = p_rec_general(&ordered, e);
        rows.push(PrecRow {
            tree: t.to_string(),
            eps: e,
            p_rec,
            eps_eff: 1.0 - p_rec,
            order: ordered.to_string(),
            p_x: joined(prof.branches.iter().map(|b| b.p_x)),
            p_z: joined(prof.branches.iter().map(|b| b.p_z)),
            p_zind: joined(prof.branches.iter().map(|b| b.p_zind)),
        });
    }
    emit(cli, &RunManifest::new("prec", cli), &[], &rows)
}

#[derive(Serialize)]
struct McRow {
    tree: String,
    eps: f64,
    analytic: f64,
    exact: Option<f64>,
    mc: f64,
    std_err: f64,
    z: f64,
    samples: u64,
    seed: u64,
    workers: usize,
}

fn mc_verify(cli: &Cli, samples: u64) -> Result<()> {
    let t = tree(cli)?;
    let eps = if cli.eps.is_empty() { vec![0.05, 0.1, 0.3] } else { cli.eps.clone() };
    let workers = cli.workers.unwrap_or(1);
    let mut rows = Vec::new();
    for e in eps {
        LossModel::new(e)?;
        let analytic = p_rec_general(&t, e).p_rec;
        let exact = if (t.photon_count() as usize) <= ENUMERATION_BOUND + 1 { Some(exact_p_rec(&t, e)?) } else { None };
        let mc = mc_p_rec(&t, e, samples, cli.seed, workers)?;
        let diff = mc.estimate - analytic;
        let z = if mc.std_err > 0.0 {
            diff / mc.std_err
        } else if diff.abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        rows.push(McRow {
            tree: t.to_string(),
            eps: e,
            analytic,
            exact,
            mc: mc.estimate,
            std_err: mc.std_err,
            z,
            samples,
            seed: cli.seed,
            workers,
        });
    }
    emit(cli, &RunManifest::new("mc-verify", cli), &[], &rows)?;
    if let Some(r) = rows.iter().find(|r| r.z.abs() > 4.0) {
        return Err(ValidationFailure(format!("Monte Carlo z-score {:.2} at eps {}", r.z, r.eps)).into());
    }
    if let Some(r) = rows.iter().find(|r| r.exact.is_some_and(|x| (x - r.analytic).abs() > 1e-12)) {
        return Err(ValidationFailure(format!("exact enumeration disagrees at eps {}", r.eps)).into());
    }
    Ok(())
}

fn rate_cmd(cli: &Cli, link: &LinkArgs, stations: &str, variant: &str, timing: Timing) -> Result<()> {
    let t = tree(cli)?;
    let config = repeater_config(cli, link)?;
    let variant: Variant = variant.parse()?;
    let sched = match timing {
        Timing::Layout => layout_time(&t, variant, config.beta, true)?.outputs(config.tau_ph_s),
        Timing::Permissive => layout_time(&t, variant, config.beta, false)?.outputs(config.tau_ph_s),
        Timing::Baseline => baseline_outputs(&t, &config),
    };
    let rows = int_range(stations)?
        .into_iter()
        .map(|m| rate(&t, &RepeaterConfig { stations: m, ..config.clone() }, &sched))
        .collect::<ltc_core::Result<Vec<_>>>()?;
    emit(cli, &RunManifest::new("rate", cli), &[], &rows)
}

/// One search winner; the keys that do not apply stay empty.
#[derive(Serialize)]
pub struct OptRow {
    pub curve: String,
    pub eps: Option<f64>,
    pub length_km: Option<f64>,
    pub stations: Option<u32>,
    pub tree: String,
    pub photons: u64,
    pub objective: &'static str,
    pub value: f64,
}

pub fn eps_eff_rows(curve: &str, space: &SearchSpace, eps: &[f64]) -> Result<Vec<OptRow>> {
    eps.iter()
        .map(|&e| {
            let r = optimize_eps_eff(space, e)?;
            Ok(OptRow {
                curve: curve.to_string(),
                eps: Some(e),
                length_km: None,
                stations: None,
                tree: r.best.tree.to_string(),
                photons: r.best.photons,
                objective: "eps_eff",
                value: 1.0 - r.best.value,
            })
        })
        .collect()
}

pub fn rate_rows(curve: &str, space: &SearchSpace, config: &RepeaterConfig, stations: &[u32], per_station: bool) -> Result<Vec<OptRow>> {
    let row = |c: ltc_core::search::Candidate| OptRow {
        curve: curve.to_string(),
        eps: None,
        length_km: Some(config.length_km),
        stations: c.stations,
        tree: c.tree.to_string(),
        photons: c.photons,
        objective: "rate",
        value: c.value,
    };
    if per_station {
        Ok(best_rate_per_station(space, config, stations)?.into_iter().map(row).collect())
    } else {
        Ok(vec![row(optimize_rate(space, config, stations)?.best)])
    }
}

fn optimize(cli: &Cli, s: &SpaceArgs, link: &LinkArgs, objective: Objective, stations: &str, per_station: bool) -> Result<()> {
    let space = search_space(s)?;
    let rows = match objective {
        Objective::EpsEff => {
            if cli.eps.is_empty() {
                bail!("--eps is required for the eps-eff objective");
            }
            eps_eff_rows(&s.family, &space, &cli.eps)?
        }
        Objective::Rate => {
            let config = repeater_config(cli, link)?;
            rate_rows(&s.family, &space, &config, &int_range(stations)?, per_station)?
        }
    };
    emit(cli, &RunManifest::new("optimize", cli), &[], &rows)
}

#[derive(Serialize)]
struct BinRow {
    family: String,
    eps: f64,
    lo: f64,
    hi: f64,
    members: usize,
    mean_photons: f64,
}

#[derive(Serialize)]
struct RawRow {
    family: String,
    eps: f64,
    photons: u64,
    tree: String,
    eps_eff: f64,
}

fn sweep(cli: &Cli, s: &SpaceArgs, raw: bool) -> Result<()> {
    let space = search_space(s)?;
    if space.family != Family::Symmetric && space.family != Family::BranchList {
        bail!("the sweep covers the symmetric and branch-list families");
    }
    let eps = if cli.eps.is_empty() { vec![0.1] } else { cli.eps.clone() };
    let manifest = RunManifest::new("sweep", cli);
    let sweeps = eps.iter().map(|&e| photon_budget_sweep(&space, e)).collect::<ltc_core::Result<Vec<_>>>()?;
    if raw {
        let rows: Vec<RawRow> = sweeps
            .iter()
            .flat_map(|w| {
                w.raw.iter().map(|p| RawRow {
                    family: s.family.clone(),
                    eps: w.eps,
                    photons: p.photons,
                    tree: p.tree.to_string(),
                    eps_eff: p.eps_eff,
                })
            })
            .collect();
        emit(cli, &manifest, &[], &rows)
    } else {
        let rows: Vec<BinRow> = sweeps
            .iter()
            .flat_map(|w| {
                w.bins.iter().map(|b| BinRow {
                    family: s.family.clone(),
                    eps: w.eps,
                    lo: b.lo,
                    hi: b.hi,
                    members: b.members,
                    mean_photons: b.mean_photons,
                })
            })
            .collect();
        emit(cli, &manifest, &[], &rows)
    }
}

#[derive(Serialize)]
struct EventRow {
    event: &'static str,
    qubit: String,
    bin: &'static str,
    time: u64,
    time_s: f64,
    emitter: usize,
    pass: Option<usize>,
}

fn schedule(cli: &Cli, variant: &str, beta: u64, tau_ph: f64) -> Result<()> {
    let t = tree(cli)?;
    let p = build_program(&t, variant.parse()?, beta)?;
    let (tl, g) = simulate_program(&p, p.min_tau_del)?;
    let target = verify_target(&g, &p.explicit);
    let state = verify_state(&p, &tl);
    let timing = generation_time(&p).ok();
    let rows: Vec<EventRow> = tl
        .events
        .iter()
        .map(|e| EventRow {
            event: e.kind.name(),
            qubit: match (e.kind, e.photon) {
                (EventKind::Prepare, _) | (_, None) => format!("e{}", e.emitter),
                (_, Some(ph)) => format!("p{ph}"),
            },
            bin: match e.bin {
                Some(Bin::Early) => "early",
                Some(Bin::Late) => "late",
                None => "",
            },
            time: e.time,
            time_s: e.time as f64 * tau_ph,
            emitter: e.emitter,
            pass: e.pass,
        })
        .collect();
    let ok = target.ok && state.ok;
    let verdict = json!({
        "ok": ok,
        "target": target.diagnostic(),
        "state": state.reason,
        "photons": p.photons.len(),
        "emitters": p.emitters,
        "tau_del": tl.tau_del,
        "end_time": tl.end_time,
        "steps": timing.as_ref().and_then(|g| g.tau),
        "t_tree": timing.as_ref().map(|g| g.t_tree),
    });
    eprintln!("verdict: {}", if ok { "ok" } else { "FAILED" });
    emit(cli, &RunManifest::new("schedule", cli), &[("verdict", verdict)], &rows)?;
    if !ok {
        return Err(ValidationFailure(format!("{}; {}", target.diagnostic(), state.reason)).into());
    }
    Ok(())
}
