//! Searches over tree geometries: exhaustive symmetric scans, a local
//! neighbourhood search for branch lists, rate maximization over the
//! generable families and the photon-budget sweep.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::recovery::{p_rec_value, BranchOrder};
use crate::repeater::{baseline_outputs, rate, rate_value, RateReport, RepeaterConfig, ScheduleOutputs};
use crate::schedule::{layout, layout_time, Variant};
use crate::tree::{branch_photons, Branch, TreeSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Symmetric,
    /// Depth-three branch lists one emitter can produce.
    SingleEmitter,
    /// Depth-three branch lists two emitters can produce.
    TwoEmitter,
    /// Any branch list, searched locally.
    BranchList,
}

impl Family {
    pub fn variant(self) -> Option<Variant> {
        match self {
            Family::SingleEmitter => Some(Variant::Modified),
            Family::TwoEmitter => Some(Variant::TwoEmitter),
            _ => None,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Family::Symmetric),
            "single-emitter" => Ok(Family::SingleEmitter),
            "two-emitter" => Ok(Family::TwoEmitter),
            "branch-list" => Ok(Family::BranchList),
            _ => Err(Error::InvalidParameter(format!("unknown family {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchSpace {
    pub family: Family,
    /// Depth bounds of symmetric trees, root layer excluded.
    pub k_min: usize,
    pub k_max: usize,
    pub b_max: u32,
    pub nph_max: Option<u64>,
    pub branch_cap: usize,
    /// Neighbourhood step for the local search.
    pub delta: u32,
    /// Branches a joint perturbation may move at once.
    pub moved_max: usize,
    /// Symmetric trees, best first, that seed the local search.
    pub seeds: usize,
    /// Expansion rounds of the local search.
    pub rounds: usize,
    pub order: BranchOrder,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            family: Family::Symmetric,
            k_min: 1,
            k_max: 3,
            b_max: 20,
            nph_max: Some(100),
            branch_cap: 8,
            delta: 2,
            moved_max: 4,
            seeds: 1,
            rounds: 1,
            order: BranchOrder::Best,
        }
    }
}

impl SearchSpace {
    pub fn new(family: Family) -> Self {
        SearchSpace { family, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidParameter("at least one expansion round".into()));
        }
        if self.k_min > self.k_max {
            return Err(Error::InvalidParameter("minimum depth exceeds the maximum".into()));
        }
        if self.k_max == 0 || self.b_max == 0 || self.branch_cap == 0 || self.nph_max == Some(0) {
            return Err(Error::InvalidParameter("search caps must be at least 1".into()));
        }
        // Without a photon cap every branching vector up to `b_max` is kept.
        if self.nph_max.is_none() && (self.b_max as f64).powi(self.k_max as i32) > 1e7 {
            return Err(Error::InvalidParameter("uncapped space is too large; set a photon cap".into()));
        }
        if !(1..=2).contains(&self.delta) {
            return Err(Error::InvalidParameter("neighbourhood step must be 1 or 2".into()));
        }
        Ok(())
    }

    fn fits(&self, photons: u64) -> bool {
        self.nph_max.is_none_or(|cap| photons <= cap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub tree: TreeSpec,
    pub value: f64,
    pub photons: u64,
    /// Station count, for rate searches.
    pub stations: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub best: Candidate,
    /// Next best candidates in ranking order.
    pub runners_up: Vec<Candidate>,
    pub evaluations: u64,
    /// Set when every candidate scored zero.
    pub all_zero: bool,
}

const RUNNERS_UP: usize = 10;

/// Total ranking: larger value, then fewer photons, then the smaller spec.
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.value
        .total_cmp(&a.value)
        .then(a.photons.cmp(&b.photons))
        .then_with(|| a.tree.cmp(&b.tree))
        .then(a.stations.cmp(&b.stations))
}

fn collect(mut all: Vec<Candidate>, evaluations: u64) -> Result<SearchResult> {
    all.sort_by(rank);
    let mut it = all.into_iter();
    let best = it.next().ok_or(Error::EmptySpace)?;
    let runners_up: Vec<Candidate> = it.take(RUNNERS_UP).collect();
    let all_zero = best.value == 0.0;
    Ok(SearchResult { best, runners_up, evaluations, all_zero })
}

/// Every symmetric branching vector within the caps, shorter vectors first,
/// then lexicographic.
pub fn enumerate_symmetric(space: &SearchSpace) -> Vec<TreeSpec> {
    fn rec(b: &mut Vec<u32>, k: usize, space: &SearchSpace, out: &mut Vec<TreeSpec>) {
        if b.len() == k {
            out.push(TreeSpec::Symmetric(b.clone()));
            return;
        }
        for x in 1..=space.b_max {
            b.push(x);
            // Photon counts only grow with entries and depth.
            let fits = space.fits(branch_photons(b));
            if fits {
                rec(b, k, space, out);
            }
            b.pop();
            if !fits {
                break;
            }
        }
    }
    let mut out = Vec::new();
    for k in space.k_min.max(1)..=space.k_max {
        rec(&mut Vec::with_capacity(k), k, space, &mut out);
    }
    out
}

/// Branch list with branches in a fixed order, so reorderings compare equal.
fn canonical(branches: &[Branch]) -> Vec<Branch> {
    let mut v = branches.to_vec();
    v.sort_by(|a, b| b.cmp(a));
    v
}

/// Trees one step of size `1..=delta` away in a single branch entry.
pub fn neighborhood(tree: &TreeSpec, delta: u32) -> Vec<TreeSpec> {
    let base = canonical(&tree.branch_list());
    let own = base.clone();
    let mut seen = BTreeSet::new();
    for (i, br) in base.iter().enumerate() {
        for j in 0..br.len() {
            for d in 1..=delta as i64 {
                for sign in [-1i64, 1] {
                    let v = br[j] as i64 + sign * d;
                    if v < 1 {
                        continue;
                    }
                    let mut next = base.clone();
                    next[i][j] = v as u32;
                    let c = canonical(&next);
                    if c != own {
                        seen.insert(c);
                    }
                }
            }
        }
    }
    seen.into_iter().map(TreeSpec::BranchList).collect()
}

/// Every branch list reached by moving all entries of up to `moved_max`
/// branches by at most `delta` at once, entries kept at 1 or more and the
/// branch count fixed. Results are canonical, within the photon cap, and
/// exclude the tree itself.
pub fn perturbations(tree: &TreeSpec, delta: u32, nph_max: Option<u64>, moved_max: usize) -> Vec<Vec<Branch>> {
    let base = canonical(&tree.branch_list());
    let mut out = BTreeSet::new();
    visit_perturbations(tree, delta, nph_max, moved_max, |b| {
        out.insert(canonical(b));
    });
    out.remove(&base);
    out.into_iter().collect()
}

/// Identical branches of a tree: the options for each copy with their photon
/// cost, the number of copies, and the original branch.
type BranchGroup = (Vec<(Branch, u64)>, usize, Branch);

/// Calls `f` on every joint perturbation (the tree itself included), each
/// multiset of branches exactly once but not in canonical order.
pub fn visit_perturbations(tree: &TreeSpec, delta: u32, nph_max: Option<u64>, moved_max: usize, mut f: impl FnMut(&[Branch])) {
    let base = canonical(&tree.branch_list());
    // Identical branches are perturbed as a multiset.
    let mut groups: Vec<BranchGroup> = Vec::new();
    for (i, br) in base.iter().enumerate() {
        if i > 0 && base[i - 1] == *br {
            groups.last_mut().unwrap().1 += 1;
            continue;
        }
        let mut options: Vec<Branch> = vec![Vec::new()];
        for &x in br {
            let lo = x.saturating_sub(delta).max(1);
            options = options
                .into_iter()
                .flat_map(|o| {
                    (lo..=x + delta).map(move |y| {
                        let mut n = o.clone();
                        n.push(y);
                        n
                    })
                })
                .collect();
        }
        options.sort_by(|a, b| b.cmp(a));
        let costed = options.into_iter().map(|o| {
            let c = branch_photons(&o);
            (o, c)
        });
        groups.push((costed.collect(), 1, br.clone()));
    }
    let budget = nph_max.unwrap_or(u64::MAX).saturating_sub(1);
    let cheapest: Vec<u64> = groups.iter().map(|g| g.0.iter().map(|o| o.1).min().unwrap_or(0)).collect();
    // Cheapest completion of the groups from index `g` on.
    let mut rest = vec![0u64; groups.len() + 1];
    for g in (0..groups.len()).rev() {
        rest[g] = rest[g + 1].saturating_add(cheapest[g] * groups[g].1 as u64);
    }
    if rest[0] > budget {
        return;
    }
    struct Walk<'a> {
        groups: &'a [BranchGroup],
        cheapest: &'a [u64],
        rest: &'a [u64],
        budget: u64,
        picked: Vec<Branch>,
    }
    #[allow(clippy::too_many_arguments)]
    fn go(w: &mut Walk, g: usize, left: usize, from: usize, used: u64, moves: usize, f: &mut dyn FnMut(&[Branch])) {
        if g == w.groups.len() {
            f(&w.picked);
            return;
        }
        if left == 0 {
            let next = w.groups.get(g + 1).map_or(0, |n| n.1);
            go(w, g + 1, next, 0, used, moves, f);
            return;
        }
        // Remaining slots of this group plus all later groups, at their cheapest.
        let after = w.cheapest[g] * (left as u64 - 1) + w.rest[g + 1];
        for i in from..w.groups[g].0.len() {
            let (o, c) = &w.groups[g].0[i];
            let moved = usize::from(*o != w.groups[g].2);
            if used + c + after > w.budget || moved > moves {
                continue;
            }
            w.picked.push(o.clone());
            go(w, g, left - 1, i, used + c, moves - moved, f);
            w.picked.pop();
        }
    }
    let mut w = Walk { groups: &groups, cheapest: &cheapest, rest: &rest, budget, picked: Vec::with_capacity(base.len()) };
    let first = groups.first().map_or(0, |g| g.1);
    go(&mut w, 0, first, 0, 0, moved_max, &mut f);
}

fn p_rec_of(tree: &TreeSpec, eps: f64, order: BranchOrder) -> f64 {
    p_rec_value(&tree.branch_list(), eps, order)
}

fn eval_recovery(tree: TreeSpec, eps: f64, order: BranchOrder) -> Candidate {
    let value = p_rec_of(&tree, eps, order);
    let photons = tree.photon_count();
    Candidate { tree, value, photons, stations: None }
}

/// Members of a generable family within the caps: up to `branch_cap`
/// branches of shape `(c, n)` with `n <= b_max`.
pub fn family_trees(space: &SearchSpace) -> Result<Vec<TreeSpec>> {
    let variant = space
        .family
        .variant()
        .ok_or_else(|| Error::InvalidParameter("only the generable families can be listed".into()))?;
    // Branch slots around the root, and sons of the roomiest slot.
    let (slots, max_sons) = match variant {
        Variant::TwoEmitter => (8, 8),
        _ => (4, 4),
    };
    let cap = space.branch_cap.min(slots);
    let shapes: Vec<Branch> = (1..=max_sons.min(space.b_max))
        .rev()
        .flat_map(|c| (1..=space.b_max).rev().map(move |n| vec![c, n]))
        .collect();
    let mut out = Vec::new();
    let mut current: Vec<Branch> = Vec::new();
    fn rec(
        shapes: &[Branch],
        from: usize,
        current: &mut Vec<Branch>,
        space: &SearchSpace,
        variant: Variant,
        cap: usize,
        out: &mut Vec<TreeSpec>,
    ) {
        if !current.is_empty() {
            let t = TreeSpec::BranchList(current.clone());
            if layout(&t, variant, true).is_ok() {
                out.push(t);
            }
        }
        if current.len() == cap {
            return;
        }
        let used: u64 = 1 + current.iter().map(|b| branch_photons(b)).sum::<u64>();
        for i in from..shapes.len() {
            if space.fits(used + branch_photons(&shapes[i])) {
                current.push(shapes[i].clone());
                rec(shapes, i, current, space, variant, cap, out);
                current.pop();
            }
        }
    }
    rec(&shapes, 0, &mut current, space, variant, cap, &mut out);
    Ok(out)
}

/// Local search from the given seeds. The first round scores the seeds with
/// all their joint perturbations; later rounds expand the best trees found
/// so far by their single-entry neighbourhoods.
fn local_search(space: &SearchSpace, eps: f64, seeds: Vec<TreeSpec>, beam: usize) -> (Vec<Candidate>, u64) {
    let mut seen: BTreeMap<Vec<Branch>, Candidate> = BTreeMap::new();
    let admit = |t: &TreeSpec| space.fits(t.photon_count()) && t.branch_list().len() <= space.branch_cap.max(1);
    let mut frontier: Vec<TreeSpec> = seeds
        .iter()
        .flat_map(|s| perturbations(s, space.delta, space.nph_max, space.moved_max).into_iter().map(TreeSpec::BranchList))
        .chain(seeds.iter().cloned())
        .filter(admit)
        .collect();
    let mut evaluations = 0u64;
    for round in 1..=space.rounds {
        let fresh: Vec<TreeSpec> = frontier
            .iter()
            .filter(|t| !seen.contains_key(&canonical(&t.branch_list())))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        evaluations += fresh.len() as u64;
        let scored: Vec<Candidate> = fresh.into_par_iter().map(|t| eval_recovery(t, eps, space.order)).collect();
        for c in scored {
            seen.insert(canonical(&c.tree.branch_list()), c);
        }
        if round == space.rounds {
            break;
        }
        let mut ranked: Vec<&Candidate> = seen.values().collect();
        ranked.sort_by(|a, b| rank(a, b));
        frontier = ranked
            .iter()
            .take(beam)
            .flat_map(|c| neighborhood(&c.tree, space.delta))
            .filter(admit)
            .collect();
    }
    (seen.into_values().collect(), evaluations)
}

/// Beam width of the local search in [`optimize_eps_eff`].
const BEAM: usize = 16;

/// Minimizes the logical loss `1 - P_rec` (the value reported is `P_rec`).
pub fn optimize_eps_eff(space: &SearchSpace, eps: f64) -> Result<SearchResult> {
    space.validate()?;
    crate::recovery::LossModel::new(eps)?;
    match space.family {
        Family::Symmetric => {
            let trees = enumerate_symmetric(space);
            let n = trees.len() as u64;
            let all = trees.into_par_iter().map(|t| eval_recovery(t, eps, space.order)).collect();
            collect(all, n)
        }
        Family::SingleEmitter | Family::TwoEmitter => {
            let trees = family_trees(space)?;
            let n = trees.len() as u64;
            let all = trees.into_par_iter().map(|t| eval_recovery(t, eps, space.order)).collect();
            collect(all, n)
        }
        Family::BranchList => {
            let sym = optimize_eps_eff(&SearchSpace { family: Family::Symmetric, ..space.clone() }, eps)?;
            let seeds: Vec<TreeSpec> = std::iter::once(&sym.best)
                .chain(&sym.runners_up)
                .take(space.seeds.max(1))
                .map(|c| c.tree.canonicalize())
                .collect();
            let (all, n) = local_search(space, eps, seeds, BEAM);
            collect(all, n + sym.evaluations)
        }
    }
}

/// Rate of one tree at one station count, with timing from the family's
/// layout.
pub fn rate_for(tree: &TreeSpec, variant: Variant, config: &RepeaterConfig, stations: u32) -> Result<RateReport> {
    let g = layout_time(tree, variant, config.beta, true)?;
    let cfg = RepeaterConfig { stations, ..config.clone() };
    rate(tree, &cfg, &g.outputs(config.tau_ph_s))
}

/// Trees of a rate search together with their timing. Generable families
/// use the layout accounting; symmetric trees use the bottom-to-top stand-in
/// of [`baseline_outputs`].
fn rate_pool(space: &SearchSpace, config: &RepeaterConfig, stations: &[u32]) -> Result<Vec<(TreeSpec, ScheduleOutputs)>> {
    space.validate()?;
    config.validate()?;
    if stations.is_empty() {
        return Err(Error::InvalidParameter("station range is empty".into()));
    }
    if stations.contains(&0) {
        return Err(Error::InvalidParameter("the rate needs at least one station".into()));
    }
    match space.family {
        Family::Symmetric => Ok(enumerate_symmetric(space).into_iter().map(|t| {
            let s = baseline_outputs(&t, config);
            (t, s)
        }).collect()),
        Family::SingleEmitter | Family::TwoEmitter => {
            let variant = space.family.variant().expect("generable family");
            family_trees(space)?
                .into_par_iter()
                .map(|t| {
                    let s = layout_time(&t, variant, config.beta, true)?.outputs(config.tau_ph_s);
                    Ok((t, s))
                })
                .collect()
        }
        Family::BranchList => Err(Error::InvalidParameter("rate search needs a generable or symmetric family".into())),
    }
}

/// Best candidate of one tree for every station count.
fn rate_row(tree: &TreeSpec, sched: &ScheduleOutputs, config: &RepeaterConfig, stations: &[u32]) -> Vec<Candidate> {
    let branches = tree.branch_list();
    let photons = tree.photon_count();
    let mut cfg = config.clone();
    stations
        .iter()
        .map(|&m| {
            cfg.stations = m;
            let value = rate_value(&branches, photons, &cfg, sched);
            Candidate { tree: tree.clone(), value, photons, stations: Some(m) }
        })
        .collect()
}

/// Maximizes the repeater rate over the family and the station counts.
pub fn optimize_rate(space: &SearchSpace, config: &RepeaterConfig, stations: &[u32]) -> Result<SearchResult> {
    let pool = rate_pool(space, config, stations)?;
    let evaluations = (pool.len() * stations.len()) as u64;
    let best: Vec<Candidate> = pool
        .into_par_iter()
        .map(|(t, s)| {
            // Ties keep the smaller station count.
            rate_row(&t, &s, config, stations)
                .into_iter()
                .reduce(|a, b| if b.value > a.value { b } else { a })
                .expect("station range is not empty")
        })
        .collect();
    collect(best, evaluations)
}

/// The best tree at each station count, in the order given.
pub fn best_rate_per_station(space: &SearchSpace, config: &RepeaterConfig, stations: &[u32]) -> Result<Vec<Candidate>> {
    let pool = rate_pool(space, config, stations)?;
    let pick = |a: Vec<Candidate>, b: Vec<Candidate>| -> Vec<Candidate> {
        a.into_iter().zip(b).map(|(x, y)| if rank(&y, &x) == Ordering::Less { y } else { x }).collect()
    };
    pool.into_par_iter()
        .map(|(t, s)| rate_row(&t, &s, config, stations))
        .reduce_with(pick)
        .ok_or(Error::EmptySpace)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetPoint {
    pub photons: u64,
    pub tree: TreeSpec,
    pub eps_eff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetBin {
    /// Bin edges in `eps_eff`, lower inclusive.
    pub lo: f64,
    pub hi: f64,
    pub members: usize,
    pub mean_photons: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BudgetSweep {
    pub eps: f64,
    pub raw: Vec<BudgetPoint>,
    pub bins: Vec<BudgetBin>,
}

/// Bins per decade of `eps_eff` in [`photon_budget_sweep`].
pub const BINS_PER_DECADE: u32 = 2;

/// Best tree for each photon count in the space, then the mean photon count
/// per logarithmic `eps_eff` bin. Trees with `eps_eff = 0` share a bin at
/// zero; empty bins are left out.
pub fn photon_budget_sweep(space: &SearchSpace, eps: f64) -> Result<BudgetSweep> {
    space.validate()?;
    crate::recovery::LossModel::new(eps)?;
    let mut best: BTreeMap<u64, Candidate> = BTreeMap::new();
    let offer = |c: Candidate, best: &mut BTreeMap<u64, Candidate>| match best.get(&c.photons) {
        Some(b) if rank(b, &c) != Ordering::Greater => {}
        _ => {
            best.insert(c.photons, c);
        }
    };
    let sym: Vec<Candidate> = enumerate_symmetric(&SearchSpace { family: Family::Symmetric, ..space.clone() })
        .into_par_iter()
        .map(|t| eval_recovery(t, eps, space.order))
        .collect();
    for c in sym {
        offer(c, &mut best);
    }
    match space.family {
        Family::Symmetric => {}
        Family::SingleEmitter | Family::TwoEmitter => {
            for t in family_trees(space)? {
                offer(eval_recovery(t, eps, space.order), &mut best);
            }
        }
        Family::BranchList => {
            // Expand the best tree of every budget; keep whatever improves
            // any budget.
            let mut seen: BTreeSet<Vec<Branch>> = BTreeSet::new();
            // Joint perturbations of the symmetric optima, scored as they are
            // produced: there are far too many to hold at once.
            let seeds: Vec<TreeSpec> = best.values().map(|c| c.tree.clone()).filter(|t| t.branch_list().len() <= space.branch_cap).collect();
            let found: Vec<BTreeMap<u64, Candidate>> = seeds
                .par_iter()
                .map(|t| {
                    let mut local: BTreeMap<u64, Candidate> = BTreeMap::new();
                    visit_perturbations(t, space.delta, space.nph_max, space.moved_max, |b| {
                        let photons = 1 + b.iter().map(|x| branch_photons(x)).sum::<u64>();
                        let value = p_rec_value(b, eps, space.order);
                        let keep = local.get(&photons).is_none_or(|c| value >= c.value);
                        if keep {
                            let c = Candidate { tree: TreeSpec::BranchList(canonical(b)), value, photons, stations: None };
                            if local.get(&photons).is_none_or(|old| rank(&c, old) == Ordering::Less) {
                                local.insert(photons, c);
                            }
                        }
                    });
                    local
                })
                .collect();
            let mut frontier = Vec::new();
            for c in found.into_iter().flat_map(|m| m.into_values()) {
                if best.get(&c.photons).is_none_or(|b| rank(&c, b) == Ordering::Less) {
                    frontier.push(c.tree.clone());
                    offer(c, &mut best);
                }
            }
            // Then single-entry steps from whatever improved.
            for _ in 1..space.rounds {
                if frontier.is_empty() {
                    break;
                }
                let moves: Vec<Vec<Branch>> =
                    frontier.iter().flat_map(|t| neighborhood(t, space.delta)).map(|t| t.branch_list()).collect();
                let next: BTreeSet<Vec<Branch>> = moves
                    .into_iter()
                    .filter(|b| b.len() <= space.branch_cap && space.fits(1 + b.iter().map(|x| branch_photons(x)).sum::<u64>()))
                    .map(|b| canonical(&b))
                    .filter(|k| !seen.contains(k))
                    .collect();
                seen.extend(next.iter().cloned());
                let scored: Vec<Candidate> = next
                    .into_iter()
                    .collect::<Vec<_>>()
                    .into_par_iter()
                    .map(|b| eval_recovery(TreeSpec::BranchList(b), eps, space.order))
                    .collect();
                let mut improved = Vec::new();
                for c in scored {
                    let better = best.get(&c.photons).is_none_or(|b| rank(&c, b) == Ordering::Less);
                    if better {
                        improved.push(c.tree.clone());
                    }
                    offer(c, &mut best);
                }
                frontier = improved;
            }
        }
    }
    let raw: Vec<BudgetPoint> = best
        .into_values()
        .map(|c| BudgetPoint { photons: c.photons, eps_eff: (1.0 - c.value).max(0.0), tree: c.tree })
        .collect();
    let mut groups: BTreeMap<i64, (f64, f64, Vec<u64>)> = BTreeMap::new();
    for p in &raw {
        let (key, lo, hi) = if p.eps_eff <= 0.0 {
            (i64::MIN, 0.0, 0.0)
        } else {
            let k = (p.eps_eff.log10() * BINS_PER_DECADE as f64).floor() as i64;
            let d = BINS_PER_DECADE as f64;
            (k, 10f64.powf(k as f64 / d), 10f64.powf((k + 1) as f64 / d))
        };
        groups.entry(key).or_insert((lo, hi, Vec::new())).2.push(p.photons);
    }
    let bins = groups
        .into_values()
        .map(|(lo, hi, v)| BudgetBin { lo, hi, members: v.len(), mean_photons: v.iter().sum::<u64>() as f64 / v.len() as f64 })
        .collect();
    Ok(BudgetSweep { eps, raw, bins })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(k_max: usize, b_max: u32, cap: Option<u64>) -> SearchSpace {
        SearchSpace { k_max, b_max, nph_max: cap, ..SearchSpace::new(Family::Symmetric) }
    }

    #[test]
    fn small_symmetric_enumerations() {
        let got: Vec<TreeSpec> = enumerate_symmetric(&sym(1, 3, None));
        assert_eq!(got, [1, 2, 3].map(|x| TreeSpec::Symmetric(vec![x])));
        let got = enumerate_symmetric(&sym(2, 2, None));
        let want: Vec<TreeSpec> = [vec![1], vec![2], vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]
            .into_iter()
            .map(TreeSpec::Symmetric)
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn uncapped_count() {
        assert_eq!(enumerate_symmetric(&sym(3, 20, None)).len(), 20 + 400 + 8000);
    }

    #[test]
    fn capped_enumeration_matches_filter() {
        let capped = enumerate_symmetric(&sym(3, 12, Some(60)));
        let filtered: Vec<TreeSpec> =
            enumerate_symmetric(&sym(3, 12, None)).into_iter().filter(|t| t.photon_count() <= 60).collect();
        assert_eq!(capped, filtered);
    }

    #[test]
    fn neighborhood_examples() {
        let n = neighborhood(&TreeSpec::BranchList(vec![vec![1]]), 1);
        assert_eq!(n, vec![TreeSpec::BranchList(vec![vec![2]])]);
        let n = neighborhood(&TreeSpec::BranchList(vec![vec![2, 2], vec![2, 2]]), 1);
        assert!(n.contains(&TreeSpec::BranchList(vec![vec![3, 2], vec![2, 2]])));
        assert!(n.contains(&TreeSpec::BranchList(vec![vec![2, 2], vec![2, 1]])));
    }

    #[test]
    fn joint_perturbations() {
        let t = TreeSpec::BranchList(vec![vec![2, 2], vec![2, 2]]);
        let all = perturbations(&t, 1, None, 4);
        // Two-branch multisets over the nine shapes (1..=3, 1..=3), less the tree itself.
        assert_eq!(all.len(), 9 * 10 / 2 - 1);
        assert!(all.contains(&vec![vec![3, 3], vec![1, 1]]));
        let one = perturbations(&t, 1, None, 1);
        assert_eq!(one.len(), 8);
        assert!(one.iter().all(|b| b.contains(&vec![2, 2])));
        let capped = perturbations(&t, 1, Some(12), 4);
        assert!(capped.iter().all(|b| b.iter().map(|x| branch_photons(x)).sum::<u64>() < 12));
        assert_eq!(perturbations(&TreeSpec::BranchList(vec![vec![1]]), 1, None, 4), vec![vec![vec![2]]]);
    }

    #[test]
    fn zero_loss_prefers_fewest_photons() {
        let r = optimize_eps_eff(&sym(2, 4, Some(30)), 0.0).unwrap();
        assert_eq!(r.best.tree, TreeSpec::Symmetric(vec![1]));
    }
}
