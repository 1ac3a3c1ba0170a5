//! Program construction: which photons share a segment, which segment each
//! fed-back bin should meet, and the timing that makes every bin arrive
//! where it should.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::timeline::{walk_ops, walk_relaxed, WalkError};
use super::{ArrivalId, Bin, EmissionProgram, EmitKind, LinkAssignment, Op, Pass, PhotonInfo, Variant, HOP};
use crate::error::{Error, Result};
use crate::tree::{ExplicitTree, TreeSpec};

/// Passes of a slow photon emitted by `src`: outward past the downstream
/// emitters, then back past every emitter after the delay line.
pub(crate) fn passes_for(src: usize, emitters: usize) -> Vec<Pass> {
    let mut v: Vec<Pass> = (src + 1..emitters).map(|j| Pass { emitter: j, feedback: false }).collect();
    v.extend((0..emitters).map(|j| Pass { emitter: j, feedback: true }));
    v
}

/// Sons a photon from `src` can pick up through its bins.
fn link_capacity(src: usize, emitters: usize) -> u32 {
    2 * passes_for(src, emitters).len() as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SlotKind {
    /// Neighbour of the root in its own linear chain.
    Chain,
    /// Reached by one bin of the root on one pass.
    Link { pass: usize, bin: Bin },
}

/// Placement of each branch of a depth-three tree around the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub emitters: usize,
    /// One entry per branch, in tree order.
    pub slots: Vec<SlotKind>,
}

impl Layout {
    pub fn branch_emitter(&self, branch: usize) -> usize {
        match self.slots[branch] {
            SlotKind::Chain => 0,
            SlotKind::Link { pass, .. } => passes_for(0, self.emitters)[pass].emitter,
        }
    }

    pub fn capacity(&self, slot: SlotKind) -> u32 {
        match slot {
            SlotKind::Chain => 1 + link_capacity(0, self.emitters),
            SlotKind::Link { pass, .. } => {
                let to = passes_for(0, self.emitters)[pass].emitter;
                2 + link_capacity(to, self.emitters)
            }
        }
    }
}

fn not_generable(variant: Variant, reason: impl Into<String>) -> Error {
    Error::NotGenerable { variant: variant.name().into(), reason: reason.into() }
}

/// Assigns branches to root slots, biggest branches to the roomiest slots.
/// With `enforce` off the per-slot son limit is not checked; such layouts
/// are only good for time accounting.
pub fn layout(tree: &TreeSpec, variant: Variant, enforce: bool) -> Result<Layout> {
    if variant == Variant::Pilot {
        return Err(not_generable(variant, "the pilot variant has no branch layout"));
    }
    let emitters = variant.emitters();
    let branches = tree.branch_list();
    if let Some(b) = branches.iter().find(|b| b.len() != 2) {
        return Err(not_generable(variant, format!("every branch must have two levels, found {b:?}")));
    }
    let root_passes = passes_for(0, emitters);
    let mut slots: Vec<SlotKind> = Vec::new();
    for pass in 0..root_passes.len() {
        for bin in [Bin::Early, Bin::Late] {
            slots.push(SlotKind::Link { pass, bin });
        }
    }
    slots.push(SlotKind::Chain);
    slots.push(SlotKind::Chain);
    let probe = Layout { emitters, slots: Vec::new() };
    // Stable: equal capacities keep the link-before-chain, pass order.
    slots.sort_by_key(|&s| std::cmp::Reverse(probe.capacity(s)));
    if branches.len() > slots.len() {
        return Err(not_generable(variant, format!("at most {} branches, tree has {}", slots.len(), branches.len())));
    }
    let mut order: Vec<usize> = (0..branches.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(branches[i][0]));
    let mut assigned = vec![SlotKind::Chain; branches.len()];
    for (rank, &i) in order.iter().enumerate() {
        let slot = slots[rank];
        if enforce && branches[i][0] > probe.capacity(slot) {
            let caps: Vec<u32> = slots.iter().map(|&s| probe.capacity(s)).collect();
            return Err(not_generable(
                variant,
                format!("branch {:?} has too many sons; sons per branch, largest first, may be at most {caps:?}", branches[i]),
            ));
        }
        assigned[i] = slot;
    }
    Ok(Layout { emitters, slots: assigned })
}

#[derive(Clone, Debug)]
struct Group {
    leaves: Vec<usize>,
    rep: usize,
    slow: bool,
}

/// Segments emitted back to back by one emitter; the last one resets it.
#[derive(Clone, Debug)]
struct Unit {
    emitter: usize,
    groups: Vec<Group>,
    /// Bin that was planned to reach this unit; orders it when nothing does.
    origin: Option<ArrivalId>,
}

#[derive(Clone, Debug)]
pub(crate) struct Plan {
    prefix: Unit,
    units: Vec<Unit>,
    assign: BTreeMap<ArrivalId, Option<usize>>,
    info: Vec<PhotonInfo>,
}

/// Single changes to the planned feedback, for checking that verification
/// notices them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// The bin meets no segment.
    Drop(ArrivalId),
    /// Both bins of the pass meet the same segment.
    Merge { photon: usize, pass: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Hold {
    None,
    BeforeRep,
    AfterRep,
    AroundRep,
}

fn hold_for(g: &Group, closes: bool, awaits: &[ArrivalId]) -> Hold {
    match awaits {
        [] => Hold::None,
        [a] if g.slow && a.bin == Bin::Early => {
            if closes {
                Hold::AroundRep
            } else {
                Hold::AfterRep
            }
        }
        _ => Hold::BeforeRep,
    }
}

impl Plan {
    fn kind_of(&self, photon: usize) -> EmitKind {
        self.info[photon].kind
    }

    fn unit_ops(&self, u: &Unit, idles: &BTreeMap<usize, u64>, out: &mut Vec<Op>) {
        let n = u.groups.len();
        for (gi, g) in u.groups.iter().enumerate() {
            let closes = gi + 1 == n;
            let awaits: Vec<ArrivalId> = self
                .assign
                .iter()
                .filter(|(_, t)| **t == Some(g.rep))
                .map(|(a, _)| *a)
                .collect();
            let hold = hold_for(g, closes, &awaits);
            out.push(Op::Prepare);
            for &l in &g.leaves {
                out.push(Op::Emit { photon: l, kind: EmitKind::EBar });
            }
            if hold == Hold::BeforeRep {
                out.extend(awaits.iter().map(|&a| Op::Await(a)));
            }
            if let Some(&d) = idles.get(&g.rep) {
                out.push(Op::Idle(d));
            }
            let kind = self.kind_of(g.rep);
            if hold == Hold::AroundRep {
                out.push(Op::EmitAround { photon: g.rep, kind, arrival: awaits[0] });
            } else {
                out.push(Op::Emit { photon: g.rep, kind });
            }
            if hold == Hold::AfterRep {
                out.extend(awaits.iter().map(|&a| Op::Await(a)));
            }
        }
    }

    fn unit_of_rep(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for (ui, u) in self.units.iter().enumerate() {
            for g in &u.groups {
                m.insert(g.rep, ui);
            }
        }
        m
    }

    /// Queue entries in causal order: sources in emission order, each
    /// source's passes and bins in time order.
    fn initial_order(&self) -> Vec<Entry> {
        let unit_of = self.unit_of_rep();
        let mut origin_units: BTreeMap<ArrivalId, Vec<usize>> = BTreeMap::new();
        for (ui, u) in self.units.iter().enumerate() {
            if let Some(o) = u.origin {
                origin_units.entry(o).or_default().push(ui);
            }
        }
        let mut placed = vec![false; self.units.len()];
        let mut entries = Vec::new();
        let mut queue: VecDeque<usize> = VecDeque::new();
        let slow_in = |u: &Unit| -> Vec<usize> { u.groups.iter().flat_map(|g| g.leaves.iter().copied().chain([g.rep])).filter(|&p| !self.info[p].passes.is_empty()).collect() };
        queue.extend(slow_in(&self.prefix));
        while let Some(src) = queue.pop_front() {
            for pass in 0..self.info[src].passes.len() {
                for bin in [Bin::Early, Bin::Late] {
                    let a = ArrivalId { photon: src, pass, bin };
                    let mut place = |ui: usize, entries: &mut Vec<Entry>, queue: &mut VecDeque<usize>| {
                        if !placed[ui] {
                            placed[ui] = true;
                            entries.push(Entry::Unit(ui));
                            queue.extend(slow_in(&self.units[ui]));
                        }
                    };
                    match self.assign.get(&a).copied().flatten() {
                        Some(t) => place(unit_of[&t], &mut entries, &mut queue),
                        None => entries.push(Entry::Nothing(a)),
                    }
                    for &ui in origin_units.get(&a).map(|v| v.as_slice()).unwrap_or(&[]) {
                        place(ui, &mut entries, &mut queue);
                    }
                }
            }
        }
        entries
    }

    fn entry_emitter(&self, e: Entry) -> usize {
        match e {
            Entry::Unit(ui) => self.units[ui].emitter,
            Entry::Nothing(a) => self.info[a.photon].passes[a.pass].emitter,
        }
    }

    fn assemble(&self, emitters: usize, order: &[Entry], idles: &BTreeMap<usize, u64>) -> Vec<Vec<Op>> {
        let mut ops = vec![Vec::new(); emitters];
        self.unit_ops(&self.prefix, idles, &mut ops[self.prefix.emitter]);
        for &e in order {
            let j = self.entry_emitter(e);
            match e {
                Entry::Unit(ui) => self.unit_ops(&self.units[ui], idles, &mut ops[j]),
                Entry::Nothing(a) => ops[j].push(Op::Await(a)),
            }
        }
        ops
    }

    /// Arrivals that decide where an entry belongs in its emitter's queue.
    fn entry_keys(&self, e: Entry) -> Vec<ArrivalId> {
        match e {
            Entry::Nothing(a) => vec![a],
            Entry::Unit(ui) => {
                let u = &self.units[ui];
                let mut keys: Vec<ArrivalId> = self
                    .assign
                    .iter()
                    .filter(|(_, t)| t.is_some_and(|t| u.groups.iter().any(|g| g.rep == t)))
                    .map(|(a, _)| *a)
                    .collect();
                if keys.is_empty() {
                    keys.extend(u.origin);
                }
                keys
            }
        }
    }
}

impl Plan {
    /// Queue order by actual key times, or `None` if already sorted.
    fn resort(&self, p: &EmissionProgram, order: &[Entry], starts: &[u64], tau: u64) -> Option<Vec<Entry>> {
        let time_of = |a: ArrivalId| p.arrival_time(a, starts[a.photon], tau);
        let mut keyed: Vec<(usize, u64, usize)> = order
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let t = self.entry_keys(e).into_iter().map(time_of).min().unwrap_or(0);
                (self.entry_emitter(e), t, i)
            })
            .collect();
        keyed.sort();
        let sorted: Vec<Entry> = keyed.iter().map(|&(_, _, i)| order[i]).collect();
        let same = (0..p.emitters).all(|j| {
            let a = order.iter().filter(|&&e| self.entry_emitter(e) == j);
            let b = sorted.iter().filter(|&&e| self.entry_emitter(e) == j);
            a.eq(b)
        });
        (!same).then_some(sorted)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Entry {
    Unit(usize),
    Nothing(ArrivalId),
}

fn photon_info(emitter: usize, slow: bool, closes: bool, step: usize, emitters: usize) -> PhotonInfo {
    PhotonInfo {
        emitter,
        kind: EmitKind::new(slow, closes),
        step,
        passes: if slow { passes_for(emitter, emitters) } else { Vec::new() },
    }
}

/// Builds the emission program of a tree for a variant.
pub fn build_program(tree: &TreeSpec, variant: Variant, beta: u64) -> Result<EmissionProgram> {
    tree.validate()?;
    if beta < 4 || !beta.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("slow factor must be even and at least 4, got {beta}")));
    }
    let explicit = ExplicitTree::from_spec(tree);
    let (plan, rotated) = match variant {
        Variant::Pilot => pilot_plan(tree, &explicit)?,
        Variant::Modified | Variant::TwoEmitter => (branch_plan(tree, &explicit, variant)?, true),
    };
    solve(tree.clone(), explicit, variant, beta, plan, rotated, MAX_ROUNDS)
}

impl EmissionProgram {
    /// Rebuilds the program with one planned feedback changed.
    pub fn mutate(&self, m: Mutation) -> Result<EmissionProgram> {
        let mut plan = self.plan.clone();
        match m {
            Mutation::Drop(a) => {
                let slot = plan.assign.get_mut(&a).ok_or_else(|| Error::InvalidParameter(format!("no bin {a:?}")))?;
                *slot = None;
            }
            Mutation::Merge { photon, pass } => {
                let e = ArrivalId { photon, pass, bin: Bin::Early };
                let l = ArrivalId { photon, pass, bin: Bin::Late };
                let target = plan
                    .assign
                    .get(&e)
                    .copied()
                    .flatten()
                    .or(plan.assign.get(&l).copied().flatten())
                    .ok_or_else(|| Error::InvalidParameter(format!("pass {pass} of photon {photon} meets nothing")))?;
                plan.assign.insert(e, Some(target));
                plan.assign.insert(l, Some(target));
            }
        }
        solve(self.tree.clone(), self.explicit.clone(), self.variant, self.beta, plan, self.last_layer_rotated, MUTANT_ROUNDS)
    }
}

fn as_symmetric(tree: &TreeSpec) -> Option<Vec<u32>> {
    match tree {
        TreeSpec::Symmetric(b) => Some(b.clone()),
        TreeSpec::BranchList(bs) => {
            let first = bs.first()?;
            bs.iter().all(|b| b == first).then(|| {
                let mut v = vec![bs.len() as u32];
                v.extend(first);
                v
            })
        }
    }
}

fn pilot_plan(tree: &TreeSpec, t: &ExplicitTree) -> Result<(Plan, bool)> {
    let variant = Variant::Pilot;
    let b = as_symmetric(tree).ok_or_else(|| not_generable(variant, "tree is not symmetric"))?;
    let k = b.len();
    let pure = b.iter().all(|&x| x == 2);
    if !pure && b[..k - 1].iter().any(|&x| x != 2) {
        return Err(not_generable(variant, "every layer but the last must branch in two"));
    }
    // Vertices above `fed` are fed back; with the last layer widened the
    // layer above it is emitted together with its sons.
    let fed = if pure { k } else { k - 1 };
    let n = t.len();
    let mut info = Vec::with_capacity(n);
    for v in 0..n {
        let layer = t.layer(v) as usize;
        info.push(photon_info(0, layer < fed, true, layer + 1, 1));
    }
    if !pure {
        for v in (0..n).filter(|&v| t.layer(v) as usize == k) {
            info[v].kind = EmitKind::EBar;
        }
    }
    let group = |v: usize| -> Group {
        if !pure && t.layer(v) as usize == k - 1 {
            Group { leaves: t.children(v).to_vec(), rep: v, slow: false }
        } else {
            Group { leaves: Vec::new(), rep: v, slow: info[v].kind.is_slow() }
        }
    };
    let prefix = Unit { emitter: 0, groups: vec![group(0)], origin: None };
    let mut units = Vec::new();
    let mut assign = BTreeMap::new();
    for v in (0..n).filter(|&v| info[v].kind.is_slow()) {
        for (a, &son) in t.children(v).iter().enumerate() {
            let bin = if a == 0 { Bin::Early } else { Bin::Late };
            let id = ArrivalId { photon: v, pass: 0, bin };
            assign.insert(id, Some(son));
            units.push(Unit { emitter: 0, groups: vec![group(son)], origin: Some(id) });
        }
    }
    Ok((Plan { prefix, units, assign, info }, !pure))
}

fn branch_plan(tree: &TreeSpec, t: &ExplicitTree, variant: Variant) -> Result<Plan> {
    let lay = layout(tree, variant, true)?;
    let e = lay.emitters;
    let n = t.len();
    let roots = t.branch_roots().to_vec();
    let mut info: Vec<Option<PhotonInfo>> = vec![None; n];
    let mut assign: BTreeMap<ArrivalId, Option<usize>> = BTreeMap::new();
    let mut units = Vec::new();
    let ghz = |m: usize| Group { leaves: t.children(m).to_vec(), rep: m, slow: false };
    let root_slow = lay.slots.iter().any(|s| matches!(s, SlotKind::Link { .. }));
    let mut chain_branches: Vec<usize> = Vec::new();
    // Middles each branch root picks up through its bins.
    let mut linked: Vec<(usize, Vec<usize>)> = Vec::new();
    let fill_middle = |m: usize, emitter: usize, step: usize, info: &mut Vec<Option<PhotonInfo>>, closes: bool| {
        info[m] = Some(photon_info(emitter, false, closes, step, e));
        for &l in t.children(m) {
            info[l] = Some(PhotonInfo { emitter, kind: EmitKind::EBar, step, passes: Vec::new() });
        }
    };
    for (k, &b) in roots.iter().enumerate() {
        let mids = t.children(b).to_vec();
        let em = lay.branch_emitter(k);
        match lay.slots[k] {
            SlotKind::Chain => {
                chain_branches.push(k);
                let slow = mids.len() > 1;
                info[b] = Some(photon_info(em, slow, false, 1, e));
                linked.push((b, mids[1..].to_vec()));
            }
            SlotKind::Link { pass, bin } => {
                let step = 1 + passes_for(0, e)[pass].feedback as usize;
                let chain_sons = mids.len().min(2);
                let slow = mids.len() > 2;
                let closes = chain_sons == 1;
                info[b] = Some(photon_info(em, slow, closes, step, e));
                fill_middle(mids[0], em, step, &mut info, false);
                let mut groups = vec![ghz(mids[0]), Group { leaves: Vec::new(), rep: b, slow }];
                if chain_sons == 2 {
                    fill_middle(mids[1], em, step, &mut info, true);
                    groups.push(ghz(mids[1]));
                }
                let id = ArrivalId { photon: 0, pass, bin };
                assign.insert(id, Some(b));
                units.push(Unit { emitter: em, groups, origin: Some(id) });
                linked.push((b, mids[chain_sons..].to_vec()));
            }
        }
    }
    // The root's own chain: first chain branch, root, second chain branch.
    let mut prefix_groups = Vec::new();
    if let Some(&k) = chain_branches.first() {
        let b = roots[k];
        let m0 = t.children(b)[0];
        fill_middle(m0, 0, 1, &mut info, false);
        prefix_groups.push(ghz(m0));
        prefix_groups.push(Group { leaves: Vec::new(), rep: b, slow: info[b].as_ref().unwrap().kind.is_slow() });
    }
    let root_closes = chain_branches.len() < 2;
    info[0] = Some(photon_info(0, root_slow, root_closes, 1, e));
    prefix_groups.push(Group { leaves: Vec::new(), rep: 0, slow: root_slow });
    if let Some(&k) = chain_branches.get(1) {
        let b = roots[k];
        let m0 = t.children(b)[0];
        prefix_groups.push(Group { leaves: Vec::new(), rep: b, slow: info[b].as_ref().unwrap().kind.is_slow() });
        fill_middle(m0, 0, 1, &mut info, true);
        prefix_groups.push(ghz(m0));
    }
    for (b, mids) in linked {
        let src = info[b].clone().unwrap();
        let opportunities: Vec<ArrivalId> = (0..src.passes.len())
            .flat_map(|pass| [Bin::Early, Bin::Late].map(|bin| ArrivalId { photon: b, pass, bin }))
            .collect();
        if mids.len() > opportunities.len() {
            return Err(not_generable(variant, format!("branch root {b} cannot reach {} middles", mids.len())));
        }
        for (&m, &id) in mids.iter().zip(&opportunities) {
            let pass = src.passes[id.pass];
            let step = src.step + pass.feedback as usize;
            fill_middle(m, pass.emitter, step, &mut info, true);
            assign.insert(id, Some(m));
            units.push(Unit { emitter: pass.emitter, groups: vec![ghz(m)], origin: Some(id) });
        }
    }
    let info: Vec<PhotonInfo> = info
        .into_iter()
        .enumerate()
        .map(|(v, i)| i.ok_or_else(|| Error::InvalidTree(format!("vertex {v} is not placed"))))
        .collect::<Result<_>>()?;
    // Every bin of every fed-back photon has an assignment, possibly none.
    for (v, i) in info.iter().enumerate() {
        for pass in 0..i.passes.len() {
            for bin in [Bin::Early, Bin::Late] {
                assign.entry(ArrivalId { photon: v, pass, bin }).or_insert(None);
            }
        }
    }
    Ok(Plan { prefix: Unit { emitter: 0, groups: prefix_groups, origin: None }, units, assign, info })
}

const MAX_ROUNDS: usize = 20_000;
/// A mutated plan is usually unsatisfiable; give up on it sooner.
const MUTANT_ROUNDS: usize = 1_000;
const MAX_REORDERS: usize = 16;

/// Finds a delay and idle gaps under which every bin meets its planned
/// segment.
fn solve(
    tree: TreeSpec,
    explicit: ExplicitTree,
    variant: Variant,
    beta: u64,
    mut plan: Plan,
    rotated: bool,
    max_rounds: usize,
) -> Result<EmissionProgram> {
    let emitters = variant.emitters();
    for a in plan.assign.keys() {
        if a.pass >= plan.info[a.photon].passes.len() {
            return Err(Error::InvalidProgram(format!("bin {a:?} belongs to no pass")));
        }
    }
    // Fix the default assignment of every pass.
    for v in 0..plan.info.len() {
        for pass in 0..plan.info[v].passes.len() {
            for bin in [Bin::Early, Bin::Late] {
                plan.assign.entry(ArrivalId { photon: v, pass, bin }).or_insert(None);
            }
        }
    }
    let mut program = EmissionProgram {
        variant,
        tree,
        explicit,
        emitters,
        beta,
        photons: plan.info.clone(),
        ops: Vec::new(),
        links: plan.assign.iter().map(|(&arrival, &target)| LinkAssignment { arrival, target }).collect(),
        last_layer_rotated: rotated,
        min_tau_del: 0,
        plan: plan.clone(),
    };
    let mut order = plan.initial_order();
    let mut idles: BTreeMap<usize, u64> = BTreeMap::new();
    let mut tau = emitters as u64 * HOP + 1;
    let mut tried: Option<(ArrivalId, u64, usize, u64)> = None;
    let mut reorders = 0;
    for _ in 0..max_rounds {
        let ops = plan.assemble(emitters, &order, &idles);
        match walk_ops(&program, &ops, tau) {
            Ok(w) => match plan.resort(&program, &order, &w.starts, tau) {
                None => {
                    program.ops = ops;
                    program.min_tau_del = tau;
                    return Ok(program);
                }
                Some(sorted) => {
                    order = sorted;
                    tried = None;
                }
            },
            Err(WalkError::Stuck) => {
                return Err(Error::InvalidProgram("operations wait on photons that are never emitted".into()));
            }
            Err(WalkError::Deficit(d)) => {
                // A queue out of time order cannot be fixed by waiting.
                if reorders < MAX_REORDERS {
                    let w = walk_relaxed(&program, &ops, tau).map_err(|_| Error::InvalidProgram("operations wait on photons that are never emitted".into()))?;
                    if let Some(sorted) = plan.resort(&program, &order, &w.starts, tau) {
                        order = sorted;
                        tried = None;
                        reorders += 1;
                        continue;
                    }
                }
                if let Some((a, amount, anchor, added)) = tried.take() {
                    if a == d.arrival && d.amount >= amount {
                        // Delaying the source did not help; lengthen the delay line.
                        let slot = idles.get_mut(&anchor).unwrap();
                        *slot -= added;
                        if *slot == 0 {
                            idles.remove(&anchor);
                        }
                        tau += amount;
                        reorders = 0;
                        continue;
                    }
                }
                let anchor = anchor_of(&ops, d.arrival.photon);
                *idles.entry(anchor).or_insert(0) += d.amount;
                tried = Some((d.arrival, d.amount, anchor, d.amount));
            }
        }
    }
    Err(Error::InvalidProgram("no feasible timing found".into()))
}

/// The nearest photon at or above `photon` whose start is not pinned to an
/// arrival.
fn anchor_of(ops: &[Vec<Op>], mut photon: usize) -> usize {
    loop {
        let pinned = ops.iter().flatten().find_map(|op| match *op {
            Op::EmitAround { photon: p, arrival, .. } if p == photon => Some(arrival.photon),
            _ => None,
        });
        match pinned {
            Some(src) => photon = src,
            None => return photon,
        }
    }
}
