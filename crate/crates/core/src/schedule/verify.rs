use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::timeline::{EventKind, Timeline};
use super::{Bin, EmissionProgram};
use crate::error::{Error, Result};
use crate::tree::ExplicitTree;

/// Where a bin met the emitter relative to the segment representative's own
/// emission.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Region {
    Before,
    After,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    /// Only the early bin met a segment.
    Star { target: usize },
    /// Only the late bin met a segment.
    Bullet { target: usize },
    /// Both bins met different segments: two gates at once.
    Parallel { star: usize, bullet: usize },
    /// Both bins met the same segment and the gates cancel.
    Annihilated { target: usize },
    None,
}

impl Outcome {
    pub fn gates(&self) -> Vec<usize> {
        match *self {
            Outcome::Star { target } | Outcome::Bullet { target } => vec![target],
            Outcome::Parallel { star, bullet } => vec![star, bullet],
            Outcome::Annihilated { .. } | Outcome::None => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateRecord {
    pub photon: usize,
    pub pass: usize,
    pub emitter: usize,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GateList {
    /// Bonds created by the emission sequence itself.
    pub emission_bonds: Vec<(usize, usize)>,
    pub records: Vec<GateRecord>,
    /// Qubits carrying a net Z correction.
    pub z_byproducts: Vec<usize>,
    /// Qubits left in the rotated basis.
    pub h_frame: Vec<usize>,
}

impl GateList {
    /// Resulting adjacency; a bond produced twice cancels.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut set = BTreeSet::new();
        let mut toggle = |a: usize, b: usize| {
            let e = (a.min(b), a.max(b));
            if !set.remove(&e) {
                set.insert(e);
            }
        };
        for &(a, b) in &self.emission_bonds {
            toggle(a, b);
        }
        for r in &self.records {
            for t in r.outcome.gates() {
                toggle(r.photon, t);
            }
        }
        set
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Ground,
    Segment(usize),
    Busy,
}

struct Segment {
    rep: usize,
    members: Vec<usize>,
}

struct EmitterView {
    /// `(time, state from this time on)`, strictly after the mark.
    marks: Vec<(u64, State)>,
    instants: BTreeSet<u64>,
    segments: Vec<Segment>,
}

fn emitter_views(tl: &Timeline) -> Result<Vec<EmitterView>> {
    let mut views = Vec::new();
    for j in 0..tl.emitters {
        let own: Vec<_> = tl.events.iter().filter(|e| e.emitter == j && e.kind != EventKind::Arrival).collect();
        let mut segments: Vec<Segment> = Vec::new();
        let mut open = false;
        let mut seg_of = BTreeMap::new();
        for e in &own {
            match e.kind {
                EventKind::Prepare => {
                    if open && segments.last().is_some_and(|s| s.members.is_empty()) {
                        return Err(Error::InvalidProgram(format!("emitter {j} prepared twice without emitting")));
                    }
                    segments.push(Segment { rep: usize::MAX, members: Vec::new() });
                    open = true;
                }
                EventKind::EmitEarly => {
                    let ph = e.photon.unwrap();
                    if !open {
                        return Err(Error::InvalidProgram(format!("photon {ph} emitted from a ground-state emitter")));
                    }
                    let s = segments.last_mut().unwrap();
                    s.members.push(ph);
                    s.rep = ph;
                    seg_of.insert(ph, segments.len() - 1);
                    if tl.emissions[ph].kind.resets() {
                        open = false;
                    }
                }
                _ => {}
            }
        }
        if open {
            return Err(Error::InvalidProgram(format!("emitter {j} ends entangled with its last photon")));
        }
        let mut marks = Vec::new();
        let mut instants = BTreeSet::new();
        let mut current = 0usize;
        for e in &own {
            instants.insert(e.time);
            match e.kind {
                EventKind::Prepare => {
                    marks.push((e.time, State::Segment(current)));
                    current += 1;
                }
                EventKind::EmitEarly => {
                    let ph = e.photon.unwrap();
                    marks.push((e.time, State::Segment(seg_of[&ph])));
                }
                EventKind::EmitLate => marks.push((e.time, State::Busy)),
                EventKind::EmitEnd => {
                    let ph = e.photon.unwrap();
                    let st = if tl.emissions[ph].kind.resets() { State::Ground } else { State::Segment(seg_of[&ph]) };
                    marks.push((e.time, st));
                }
                EventKind::Arrival => {}
            }
        }
        views.push(EmitterView { marks, instants, segments });
    }
    Ok(views)
}

impl EmitterView {
    fn state_at(&self, t: u64) -> Result<State> {
        if self.instants.contains(&t) {
            return Err(Error::InvalidProgram(format!("a bin arrives at time {t}, exactly at an emitter event")));
        }
        let i = self.marks.partition_point(|&(m, _)| m < t);
        Ok(if i == 0 { State::Ground } else { self.marks[i - 1].1 })
    }
}

fn classify_with(views: &[EmitterView], tl: &Timeline, photon: usize) -> Result<(Vec<GateRecord>, Vec<usize>)> {
    let mut by_pass: BTreeMap<usize, (usize, [Option<(usize, Region)>; 2], [bool; 2])> = BTreeMap::new();
    let mut z = Vec::new();
    for e in tl.events.iter().filter(|e| e.kind == EventKind::Arrival && e.photon == Some(photon)) {
        let view = &views[e.emitter];
        let bin = e.bin.unwrap();
        let slot = by_pass.entry(e.pass.unwrap()).or_insert((e.emitter, [None, None], [false, false]));
        let k = (bin == Bin::Late) as usize;
        slot.2[k] = true;
        match view.state_at(e.time)? {
            State::Busy => {
                return Err(Error::InvalidProgram(format!(
                    "bin {bin:?} of photon {photon} reaches emitter {} while it is emitting",
                    e.emitter
                )))
            }
            State::Ground => z.push(photon),
            State::Segment(s) => {
                let rep = view.segments[s].rep;
                let region = if e.time < tl.emissions[rep].start { Region::Before } else { Region::After };
                slot.1[k] = Some((rep, region));
                // Local Z corrections follow from which bin and which side of
                // the representative's emission the interaction happened.
                match (bin, region) {
                    (Bin::Early, Region::Before) => {}
                    (Bin::Early, Region::After) => z.push(photon),
                    (Bin::Late, Region::Before) => z.push(rep),
                    (Bin::Late, Region::After) => z.extend([photon, rep]),
                }
            }
        }
    }
    let records = by_pass
        .into_iter()
        .map(|(pass, (emitter, hits, _))| {
            let outcome = match (hits[0], hits[1]) {
                (Some((a, _)), Some((b, _))) if a == b => Outcome::Annihilated { target: a },
                (Some((a, _)), Some((b, _))) => Outcome::Parallel { star: a, bullet: b },
                (Some((a, _)), None) => Outcome::Star { target: a },
                (None, Some((b, _))) => Outcome::Bullet { target: b },
                (None, None) => Outcome::None,
            };
            GateRecord { photon, pass, emitter, outcome }
        })
        .collect();
    Ok((records, z))
}

/// Gate outcomes of one fed-back photon, one record per pass, decided only by
/// the order of events in the timeline.
pub fn classify_feedback(tl: &Timeline, photon: usize) -> Result<Vec<GateRecord>> {
    let views = emitter_views(tl)?;
    Ok(classify_with(&views, tl, photon)?.0)
}

pub(crate) fn gate_list(p: &EmissionProgram, tl: &Timeline) -> Result<GateList> {
    let views = emitter_views(tl)?;
    let mut g = GateList::default();
    let mut z_parity = vec![false; p.photons.len()];
    for view in &views {
        let mut prev: Option<usize> = None;
        for seg in &view.segments {
            for &m in &seg.members {
                if m != seg.rep {
                    g.emission_bonds.push((m, seg.rep));
                    g.h_frame.push(m);
                }
            }
            if let Some(r) = prev {
                g.emission_bonds.push((r, seg.rep));
            }
            prev = if tl.emissions[seg.rep].kind.resets() { None } else { Some(seg.rep) };
        }
    }
    for f in p.fed_back() {
        let (records, z) = classify_with(&views, tl, f)?;
        g.records.extend(records);
        for q in z {
            z_parity[q] ^= true;
        }
    }
    g.z_byproducts = (0..z_parity.len()).filter(|&q| z_parity[q]).collect();
    g.h_frame.sort_unstable();
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verification {
    pub ok: bool,
    pub missing: Vec<(usize, usize)>,
    pub extra: Vec<(usize, usize)>,
    pub frame_ok: bool,
}

impl Verification {
    pub fn diagnostic(&self) -> String {
        if self.ok {
            return "graph matches the target tree".into();
        }
        let mut parts = Vec::new();
        if !self.missing.is_empty() {
            parts.push(format!("missing edges {:?}", self.missing));
        }
        if !self.extra.is_empty() {
            parts.push(format!("extra edges {:?}", self.extra));
        }
        if !self.frame_ok {
            parts.push("rotated qubits are not exactly the deepest layer".into());
        }
        parts.join("; ")
    }
}

/// Compares the produced adjacency with the tree's edges. Z corrections are
/// ignored; a rotated basis is accepted only on exactly the deepest layer.
pub fn verify_target(g: &GateList, tree: &ExplicitTree) -> Verification {
    let got = g.edges();
    let want: BTreeSet<(usize, usize)> = tree.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    let missing: Vec<_> = want.difference(&got).copied().collect();
    let extra: Vec<_> = got.difference(&want).copied().collect();
    let deepest = tree.depth();
    let last: Vec<usize> = (0..tree.len()).filter(|&v| tree.layer(v) == deepest && deepest > 0).collect();
    let frame_ok = g.h_frame.is_empty() || g.h_frame == last;
    Verification { ok: missing.is_empty() && extra.is_empty() && frame_ok, missing, extra, frame_ok }
}
