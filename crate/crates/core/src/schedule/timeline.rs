use serde::Serialize;

use super::{ArrivalId, Bin, EmissionProgram, EmitKind, Op};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EventKind {
    Prepare,
    EmitEarly,
    EmitLate,
    EmitEnd,
    Arrival,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Prepare => "prepare",
            EventKind::EmitEarly => "emit-early",
            EventKind::EmitLate => "emit-late",
            EventKind::EmitEnd => "emit-end",
            EventKind::Arrival => "arrival",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Event {
    pub time: u64,
    pub emitter: usize,
    pub kind: EventKind,
    pub photon: Option<usize>,
    pub bin: Option<Bin>,
    pub pass: Option<usize>,
    /// Position in the emitter's own sequence; arrivals use `usize::MAX`.
    pub seq: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Emission {
    pub photon: usize,
    pub emitter: usize,
    pub kind: EmitKind,
    pub start: u64,
    pub duration: u64,
}

impl Emission {
    pub fn late(&self) -> u64 {
        self.start + self.duration - 1
    }

    pub fn end(&self) -> u64 {
        self.start + self.duration
    }
}

/// Timestamped events of one run, sorted by `(time, emitter, seq)`.
#[derive(Clone, Debug, Serialize)]
pub struct Timeline {
    pub tau_del: u64,
    pub emitters: usize,
    pub events: Vec<Event>,
    /// Indexed by photon.
    pub emissions: Vec<Emission>,
    pub end_time: u64,
}

/// The first arrival an emitter could not be ready for, and by how much it
/// came too early.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Deficit {
    pub emitter: usize,
    pub op: usize,
    pub arrival: ArrivalId,
    pub amount: u64,
}

#[derive(Debug)]
pub(crate) enum WalkError {
    Deficit(Deficit),
    Stuck,
}

pub(crate) struct Walk {
    pub starts: Vec<u64>,
    pub prepares: Vec<(usize, u64, usize)>,
}

/// Runs every emitter's operations as early as possible. Awaited arrivals
/// must find the emitter idle.
pub(crate) fn walk_ops(p: &EmissionProgram, ops: &[Vec<Op>], tau: u64) -> std::result::Result<Walk, WalkError> {
    walk_mode(p, ops, tau, true)
}

/// Like [`walk_ops`] but late arrivals are waited past instead of
/// reported, which still gives every photon a plausible start time.
pub(crate) fn walk_relaxed(p: &EmissionProgram, ops: &[Vec<Op>], tau: u64) -> std::result::Result<Walk, WalkError> {
    walk_mode(p, ops, tau, false)
}

fn walk_mode(p: &EmissionProgram, ops: &[Vec<Op>], tau: u64, strict: bool) -> std::result::Result<Walk, WalkError> {
    let n = p.photons.len();
    let mut starts: Vec<Option<u64>> = vec![None; n];
    let mut pc = vec![0usize; ops.len()];
    let mut now = vec![0u64; ops.len()];
    let mut prepares = Vec::new();
    loop {
        let mut progressed = false;
        for j in 0..ops.len() {
            while pc[j] < ops[j].len() {
                let i = pc[j];
                let at = |a: ArrivalId, starts: &[Option<u64>]| starts[a.photon].map(|s| p.arrival_time(a, s, tau));
                match ops[j][i] {
                    Op::Prepare => prepares.push((j, now[j], i)),
                    Op::Emit { photon, .. } => {
                        starts[photon] = Some(now[j]);
                        now[j] += p.duration(photon);
                    }
                    Op::EmitAround { photon, arrival, .. } => {
                        let Some(a) = at(arrival, &starts) else { break };
                        let s = a.saturating_sub(2);
                        if strict && (s < now[j] || a < 2) {
                            let amount = now[j] + 2 - a.min(now[j] + 2);
                            return Err(WalkError::Deficit(Deficit { emitter: j, op: i, arrival, amount: amount.max(1) }));
                        }
                        let s = s.max(now[j]);
                        starts[photon] = Some(s);
                        now[j] = s + p.duration(photon);
                    }
                    Op::Await(arrival) => {
                        let Some(a) = at(arrival, &starts) else { break };
                        if a <= now[j] && strict {
                            return Err(WalkError::Deficit(Deficit { emitter: j, op: i, arrival, amount: now[j] - a + 1 }));
                        }
                        now[j] = now[j].max(a + 1);
                    }
                    Op::Idle(d) => now[j] += d,
                }
                pc[j] += 1;
                progressed = true;
            }
        }
        if pc.iter().zip(ops).all(|(&c, o)| c == o.len()) {
            break;
        }
        if !progressed {
            return Err(WalkError::Stuck);
        }
    }
    let starts = starts
        .into_iter()
        .collect::<Option<Vec<u64>>>()
        .ok_or(WalkError::Stuck)?;
    Ok(Walk { starts, prepares })
}

/// Emission start of every photon at delay `tau`, or the first deficit.
pub fn walk(p: &EmissionProgram, tau: u64) -> Result<std::result::Result<Vec<u64>, Deficit>> {
    match walk_ops(p, &p.ops, tau) {
        Ok(w) => Ok(Ok(w.starts)),
        Err(WalkError::Deficit(d)) => Ok(Err(d)),
        Err(WalkError::Stuck) => Err(Error::InvalidProgram("operations wait on photons that are never emitted".into())),
    }
}

/// Times the program at delay `tau` and derives the gates the feedback
/// realizes.
pub fn simulate_program(p: &EmissionProgram, tau: u64) -> Result<(Timeline, super::GateList)> {
    if tau < p.emitters as u64 * super::HOP {
        return Err(Error::InfeasibleDelay { tau, reason: "shorter than the waveguide between emitters".into() });
    }
    let w = match walk_ops(p, &p.ops, tau) {
        Ok(w) => w,
        Err(WalkError::Deficit(d)) => {
            return Err(Error::InfeasibleDelay {
                tau,
                reason: format!("emitter {} busy when bin {:?} of photon {} arrives", d.emitter, d.arrival.bin, d.arrival.photon),
            })
        }
        Err(WalkError::Stuck) => return Err(Error::InvalidProgram("operations wait on photons that are never emitted".into())),
    };
    let timeline = build_timeline(p, &w, tau);
    let gates = super::verify::gate_list(p, &timeline)?;
    Ok((timeline, gates))
}

fn build_timeline(p: &EmissionProgram, w: &Walk, tau: u64) -> Timeline {
    let mut events = Vec::new();
    for &(j, t, seq) in &w.prepares {
        events.push(Event { time: t, emitter: j, kind: EventKind::Prepare, photon: None, bin: None, pass: None, seq });
    }
    let mut emissions = Vec::with_capacity(p.photons.len());
    let mut seq_of = vec![0usize; p.photons.len()];
    for ops in &p.ops {
        for (i, op) in ops.iter().enumerate() {
            if let Op::Emit { photon, .. } | Op::EmitAround { photon, .. } = *op {
                seq_of[photon] = i;
            }
        }
    }
    for (ph, info) in p.photons.iter().enumerate() {
        let e = Emission { photon: ph, emitter: info.emitter, kind: info.kind, start: w.starts[ph], duration: p.duration(ph) };
        let base = Event { time: e.start, emitter: e.emitter, kind: EventKind::EmitEarly, photon: Some(ph), bin: Some(Bin::Early), pass: None, seq: seq_of[ph] };
        events.push(base);
        events.push(Event { time: e.late(), kind: EventKind::EmitLate, bin: Some(Bin::Late), ..base });
        events.push(Event { time: e.end(), kind: EventKind::EmitEnd, bin: None, ..base });
        for (k, pass) in info.passes.iter().enumerate() {
            for bin in [Bin::Early, Bin::Late] {
                let a = ArrivalId { photon: ph, pass: k, bin };
                events.push(Event {
                    time: p.arrival_time(a, e.start, tau),
                    emitter: pass.emitter,
                    kind: EventKind::Arrival,
                    photon: Some(ph),
                    bin: Some(bin),
                    pass: Some(k),
                    seq: usize::MAX,
                });
            }
        }
        emissions.push(e);
    }
    events.sort_by_key(|e| (e.time, e.emitter, e.seq, e.kind, e.photon, e.bin));
    let end_time = emissions.iter().map(|e| e.end()).max().unwrap_or(0);
    Timeline { tau_del: tau, emitters: p.emitters, events, emissions, end_time }
}
