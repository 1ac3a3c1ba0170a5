//! Top-to-bottom emission of tree codes from one or two emitters with a
//! fixed feedback delay.
//!
//! Time is counted in units of the fast emission duration. A fast emission
//! takes one unit and a slow one `beta` units. Within an emission the early
//! bin leaves at the start and the late bin in the last unit. Only slow
//! photons are routed back to the emitters; fast photons never interact.
//!
//! At the logical level the emitter's Z value always equals the Z value of
//! one photon of the segment it is working on (the photons emitted between
//! two preparation pulses), so a fed-back bin acts as a CZ with that
//! segment's representative. After a resetting emission the emitter is back
//! in its ground state and bins pass without effect.

mod build;
mod tableau;
mod timeline;
mod timing;
mod verify;

use serde::Serialize;

pub use build::{build_program, layout, Layout, Mutation, SlotKind};
pub use tableau::{verify_state, StabilizerGroup, StateCheck};
pub use timeline::{simulate_program, walk, Deficit, Event, EventKind, Timeline};
pub use timing::{generation_time, generation_time_with, layout_time, GenerationTime, StepPolicy, ThreeStepPolicy};
pub use verify::{classify_feedback, verify_target, GateList, GateRecord, Outcome, Verification};

/// Travel time between neighbouring emitters on the waveguide.
pub const HOP: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Binary trees, one emitter, every inner layer fed back.
    Pilot,
    /// Depth-three branch lists from one emitter.
    Modified,
    /// Depth-three branch lists from two emitters on one waveguide.
    TwoEmitter,
}

impl Variant {
    pub fn emitters(self) -> usize {
        match self {
            Variant::TwoEmitter => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Pilot => "pilot",
            Variant::Modified => "modified",
            Variant::TwoEmitter => "two-emitter",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s {
            "pilot" => Ok(Variant::Pilot),
            "modified" => Ok(Variant::Modified),
            "two-emitter" => Ok(Variant::TwoEmitter),
            _ => Err(crate::error::Error::InvalidParameter(format!("unknown variant {s:?}"))),
        }
    }
}

/// Emission kinds. `E`/`S` return the emitter to its ground state at the
/// end, `EBar`/`SBar` leave it correlated with the photon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EmitKind {
    E,
    EBar,
    S,
    SBar,
}

impl EmitKind {
    pub fn new(slow: bool, resets: bool) -> Self {
        match (slow, resets) {
            (false, true) => EmitKind::E,
            (false, false) => EmitKind::EBar,
            (true, true) => EmitKind::S,
            (true, false) => EmitKind::SBar,
        }
    }

    pub fn is_slow(self) -> bool {
        matches!(self, EmitKind::S | EmitKind::SBar)
    }

    pub fn resets(self) -> bool {
        matches!(self, EmitKind::E | EmitKind::S)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            EmitKind::E => "E",
            EmitKind::EBar => "Ebar",
            EmitKind::S => "S",
            EmitKind::SBar => "Sbar",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Bin {
    Early,
    Late,
}

/// One passage of a slow photon by an emitter: on the way out past the
/// emitters downstream of its source, or after the delay line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Pass {
    pub emitter: usize,
    pub feedback: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ArrivalId {
    pub photon: usize,
    pub pass: usize,
    pub bin: Bin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Op {
    /// Hadamard-like preparation pulse on the emitter.
    Prepare,
    Emit { photon: usize, kind: EmitKind },
    /// Emission timed so that `arrival` falls between its two bins.
    EmitAround { photon: usize, kind: EmitKind, arrival: ArrivalId },
    /// Wait until `arrival` has passed, then one guard unit.
    Await(ArrivalId),
    Idle(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhotonInfo {
    pub emitter: usize,
    pub kind: EmitKind,
    /// Generation step used by the time accounting (1-based).
    pub step: usize,
    /// Empty for photons that are not fed back.
    pub passes: Vec<Pass>,
}

/// Planned effect of one fed-back bin: the photon whose segment it should
/// meet, or none.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LinkAssignment {
    pub arrival: ArrivalId,
    pub target: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct EmissionProgram {
    pub variant: Variant,
    pub tree: crate::tree::TreeSpec,
    pub explicit: crate::tree::ExplicitTree,
    pub emitters: usize,
    pub beta: u64,
    /// Indexed by tree vertex; photon ids are vertex ids.
    pub photons: Vec<PhotonInfo>,
    pub ops: Vec<Vec<Op>>,
    pub links: Vec<LinkAssignment>,
    /// Leaves of the deepest layer are emitted in a rotated basis.
    pub last_layer_rotated: bool,
    /// Smallest delay the builder found feasible for this program.
    pub min_tau_del: u64,
    pub(crate) plan: build::Plan,
}

impl EmissionProgram {
    pub fn duration(&self, photon: usize) -> u64 {
        if self.photons[photon].kind.is_slow() {
            self.beta
        } else {
            1
        }
    }

    pub fn slow_count(&self) -> usize {
        self.photons.iter().filter(|p| p.kind.is_slow()).count()
    }

    pub fn fed_back(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.photons.len()).filter(|&p| !self.photons[p].passes.is_empty())
    }

    /// Arrival of a bin given the photon's emission start.
    pub fn arrival_time(&self, a: ArrivalId, start: u64, tau_del: u64) -> u64 {
        let bin = start + if a.bin == Bin::Late { self.duration(a.photon) - 1 } else { 0 };
        let src = self.photons[a.photon].emitter as u64;
        let pass = self.photons[a.photon].passes[a.pass];
        let to = pass.emitter as u64;
        if pass.feedback {
            // The delay line starts and ends upstream of emitter 0.
            bin + tau_del + to * HOP - src * HOP
        } else {
            bin + (to - src) * HOP
        }
    }
}
