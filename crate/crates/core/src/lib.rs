//! Loss-tolerant tree codes for all-photonic repeaters: recovery
//! probability under photon loss, a loss simulator, top-to-bottom emission
//! schedules from one or two emitters, repeater rates and tree searches.

pub mod error;
pub mod recovery;
pub mod repeater;
pub mod schedule;
pub mod search;
pub mod sim;
pub mod tree;

pub use error::{Error, Result};
pub use recovery::{p_rec_general, p_rec_ordered, p_rec_symmetric, BranchOrder, LossModel, RecoveryProfile};
pub use repeater::{rate, RateReport, RepeaterConfig, ScheduleOutputs};
pub use schedule::{build_program, generation_time, simulate_program, verify_target, EmissionProgram, Variant};
pub use sim::{exact_p_rec, mc_p_rec, SimEstimate};
pub use tree::{Branch, ExplicitTree, TreeSpec};
pub use search::{best_rate_per_station, optimize_eps_eff, optimize_rate, photon_budget_sweep, Family, SearchResult, SearchSpace};
