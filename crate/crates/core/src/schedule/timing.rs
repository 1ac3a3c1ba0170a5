//! Generation-time accounting.
//!
//! Default step policy for the depth-three families: step 1 holds the root,
//! the branch roots of the root's own chain and the first middle group of
//! each; a photon fed back after the delay line starts step 2 (or 3) for
//! whatever it links to, while a photon reached on its first pass stays in
//! the step of its source. Step durations count fast photons as one unit
//! and slow ones as `beta` units.

use serde::Serialize;

use super::build::{layout, passes_for, SlotKind};
use super::{simulate_program, EmissionProgram, Variant};
use crate::error::Result;
use crate::repeater::ScheduleOutputs;
use crate::tree::TreeSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GenerationTime {
    /// Step durations, `None` for programs without the three-step structure.
    pub tau: Option<[u64; 3]>,
    pub tau_del: u64,
    pub t_tree: u64,
    pub n_slow: usize,
    pub n_fast: usize,
    pub emitters: usize,
}

impl GenerationTime {
    /// Delay and generation time from step durations.
    pub fn from_steps(tau: [u64; 3], n_slow: usize, n_fast: usize, emitters: usize) -> Self {
        let tau_del = tau[0].max(tau[1]);
        GenerationTime { tau: Some(tau), tau_del, t_tree: 2 * tau_del + tau[1] + tau[2], n_slow, n_fast, emitters }
    }

    pub fn outputs(&self, tau_ph_s: f64) -> ScheduleOutputs {
        ScheduleOutputs {
            tau_del_s: self.tau_del as f64 * tau_ph_s,
            t_tree_s: self.t_tree as f64 * tau_ph_s,
            emitters: self.emitters as u32,
        }
    }
}

/// Assigns photons to generation steps.
pub trait StepPolicy {
    /// 1-based step of a photon, or `None` if the program has no step
    /// structure.
    fn step(&self, p: &EmissionProgram, photon: usize) -> Option<usize>;
}

/// Steps as recorded by the builder, for the depth-three families only.
#[derive(Clone, Copy, Debug, Default)]
pub struct ThreeStepPolicy;

impl StepPolicy for ThreeStepPolicy {
    fn step(&self, p: &EmissionProgram, photon: usize) -> Option<usize> {
        match p.variant {
            Variant::Pilot => None,
            _ => Some(p.photons[photon].step),
        }
    }
}

pub fn generation_time(p: &EmissionProgram) -> Result<GenerationTime> {
    generation_time_with(p, &ThreeStepPolicy)
}

pub fn generation_time_with(p: &EmissionProgram, policy: &dyn StepPolicy) -> Result<GenerationTime> {
    let n_slow = p.slow_count();
    let n_fast = p.photons.len() - n_slow;
    let steps: Option<Vec<usize>> = (0..p.photons.len()).map(|v| policy.step(p, v)).collect();
    match steps {
        Some(steps) => {
            let mut per = vec![[0u64; 3]; p.emitters];
            for (v, &s) in steps.iter().enumerate() {
                per[p.photons[v].emitter][s.clamp(1, 3) - 1] += p.duration(v);
            }
            let mut tau = [0u64; 3];
            for row in &per {
                for i in 0..3 {
                    tau[i] = tau[i].max(row[i]);
                }
            }
            Ok(GenerationTime::from_steps(tau, n_slow, n_fast, p.emitters))
        }
        None => {
            let (tl, _) = simulate_program(p, p.min_tau_del)?;
            Ok(GenerationTime { tau: None, tau_del: p.min_tau_del, t_tree: tl.end_time, n_slow, n_fast, emitters: p.emitters })
        }
    }
}

/// The same accounting straight from the branch layout, without building a
/// program. With `enforce` off, branches with more sons than their slot
/// allows are still counted; such trees cannot actually be emitted.
pub fn layout_time(tree: &TreeSpec, variant: Variant, beta: u64, enforce: bool) -> Result<GenerationTime> {
    tree.validate()?;
    let lay = layout(tree, variant, enforce)?;
    let e = lay.emitters;
    let root_passes = passes_for(0, e);
    let mut per = vec![[0u64; 3]; e];
    let (mut n_slow, mut n_fast) = (0usize, 0usize);
    let mut add = |per: &mut Vec<[u64; 3]>, emitter: usize, step: usize, slow: bool, count: u64| {
        per[emitter][step.min(3) - 1] += count * if slow { beta } else { 1 };
        if slow {
            n_slow += count as usize;
        } else {
            n_fast += count as usize;
        }
    };
    let root_slow = lay.slots.iter().any(|s| matches!(s, SlotKind::Link { .. }));
    add(&mut per, 0, 1, root_slow, 1);
    for (k, branch) in tree.branch_list().iter().enumerate() {
        let (c, n) = (branch[0] as usize, branch[1] as u64);
        let em = lay.branch_emitter(k);
        let (step, chain_sons) = match lay.slots[k] {
            SlotKind::Chain => (1, 1),
            SlotKind::Link { pass, .. } => (1 + root_passes[pass].feedback as usize, c.min(2)),
        };
        let linked = c.saturating_sub(chain_sons);
        add(&mut per, em, step, linked > 0, 1);
        add(&mut per, em, step, false, chain_sons.min(c) as u64 * (1 + n));
        // Linked middles follow the branch root's passes in order.
        let passes = passes_for(em, e);
        for i in 0..linked {
            let pass = passes[(i / 2).min(passes.len() - 1)];
            add(&mut per, pass.emitter, step + pass.feedback as usize, false, 1 + n);
        }
    }
    let mut tau = [0u64; 3];
    for row in &per {
        for i in 0..3 {
            tau[i] = tau[i].max(row[i]);
        }
    }
    Ok(GenerationTime::from_steps(tau, n_slow, n_fast, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_steps_give_four_times() {
        let g = GenerationTime::from_steps([7, 7, 7], 0, 0, 1);
        assert_eq!(g.tau_del, 7);
        assert_eq!(g.t_tree, 28);
    }

    #[test]
    fn asymmetric_layout_counts() {
        // Links: (4,3) and (4,2); chain: (3,1).
        let t = TreeSpec::branches(vec![vec![4, 3], vec![4, 2], vec![3, 1]]).unwrap();
        let g = layout_time(&t, Variant::Modified, 500, true).unwrap();
        // Step 1: root and (3,1) root slow, its first middle group of 2.
        // Step 2: both link roots slow, two chain groups each (4+4, 3+3),
        // two linked groups of (3,1).
        // Step 3: two linked groups each for (4,3) and (4,2).
        assert_eq!(g.tau, Some([1002, 1000 + 14 + 4, 8 + 6]));
        assert_eq!(g.tau_del, 1018);
        assert_eq!(g.t_tree, 2 * 1018 + 1018 + 14);
        assert_eq!(g.n_slow + g.n_fast, 38);
    }
}
