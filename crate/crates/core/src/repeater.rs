//! One-way repeater rate model: channel loss per photon, six-state key
//! fraction, operational error compounding and the per-station rate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recovery::{p_rec_ordered, BranchOrder};
use crate::tree::TreeSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceModel {
    None,
    /// Adds `1 - exp(-T_tree / t_coh)` to the per-station error.
    #[default]
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeaterConfig {
    /// Total distance in km.
    pub length_km: f64,
    /// Repeater stations.
    pub stations: u32,
    /// Matter qubits (emitters) per station.
    pub emitters: u32,
    pub eta_d: f64,
    pub l_att_km: f64,
    pub eps_r: f64,
    /// Photon speed in fiber, km/s.
    pub v_km_s: f64,
    /// Emission rate in rad/s.
    pub gamma: f64,
    pub beta: u64,
    /// Emitter coherence time in s; infinite disables the penalty.
    pub t_coh_s: f64,
    /// Fast emission duration in s.
    pub tau_ph_s: f64,
    /// Two-qubit gate time in units of `tau_ph`, used only by the baseline.
    pub tau_cz_ph: f64,
    pub coherence: CoherenceModel,
    pub order: BranchOrder,
}

impl Default for RepeaterConfig {
    fn default() -> Self {
        RepeaterConfig {
            length_km: 100.0,
            stations: 1,
            emitters: 1,
            eta_d: 0.95,
            l_att_km: 20.0,
            eps_r: 1e-4,
            v_km_s: 2e5,
            gamma: 1e9,
            beta: 500,
            t_coh_s: f64::INFINITY,
            tau_ph_s: 1e-9,
            tau_cz_ph: 10.0,
            coherence: CoherenceModel::None,
            order: BranchOrder::Best,
        }
    }
}

impl RepeaterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.length_km > 0.0) {
            return bad("distance must be positive");
        }
        if !(0.0..=1.0).contains(&self.eta_d) {
            return bad("detection efficiency outside [0,1]");
        }
        if !(self.l_att_km > 0.0) {
            return bad("attenuation length must be positive");
        }
        if !(0.0..1.0).contains(&self.eps_r) {
            return bad("operational error outside [0,1)");
        }
        if self.emitters == 0 {
            return bad("at least one emitter per station");
        }
        Ok(())
    }

    /// Constants of the long-distance comparisons.
    pub fn reference(length_km: f64, stations: u32) -> Self {
        RepeaterConfig { length_km, stations, ..Default::default() }
    }

    pub fn with_preset(mut self, p: &Preset) -> Self {
        self.gamma = p.gamma;
        self.t_coh_s = p.t_coh_s;
        self.tau_ph_s = 1.0 / p.gamma;
        self.coherence = CoherenceModel::Exponential;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub gamma: f64,
    pub t_coh_s: f64,
    pub platform: &'static str,
}

pub fn hardware_presets() -> Vec<Preset> {
    vec![
        Preset { name: "qdot", gamma: 2.0 * PI * 100e9, t_coh_s: 4e-6, platform: "quantum dot" },
        Preset { name: "qdot-hc", gamma: 2.0 * PI * 100e9, t_coh_s: 113e-6, platform: "quantum dot, long coherence" },
        Preset { name: "siv", gamma: 2.0 * PI * 2e9, t_coh_s: 13e-3, platform: "silicon vacancy" },
        Preset { name: "atom", gamma: 2.0 * PI * 170e6, t_coh_s: 1.0, platform: "neutral atom" },
    ]
}

pub fn preset(name: &str) -> Result<Preset> {
    hardware_presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

/// Per-photon loss over one link plus the delay line.
pub fn channel_eps(config: &RepeaterConfig, tau_del_s: f64) -> f64 {
    let hop = if config.stations == 0 { config.length_km } else { config.length_km / config.stations as f64 };
    let l_eff = tau_del_s * config.v_km_s + hop;
    (1.0 - config.eta_d * (-l_eff / config.l_att_km).exp()).clamp(0.0, 1.0)
}

/// Binary entropy in bits.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Asymptotic six-state key fraction, clamped at zero.
pub fn secret_fraction(q: f64) -> f64 {
    if q >= 2.0 / 3.0 {
        return 0.0;
    }
    let f = 1.0 - binary_entropy(q) - q - (1.0 - q) * binary_entropy((1.0 - 1.5 * q) / (1.0 - q));
    f.max(0.0)
}

/// `(eps_trans, Q)` after compounding the per-station error over `m + 1`
/// operations. `t_active_s` feeds the coherence penalty.
pub fn transmission_error(config: &RepeaterConfig, t_active_s: f64) -> (f64, f64) {
    let mut eps_r = config.eps_r;
    if config.coherence == CoherenceModel::Exponential && config.t_coh_s.is_finite() {
        eps_r += 1.0 - (-t_active_s / config.t_coh_s).exp();
    }
    let eps_r = eps_r.clamp(0.0, 1.0 - f64::EPSILON);
    let eps_trans = 1.0 - (1.0 - eps_r).powi(config.stations as i32 + 1);
    (eps_trans, 2.0 * eps_trans / 3.0)
}

/// Loss probability after waiting `t` under an extra loss rate `gamma_loss`.
pub fn loss_enhancement(p_loss: f64, gamma_loss: f64, t: f64) -> f64 {
    1.0 - (-gamma_loss * t).exp() * (1.0 - p_loss)
}

/// Timing a rate evaluation needs from the emission schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScheduleOutputs {
    pub tau_del_s: f64,
    pub t_tree_s: f64,
    pub emitters: u32,
}

/// Stand-in timing for the bottom-to-top comparison: every photon emitted
/// fast, one two-qubit gate per edge, and the whole generation time spent in
/// the delay line. Only good as a reference curve; the real bottom-to-top
/// timing is slower.
pub fn baseline_outputs(tree: &TreeSpec, config: &RepeaterConfig) -> ScheduleOutputs {
    let n = tree.photon_count() as f64;
    let t = (n + (n - 1.0) * config.tau_cz_ph) * config.tau_ph_s;
    ScheduleOutputs { tau_del_s: t, t_tree_s: t, emitters: 1 }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub tree: String,
    pub length_km: f64,
    pub stations: u32,
    pub emitters: u32,
    pub l_att_km: f64,
    pub tau_del_s: f64,
    pub eps: f64,
    pub p_rec: f64,
    pub p_succ: f64,
    pub eps_trans: f64,
    pub q: f64,
    pub f: f64,
    pub t_rep_s: f64,
    pub n_ph: u64,
    pub rate: f64,
}

impl RateReport {
    /// The rate rebuilt from the stored intermediates.
    pub fn recompute(&self) -> f64 {
        rate_formula(self.f, self.p_succ, self.length_km, self.l_att_km, self.t_rep_s, self.stations, self.emitters, self.n_ph)
    }
}

#[allow(clippy::too_many_arguments)]
fn rate_formula(f: f64, p_succ: f64, l: f64, l_att: f64, t_rep: f64, m: u32, n: u32, n_ph: u64) -> f64 {
    if f <= 0.0 || p_succ <= 0.0 {
        return 0.0;
    }
    f * p_succ * (l / l_att) / (t_rep * m as f64 * n as f64 * n_ph as f64)
}

/// Rate alone, for search loops; the caller has validated `config`.
pub(crate) fn rate_value(branches: &[crate::tree::Branch], n_ph: u64, config: &RepeaterConfig, sched: &ScheduleOutputs) -> f64 {
    let (_, q) = transmission_error(config, sched.t_tree_s);
    let f = secret_fraction(q);
    if f <= 0.0 {
        return 0.0;
    }
    let eps = channel_eps(config, sched.tau_del_s);
    let p_rec = crate::recovery::p_rec_value(branches, eps, config.order);
    let p_succ = p_rec.powi(config.stations as i32 + 1);
    rate_formula(f, p_succ, config.length_km, config.l_att_km, sched.t_tree_s, config.stations, sched.emitters, n_ph)
}

pub fn rate(tree: &TreeSpec, config: &RepeaterConfig, sched: &ScheduleOutputs) -> Result<RateReport> {
    config.validate()?;
    if config.stations == 0 {
        return Err(Error::InvalidParameter("the rate needs at least one station".into()));
    }
    let eps = channel_eps(config, sched.tau_del_s);
    let (p_rec, _) = p_rec_ordered(&tree.branch_list(), eps, config.order);
    let p_succ = p_rec.powi(config.stations as i32 + 1);
    let (eps_trans, q) = transmission_error(config, sched.t_tree_s);
    let f = secret_fraction(q);
    let n_ph = tree.photon_count();
    let emitters = sched.emitters;
    Ok(RateReport {
        tree: tree.to_string(),
        length_km: config.length_km,
        stations: config.stations,
        emitters,
        l_att_km: config.l_att_km,
        tau_del_s: sched.tau_del_s,
        eps,
        p_rec,
        p_succ,
        eps_trans,
        q,
        f,
        t_rep_s: sched.t_tree_s,
        n_ph,
        rate: rate_formula(f, p_succ, config.length_km, config.l_att_km, sched.t_tree_s, config.stations, emitters, n_ph),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_fraction_edges() {
        assert_eq!(secret_fraction(0.0), 1.0);
        assert_eq!(secret_fraction(0.7), 0.0);
        assert_eq!(secret_fraction(0.5), 0.0);
    }

    #[test]
    fn channel_loss_edges() {
        let mut c = RepeaterConfig { eta_d: 1.0, stations: 1_000_000_000, ..Default::default() };
        c.length_km = 1e-9;
        assert!(channel_eps(&c, 0.0) < 1e-15);
        let c = RepeaterConfig { stations: 1, length_km: 1e-300, ..Default::default() };
        assert!((channel_eps(&c, 0.0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn loss_enhancement_edges() {
        assert!((loss_enhancement(0.2, 3.0, 0.0) - 0.2).abs() < 1e-15);
        assert!((loss_enhancement(0.0, 1.0, std::f64::consts::LN_2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn presets_resolve() {
        let s = preset("siv").unwrap();
        assert_eq!(s.t_coh_s, 13e-3);
        assert!((s.gamma - 2.0 * PI * 2e9).abs() < 1e-3);
        assert!(preset("ion").is_err());
    }
}
