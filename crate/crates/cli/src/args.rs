use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Clone, Debug, Serialize, Deserialize)]
#[command(name = "ltc", version, about = "Loss-tolerant tree codes: recovery, schedules, repeater rates and searches")]
pub struct Cli {
    /// Tree file, inline document (`{"symmetric":[3,8,3]}`) or table
    /// notation (`[3,8,3]`, `[(4,3),(4,2),(3,1)]`).
    #[arg(long, global = true)]
    pub tree: Option<String>,
    /// Hardware preset: qdot, qdot-hc, siv or atom.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[arg(long, global = true, default_value_t = 2024)]
    pub seed: u64,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Loss probabilities, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Run a figure or table preset instead of a subcommand.
    #[arg(long)]
    pub reproduce: Option<Reproduce>,
    /// Rerun the command recorded in an earlier output file.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reproduce {
    /// Rate against station count at 300 km.
    Fig1d,
    /// Rate against distance.
    Fig4b,
    /// Logical loss against physical loss.
    Fig6a,
    /// Best symmetric and asymmetric trees per loss.
    Tab4,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    Best,
    AsGiven,
}

impl From<Order> for ltc_core::BranchOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::Best => ltc_core::BranchOrder::Best,
            Order::AsGiven => ltc_core::BranchOrder::AsGiven,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    EpsEff,
    Rate,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    /// Step accounting of the emission layout.
    Layout,
    /// Same, without the family's capacity checks.
    Permissive,
    /// Bottom-to-top stand-in: every photon fast plus one gate per edge.
    Baseline,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coherence {
    None,
    Exponential,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
pub enum Command {
    /// Recovery probability and per-branch profile.
    Prec {
        /// Loss grid `start:stop:step`, added to `--eps`.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, value_enum, default_value_t = Order::AsGiven)]
        order: Order,
    },
    /// Analytic, exact and Monte Carlo recovery side by side.
    McVerify {
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
    /// Repeater rate of one tree.
    Rate {
        #[command(flatten)]
        link: LinkArgs,
        /// Station counts: `a:b:step`, `a,b,c` or one value.
        #[arg(long, default_value = "1")]
        stations: String,
        #[arg(long, default_value = "modified", value_parser = ["pilot", "modified", "two-emitter"])]
        variant: String,
        #[arg(long, value_enum, default_value_t = Timing::Layout)]
        timing: Timing,
    },
    /// Best tree for logical loss or rate.
    Optimize {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        link: LinkArgs,
        #[arg(long, value_enum, default_value_t = Objective::EpsEff)]
        objective: Objective,
        #[arg(long, default_value = "10:590:10")]
        stations: String,
        /// One row per station count instead of the overall best.
        #[arg(long)]
        per_station: bool,
    },
    /// Photon cost against logical loss at one physical loss.
    Sweep {
        #[command(flatten)]
        space: SpaceArgs,
        /// Emit the per-photon-count optima instead of the bins.
        #[arg(long)]
        raw: bool,
    },
    /// Timed emission program of one tree, checked on a stabilizer register.
    Schedule {
        #[arg(long, default_value = "modified", value_parser = ["pilot", "modified", "two-emitter"])]
        variant: String,
        /// Slow emission length in fast units.
        #[arg(long, default_value_t = 500)]
        beta: u64,
        /// Fast emission length in seconds.
        #[arg(long, default_value_t = 1e-9)]
        tau_ph: f64,
    },
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SpaceArgs {
    #[arg(long, default_value = "symmetric", value_parser = ["symmetric", "single-emitter", "two-emitter", "branch-list"])]
    pub family: String,
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    #[arg(long, default_value_t = 3)]
    pub k_max: usize,
    #[arg(long, default_value_t = 20)]
    pub b_max: u32,
    /// Photon cap; 0 lifts it.
    #[arg(long, default_value_t = 100)]
    pub nph_max: u64,
    #[arg(long, default_value_t = 8)]
    pub branch_cap: usize,
    #[arg(long, default_value_t = 2)]
    pub delta: u32,
    #[arg(long, default_value_t = 4)]
    pub moved_max: usize,
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value_t = 1)]
    pub rounds: usize,
    #[arg(long, value_enum, default_value_t = Order::Best)]
    pub order: Order,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct LinkArgs {
    /// Total distance in km.
    #[arg(long, default_value_t = 300.0)]
    pub length: f64,
    #[arg(long, default_value_t = 0.95)]
    pub eta_d: f64,
    #[arg(long, default_value_t = 20.0)]
    pub l_att: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub eps_r: f64,
    #[arg(long, default_value_t = 500)]
    pub beta: u64,
    /// Fast emission length in seconds; a preset overrides it.
    #[arg(long, default_value_t = 1e-9)]
    pub tau_ph: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tau_cz: f64,
    /// Emitter coherence time in seconds; a preset sets it.
    #[arg(long)]
    pub t_coh: Option<f64>,
    /// Defaults to exponential with a preset and none without.
    #[arg(long, value_enum)]
    pub coherence: Option<Coherence>,
}
