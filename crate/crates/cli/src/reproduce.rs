//! Figure and table presets. All use the long-distance constant set
//! (detector efficiency 0.95, 20 km attenuation, 1e-4 operational error,
//! 1 ns photons, gates of ten photon lengths) with no coherence penalty.

use anyhow::Result;
use rayon::prelude::*;

use ltc_core::{Family, RepeaterConfig, SearchSpace};

use crate::args::{Cli, Reproduce};
use crate::commands::{eps_eff_rows, rate_rows, OptRow};
use crate::output::{emit, float_grid, RunManifest};

fn capped_space(family: Family) -> SearchSpace {
    SearchSpace { k_max: 3, nph_max: Some(100), ..SearchSpace::new(family) }
}

/// Generable trees are capped at 75 photons, symmetric ones only by b <= `b_max`.
fn rate_curves() -> Vec<(&'static str, SearchSpace)> {
    vec![
        ("single-emitter", SearchSpace { nph_max: Some(75), ..SearchSpace::new(Family::SingleEmitter) }),
        ("symmetric-b5", SearchSpace { b_max: 5, nph_max: None, ..SearchSpace::new(Family::Symmetric) }),
        ("symmetric-b20", SearchSpace { b_max: 20, nph_max: None, ..SearchSpace::new(Family::Symmetric) }),
    ]
}

pub fn run(cli: &Cli, which: Reproduce) -> Result<()> {
    let eps_or = |grid: &str| -> Result<Vec<f64>> { if cli.eps.is_empty() { float_grid(grid) } else { Ok(cli.eps.clone()) } };
    let rows: Vec<OptRow> = match which {
        Reproduce::Tab4 | Reproduce::Fig6a => {
            let eps = eps_or(if which == Reproduce::Tab4 { "0.01:0.49:0.02" } else { "0.01:0.49:0.01" })?;
            let mut rows = eps_eff_rows("symmetric", &capped_space(Family::Symmetric), &eps)?;
            rows.extend(eps_eff_rows("branch-list", &capped_space(Family::BranchList), &eps)?);
            rows
        }
        Reproduce::Fig1d => {
            let config = RepeaterConfig::reference(300.0, 1);
            let stations: Vec<u32> = (10..=590).step_by(10).collect();
            let mut rows = Vec::new();
            for (name, space) in rate_curves() {
                rows.extend(rate_rows(name, &space, &config, &stations, true)?);
            }
            rows
        }
        Reproduce::Fig4b => {
            let mut curves = rate_curves();
            curves.remove(1);
            let lengths: Vec<u32> = (50..=600).step_by(50).collect();
            let mut rows = Vec::new();
            for (name, space) in curves {
                let per_length: Vec<Vec<OptRow>> = lengths
                    .par_iter()
                    .map(|&l| {
                        // Spacings down to half a kilometre.
                        let stations: Vec<u32> = (10..=2 * l).step_by(10).collect();
                        rate_rows(name, &space, &RepeaterConfig::reference(l as f64, 1), &stations, false)
                    })
                    .collect::<Result<_>>()?;
                rows.extend(per_length.into_iter().flatten());
            }
            rows
        }
    };
    emit(cli, &RunManifest::new(&format!("reproduce {}", name(which)), cli), &[], &rows)
}

fn name(r: Reproduce) -> &'static str {
    match r {
        Reproduce::Fig1d => "fig1d",
        Reproduce::Fig4b => "fig4b",
        Reproduce::Fig6a => "fig6a",
        Reproduce::Tab4 => "tab4",
    }
}
