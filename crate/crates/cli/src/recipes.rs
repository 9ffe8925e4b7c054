//! Preset sweeps for the throughput/fairness experiment figures.
//!
//! All presets share the default single-cell scenario; they differ only in
//! the axes. The CSV carries every outcome column, so one run serves
//! whichever metric a figure plots:
//!
//! * `fig4` - licensed-user throughput vs xi (AWA-S per W, GEO-S per W);
//! * `fig5` - D2D-mode probability vs (W, xi) for AWA-S;
//! * `fig6` - D2D-source throughput vs xi;
//! * `fig7` - sum throughput vs xi;
//! * `fig8` - minimum (fairness) throughput vs xi;
//! * `fig9` - both throughputs vs W for GEO-S, AWA-S at xi = 20 dB, and
//!   AWAm-S with 12 levels from -13 dBm.

use d2dshare_core::strategies::StrategyKind;

use crate::config::ExperimentSpec;

pub const RECIPE_NAMES: [&str; 6] = ["fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

/// Returns the preset sweep for a figure name, or `None` if unknown.
pub fn recipe(name: &str) -> Option<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    match name {
        // figs 4, 6, 7, 8 plot different columns of the same sweep
        "fig4" | "fig6" | "fig7" | "fig8" => {
            spec.strategies = vec![StrategyKind::AwaS, StrategyKind::GeoS];
            spec.w_list = vec![1, 2, 4, 10];
            spec.xi_db_list = (0..=10).map(|i| 2.0 * i as f64).collect();
        }
        "fig5" => {
            spec.strategies = vec![StrategyKind::AwaS];
            spec.w_list = (1..=10).collect();
            spec.xi_db_list = vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0];
        }
        "fig9" => {
            spec.strategies = vec![StrategyKind::GeoS, StrategyKind::AwaS, StrategyKind::AwamS];
            spec.w_list = (1..=10).collect();
            spec.xi_db_list = vec![20.0];
        }
        _ => return None,
    }
    Some(spec)
}
