//! CSV emission: one header row, one row per completed sweep point, plain
//! decimal formatting (shortest round-trip), newline terminated.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::runner::{strategy_name, SweepRow};

pub const CSV_HEADER: &str = "strategy,w,xi_db,omega_u,omega_s,omega_sum,omega_min,d2d_mode_fraction,blockage_fraction,slots,seed";

/// Renders the completed rows as CSV text. Failed rows carry no numbers and
/// are skipped here; the caller reports them and sets the exit code.
pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut text = String::new();
    text.push_str(CSV_HEADER);
    text.push('\n');
    for row in rows {
        if let Ok(outcome) = &row.outcome {
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{},{},{},{},{}",
                strategy_name(row.strategy),
                row.w,
                row.xi_db,
                outcome.omega_u,
                outcome.omega_s,
                outcome.omega_sum,
                outcome.omega_min,
                outcome.d2d_mode_fraction,
                outcome.blockage_fraction,
                outcome.slots_simulated,
                row.seed,
            );
        }
    }
    text
}

/// Writes the table to `path`.
pub fn emit_csv(rows: &[SweepRow], path: &Path) -> io::Result<()> {
    fs::write(path, render_csv(rows))
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}
