//! Approaching an exceptional point: the response grows but the sensing
//! limit stays above the fundamental bound.

use bosonic_limits::model::Target;
use bosonic_limits::scenarios::{self, PresetSpec, SweepOutcome};

fn main() -> bosonic_limits::error::Result<()> {
    let family = PresetSpec::default_for("two_mode_ep")?;
    let grid = scenarios::logspace(0.3, 1e-6, 12);
    println!("{:>10} {:>12} {:>12} {:>12} {:>12}", "epsilon", "response", "limit", "bound", "margin");
    for row in scenarios::sweep(&family, "epsilon", &grid, 1e4, 0, Target::Frequency(0))? {
        match row.outcome {
            SweepOutcome::Ok { limit, bound, margin, response_mag } => println!(
                "{:>10.2e} {response_mag:>12.5} {limit:>12.5e} {bound:>12.5e} {margin:>12.4e}",
                row.value
            ),
            SweepOutcome::Skipped { reason } => println!("{:>10.2e} skipped: {reason}", row.value),
        }
    }
    Ok(())
}
