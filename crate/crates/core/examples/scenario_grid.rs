//! Runs a reduced version of the office grid (fewer repetitions and cells)
//! and prints the R / M2 / M1 table.
//!
//! cargo run --release --example scenario_grid [-- reps]

use shiftrisk::scenario::{render_report, run_grid, GridSpec, ReportFormat, ScenarioConfig};

fn main() -> shiftrisk::Result<()> {
    let reps = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/real_data_grid.toml");
    let mut cfg = ScenarioConfig::load(path)?;
    cfg.solver.repetitions = reps;
    cfg.grid = Some(GridSpec {
        test_capacity: Some(vec![1, 2, 3]),
        ..GridSpec::default()
    });
    let rows = run_grid(&cfg)?;
    print!("{}", render_report(&rows, ReportFormat::Markdown));
    Ok(())
}
