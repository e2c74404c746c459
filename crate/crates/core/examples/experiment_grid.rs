//! Compare algorithms on the small synthetic grid, one replicate per cell.
//!
//! Run with `cargo run --release --example experiment_grid`.

use groupmatch::harness::{run_experiment_grid, Aggregate, GridOptions};
use groupmatch::synthgen::desk_grid;
use groupmatch::{Algorithm, KeepSchedule, Variant};

fn main() -> groupmatch::Result<()> {
    let specs = desk_grid(2024);
    let algorithms = vec![
        Algorithm::Random { iterations: 200, schedule: KeepSchedule::Linear },
        Algorithm::Greedy,
        Algorithm::Lookahead { variant: Variant::H3, lookahead: 1, batch: 1, revert_at: 0.5 },
        Algorithm::Lookahead { variant: Variant::H4, lookahead: 1, batch: 1, revert_at: 0.5 },
    ];
    let report = run_experiment_grid(&specs, &algorithms, 1, 2024, &GridOptions::default())?;
    println!("{} cells over {} parameter sets", report.rows.len(), specs.len());
    print!("{}", report.text_table(Aggregate::Median));
    Ok(())
}
