//! Decide whether exhaustive search is affordable: run greedy, then count
//! the subsets exhaustive search would have to score at that depth.
//!
//! Run with `cargo run --release --example estimate_exhaustive`.

use std::time::Duration;

use groupmatch::fixtures::{item_criteria, item_dataset};
use groupmatch::{
    calibrate_rate, count_configurations, estimate_exhaustive, exhaustive_search, greedy_search,
    MatchConfig, TestRegistry,
};

fn main() -> groupmatch::Result<()> {
    let reg = TestRegistry::with_builtins();
    for n in [30, 400] {
        let d = item_dataset(n, 3)?;
        let cfg = MatchConfig::new(item_criteria(0.8)).with_seed(1);
        let greedy = greedy_search(&d, &cfg, &reg)?;
        let rate = calibrate_rate(&d, &cfg, &reg, Duration::from_millis(200))?;
        let est = estimate_exhaustive(&d, &cfg, greedy.removed_count(), rate)?;
        println!("N={n}: greedy removed {}", greedy.removed_count());
        println!("  {est}");
        if est.feasible && est.seconds < 30.0 {
            let ex = exhaustive_search(&d, &cfg, &reg, greedy.removed_count())?;
            println!(
                "  exhaustive removed {} with {} optimal solution(s)",
                ex.removed_count(),
                ex.solutions.len()
            );
        }
    }
    // Exact counts stay exact well past f64 precision.
    println!("C(1000, <=40) = {}", count_configurations(1000, 40)?);
    Ok(())
}
