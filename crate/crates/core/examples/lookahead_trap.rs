//! A planted pair that only lookahead of depth 2 removes together.
//!
//! Run with `cargo run --release --example lookahead_trap`.

use groupmatch::fixtures::two_outlier_trap;
use groupmatch::{
    exhaustive_search, greedy_search, lookahead_search, LookaheadParams, TestRegistry, Variant,
};

fn main() -> groupmatch::Result<()> {
    let (d, cfg) = two_outlier_trap();
    let reg = TestRegistry::with_builtins();
    let runs = [
        greedy_search(&d, &cfg, &reg)?,
        lookahead_search(&d, &cfg, &reg, LookaheadParams::new(Variant::H3, 1))?,
        lookahead_search(&d, &cfg, &reg, LookaheadParams::new(Variant::H3, 2))?,
        lookahead_search(&d, &cfg, &reg, LookaheadParams::new(Variant::H4, 2))?,
        exhaustive_search(&d, &cfg, &reg, 4)?,
    ];
    for res in &runs {
        let removed: Vec<&str> = res.best().removed_indices().map(|i| d.id(i)).collect();
        println!(
            "{:<14} success={} removed [{}]",
            res.algorithm,
            res.success,
            removed.join(", ")
        );
    }
    Ok(())
}
