//! Large item sets: batched removal (rho) against one-at-a-time h3.
//!
//! Run with `cargo run --release --example item_matching_rho`.

use groupmatch::fixtures::{item_criteria, item_dataset};
use groupmatch::{lookahead_search, LookaheadParams, MatchConfig, TestRegistry, Variant};

fn main() -> groupmatch::Result<()> {
    let d = item_dataset(2000, 1)?;
    let cfg = MatchConfig::new(item_criteria(0.2)).with_seed(3);
    let reg = TestRegistry::with_builtins();
    for rho in [1, 10, 100] {
        let params = LookaheadParams::new(Variant::H3, 1).with_batch(rho);
        let res = lookahead_search(&d, &cfg, &reg, params)?;
        println!(
            "rho={rho:<3} success={} removed={} evaluations={} time={:.2?}",
            res.success,
            res.removed_count(),
            res.evaluations,
            res.wall_time
        );
    }
    Ok(())
}
