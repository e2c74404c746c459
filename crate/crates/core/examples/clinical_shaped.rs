//! Four groups, eleven criteria, one locked group and a precedence order
//! for where removals should fall.
//!
//! Run with `cargo run --release --example clinical_shaped`.

use groupmatch::fixtures::clinical_shaped;
use groupmatch::{lookahead_search, LookaheadParams, TestRegistry, Variant};

fn main() -> groupmatch::Result<()> {
    let (d, cfg) = clinical_shaped(1)?;
    let reg = TestRegistry::with_builtins();
    let res = lookahead_search(&d, &cfg, &reg, LookaheadParams::new(Variant::H4, 1))?;
    println!("success={} removed {} of {}", res.success, res.removed_count(), d.len());
    let kept = res.best().kept_per_group();
    for (g, label) in d.group_labels().iter().enumerate() {
        println!("  {label:<4} kept {:>2} of {:>2}", kept[g], d.members(g).len());
    }
    for c in res.criteria.iter().filter(|c| c.ratio < 1.5) {
        println!(
            "  tightest: {} {:?} p={:.3} (alpha {})",
            c.covariate, c.groups, c.p, c.alpha
        );
    }
    Ok(())
}
