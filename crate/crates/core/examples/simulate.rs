//! Generate a synthetic dataset with planted intruders and write it out
//! together with the intruder flags.
//!
//! Run with `cargo run --release --example simulate [out_dir]`.

use std::path::PathBuf;

use groupmatch::synthgen::{generate_dataset, write_truth, SyntheticSpec};
use groupmatch::{write_dataset, Schema};

fn main() -> groupmatch::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("groupmatch_simulate"));
    std::fs::create_dir_all(&out).map_err(|e| groupmatch::MatchError::Io {
        path: out.display().to_string(),
        source: e,
    })?;

    // 60 items, 6 of them intruders shifted on 2 of 3 covariates.
    let spec = SyntheticSpec::new(60, 6, 3, 2, 42);
    let data = generate_dataset(&spec)?;
    let d = &data.dataset;
    println!(
        "accepted after {} attempt(s): basic min p {:.3}, all-items min p {:.4}",
        data.truth.attempts, data.truth.basic_p, data.truth.all_p
    );
    println!("shifted covariates {:?} by {:?}", data.truth.shifted, data.truth.shifts);
    for (g, label) in d.group_labels().iter().enumerate() {
        let intr = d.members(g).iter().filter(|&&i| data.intruders[i]).count();
        println!("group {label}: {} items, {intr} intruders", d.members(g).len());
    }

    let schema = Schema::new("id", "group", d.covariate_names().to_vec());
    write_dataset(d, out.join("dataset.csv"), &schema)?;
    write_truth(d, &data.intruders, out.join("truth.csv"))?;
    println!("wrote {}", out.display());
    Ok(())
}
