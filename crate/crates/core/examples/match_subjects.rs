//! Match two small groups on age and IQ with greedy and h3 search.
//!
//! Run with `cargo run --release --example match_subjects`.

use groupmatch::{
    greedy_search, lookahead_search, CriteriaSet, CriterionSpec, Dataset, LookaheadParams,
    MatchConfig, MatchResult, Schema, TestRegistry, Variant,
};

const SUBJECTS: &str = "\
id,group,age,iq
c01,control,7.1,104
c02,control,7.4,98
c03,control,8.0,110
c04,control,8.3,101
c05,control,8.9,95
c06,control,9.2,107
c07,control,9.6,99
c08,control,10.1,112
c09,control,10.4,103
c10,control,11.0,100
c11,control,6.2,118
c12,control,6.5,121
p01,patient,7.9,97
p02,patient,8.4,102
p03,patient,8.8,94
p04,patient,9.1,99
p05,patient,9.5,105
p06,patient,9.9,96
p07,patient,10.3,101
p08,patient,10.8,93
p09,patient,11.2,100
p10,patient,11.9,98
";

fn report(d: &Dataset, res: &MatchResult) {
    println!(
        "{}: success={} removed={} solutions={} evaluations={}",
        res.algorithm,
        res.success,
        res.removed_count(),
        res.solutions.len(),
        res.evaluations
    );
    let removed: Vec<&str> = res.best().removed_indices().map(|i| d.id(i)).collect();
    println!("  removed: {}", removed.join(", "));
    for c in &res.criteria {
        println!(
            "  {} {} {:?}: p={:.3} (alpha {}, ratio {:.2})",
            c.test, c.covariate, c.groups, c.p, c.alpha, c.ratio
        );
    }
}

fn main() -> groupmatch::Result<()> {
    let schema = Schema::new("id", "group", ["age", "iq"]);
    let d = Dataset::from_reader(SUBJECTS.as_bytes(), &schema)?;
    let criteria = CriteriaSet::new(vec![
        CriterionSpec::new("welch_t", "age", ["control", "patient"], 0.2),
        CriterionSpec::new("welch_t", "iq", ["control", "patient"], 0.2),
    ]);
    let cfg = MatchConfig::new(criteria).with_seed(11);
    let reg = TestRegistry::with_builtins();

    report(&d, &greedy_search(&d, &cfg, &reg)?);
    let h3 = lookahead_search(&d, &cfg, &reg, LookaheadParams::new(Variant::H3, 2))?;
    report(&d, &h3);
    print!("kept ids per solution:\n{}", h3.solutions_text(&d));
    Ok(())
}
