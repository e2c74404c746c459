//! Register a user-defined test and use it as a criterion.
//!
//! The test here is the two-sided F test for equal variances. It is added
//! to the registry next to the built-ins and referred to by name.
//!
//! Run with `cargo run --release --example custom_test`.

use groupmatch::fixtures::item_dataset;
use groupmatch::stats::special::beta_reg;
use groupmatch::{
    greedy_search, Arity, CriteriaSet, CriterionSpec, MatchConfig, MatchError, TestFunction,
    TestRegistry,
};

fn variance(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

fn f_test(samples: &[&[f64]]) -> groupmatch::Result<f64> {
    let (a, b) = (samples[0], samples[1]);
    if a.len() < 2 || b.len() < 2 {
        return Err(MatchError::UndefinedTest("F test needs two values per sample".into()));
    }
    let (va, vb) = (variance(a), variance(b));
    if va == 0.0 || vb == 0.0 {
        return Err(MatchError::UndefinedTest("zero variance".into()));
    }
    let (d1, d2) = ((a.len() - 1) as f64, (b.len() - 1) as f64);
    let f = va / vb;
    let cdf = beta_reg(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2));
    Ok((2.0 * cdf.min(1.0 - cdf)).min(1.0))
}

fn main() -> groupmatch::Result<()> {
    let mut reg = TestRegistry::with_builtins();
    reg.register(TestFunction::new("f_variance", Arity::TwoSample, f_test))?;
    println!("registered tests: {}", reg.names().collect::<Vec<_>>().join(", "));

    let d = item_dataset(120, 9)?;
    let criteria = CriteriaSet::new(vec![
        CriterionSpec::new("welch_t", "frequency", ["A", "B"], 0.7),
        CriterionSpec::new("f_variance", "frequency", ["A", "B"], 0.7),
        CriterionSpec::new("welch_t", "length", ["A", "B"], 0.7),
    ]);
    let cfg = MatchConfig::new(criteria).with_seed(5);
    let res = greedy_search(&d, &cfg, &reg)?;
    println!("success={} removed={}", res.success, res.removed_count());
    for c in &res.criteria {
        println!("  {} on {}: p={:.3}", c.test, c.covariate, c.p);
    }
    Ok(())
}
