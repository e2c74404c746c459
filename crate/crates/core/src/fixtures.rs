//! Small reproducible problem instances used by the examples and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::criteria::{BalanceMode, CriteriaSet, CriterionSpec, MatchConfig};
use crate::dataset::Dataset;
use crate::error::Result;

/// Evenly spaced quantiles on [-1.5, 1.5].
fn spread(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -1.5 + 3.0 * (i as f64 + 0.5) / n as f64)
        .collect()
}

/// Two groups of 8 where a single removal cannot improve on the full set
/// through the planted pair.
///
/// Group A holds `a_lo` and `a_hi`, symmetric extremes on `x` that both
/// sit high on `y`. Removing either one alone unbalances the mean of `x`
/// and lowers `r`; removing both fixes `y` and leaves `x` balanced. The
/// unique best solution removes exactly that pair, while one-step greedy
/// search wanders off and needs three removals.
pub fn two_outlier_trap() -> (Dataset, MatchConfig) {
    const N: usize = 6;
    const C: f64 = 2.5;
    const H: f64 = 1.2;
    let q = spread(N);
    let scramble: Vec<usize> = (0..N).map(|i| (i * 3 + 1) % N).collect();
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for i in 0..N {
        ids.push(format!("a{}", i + 1));
        labels.push("A".to_string());
        rows.push(vec![0.2 * q[i], 0.2 * q[scramble[i]]]);
    }
    ids.push("a_lo".into());
    labels.push("A".into());
    rows.push(vec![-C, H]);
    ids.push("a_hi".into());
    labels.push("A".into());
    rows.push(vec![C, H]);
    for i in 0..N {
        ids.push(format!("b{}", i + 1));
        labels.push("B".to_string());
        rows.push(vec![0.204 * q[i], 0.204 * q[scramble[(i + 1) % N]]]);
    }
    let d = Dataset::new(ids, labels, vec!["x".into(), "y".into()], rows)
        .expect("fixture is valid");
    let criteria = CriteriaSet::new(vec![
        CriterionSpec::new("welch_t", "x", ["A", "B"], 0.7),
        CriterionSpec::new("welch_t", "y", ["A", "B"], 0.35),
    ]);
    (d, MatchConfig::new(criteria))
}

/// Group labels and sizes of the clinical-style fixture.
pub const CLINICAL_GROUPS: [(&str, usize); 4] = [("TD", 43), ("ALN", 25), ("ALI", 26), ("SLI", 19)];

/// A 113-subject, four-group dataset with covariates `age`, `PIQ`, `VIQ`
/// and `ADOS`, and the usual criteria for it: age across every pair,
/// PIQ and VIQ between SLI and ALI and between ALN and TD, ADOS between
/// ALI and ALN. SLI is locked and precedence runs SLI, ALI, ALN, TD.
///
/// Group means differ enough on each covariate that the full set fails.
pub fn clinical_shaped(seed: u64) -> Result<(Dataset, MatchConfig)> {
    // (age months, PIQ, VIQ, ADOS) means per group; SDs are shared.
    let means: [[f64; 4]; 4] = [
        [80.0, 113.0, 114.0, 2.0],
        [83.0, 104.0, 102.0, 11.0],
        [78.0, 95.0, 84.0, 13.0],
        [77.0, 100.0, 90.0, 2.0],
    ];
    let sds = [10.0, 14.0, 14.0, 3.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (g, &(label, size)) in CLINICAL_GROUPS.iter().enumerate() {
        // Each column is standardized so the group hits its mean and SD
        // exactly; only the shape of the sample varies with the seed.
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|k| {
                let z: Vec<f64> = (0..size).map(|_| rng.sample(StandardNormal)).collect();
                let m = z.iter().sum::<f64>() / size as f64;
                let sd = (z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (size - 1) as f64).sqrt();
                z.iter()
                    .map(|v| {
                        let x = means[g][k] + sds[k] * (v - m) / sd;
                        if k == 3 {
                            x.max(0.0).round()
                        } else {
                            (x * 10.0).round() / 10.0
                        }
                    })
                    .collect()
            })
            .collect();
        for i in 0..size {
            ids.push(format!("{label}{:02}", i + 1));
            labels.push(label.to_string());
            rows.push(cols.iter().map(|c| c[i]).collect());
        }
    }
    let covariates = ["age", "PIQ", "VIQ", "ADOS"].map(String::from).to_vec();
    let d = Dataset::new(ids, labels, covariates, rows)?;

    let alpha = 0.2;
    let mut criteria = CriteriaSet::pairwise("welch_t", "age", &["TD", "ALN", "ALI", "SLI"], alpha);
    for cov in ["PIQ", "VIQ"] {
        criteria.push(CriterionSpec::new("welch_t", cov, ["SLI", "ALI"], alpha));
        criteria.push(CriterionSpec::new("welch_t", cov, ["ALN", "TD"], alpha));
    }
    criteria.push(CriterionSpec::new("welch_t", "ADOS", ["ALI", "ALN"], alpha));
    let cfg = MatchConfig::new(CriteriaSet::new(criteria))
        .with_locked(["SLI"])
        .with_balance(BalanceMode::Precedence {
            order: ["SLI", "ALI", "ALN", "TD"].map(String::from).to_vec(),
        });
    Ok((d, cfg))
}

/// A two-group item dataset (say, words in two conditions) with `n` items
/// split evenly and covariates `frequency` and `length`. Condition B runs
/// 0.3 SD higher on frequency, so matching drops several percent of items.
pub fn item_dataset(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freq = Normal::new(0.0, 1.0).unwrap();
    let len = Normal::new(6.0, 2.0).unwrap();
    let mut ids = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let b = i % 2 == 1;
        let shift = if b { 0.3 } else { 0.0 };
        ids.push(format!("item{:05}", i + 1));
        labels.push(if b { "B" } else { "A" }.to_string());
        rows.push(vec![
            freq.sample(&mut rng) + shift,
            len.sample(&mut rng),
        ]);
    }
    Dataset::new(
        ids,
        labels,
        vec!["frequency".into(), "length".into()],
        rows,
    )
}

/// Welch criteria on both item covariates at `alpha`.
pub fn item_criteria(alpha: f64) -> CriteriaSet {
    CriteriaSet::new(vec![
        CriterionSpec::new("welch_t", "frequency", ["A", "B"], alpha),
        CriterionSpec::new("welch_t", "length", ["A", "B"], alpha),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::Problem;
    use crate::dataset::SubsetState;
    use crate::stats::TestRegistry;

    #[test]
    fn trap_shape() {
        let (d, cfg) = two_outlier_trap();
        let reg = TestRegistry::with_builtins();
        let p = Problem::new(&d, &cfg, &reg).unwrap();
        let full = SubsetState::full(&d);
        let r0 = p.compute_r(&full).unwrap();
        let lo = d.ids().iter().position(|i| i == "a_lo").unwrap();
        let hi = d.ids().iter().position(|i| i == "a_hi").unwrap();
        assert!(r0 < 1.0);
        assert!(p.compute_r(&full.without(&d, &[lo])).unwrap() < r0);
        assert!(p.compute_r(&full.without(&d, &[hi])).unwrap() < r0);
        assert!(p.compute_r(&full.without(&d, &[lo, hi])).unwrap() >= 1.0);
    }

    #[test]
    fn clinical_sizes() {
        let (d, cfg) = clinical_shaped(1).unwrap();
        assert_eq!(d.len(), 113);
        assert_eq!(d.n_groups(), 4);
        assert_eq!(cfg.criteria.len(), 11);
        let reg = TestRegistry::with_builtins();
        let p = Problem::new(&d, &cfg, &reg).unwrap();
        assert!(p.compute_r(&SubsetState::full(&d)).unwrap() < 1.0);
    }
}
