//! Matching criteria, the match score `r`, group-balance terms and the
//! ordering used to pick between candidate subsets.
//!
//! `r = min_j p_j / alpha_j`; a subset is a match when `r >= 1`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};

use crate::dataset::{group_proportions, Dataset, SubsetState};
use crate::error::{MatchError, Result};
use crate::stats::{anderson_darling_test, Arity, TestFunction, TestRegistry, ANDERSON_DARLING};

/// Relative tolerance for ties on `r` and on the divergence term.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Default ceiling on criterion evaluations per search run.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSpec {
    pub test: String,
    pub covariate: String,
    pub groups: Vec<String>,
    pub alpha: f64,
}

impl CriterionSpec {
    pub fn new(
        test: impl Into<String>,
        covariate: impl Into<String>,
        groups: impl IntoIterator<Item = impl Into<String>>,
        alpha: f64,
    ) -> Self {
        CriterionSpec {
            test: test.into(),
            covariate: covariate.into(),
            groups: groups.into_iter().map(Into::into).collect(),
            alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CriteriaSet {
    pub criteria: Vec<CriterionSpec>,
}

impl CriteriaSet {
    pub fn new(criteria: Vec<CriterionSpec>) -> Self {
        CriteriaSet { criteria }
    }

    pub fn len(&self) -> usize {
        self.criteria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.criteria.is_empty()
    }

    /// Same test on the same covariate for every group pair.
    pub fn pairwise(
        test: &str,
        covariate: &str,
        groups: &[impl AsRef<str>],
        alpha: f64,
    ) -> Vec<CriterionSpec> {
        let mut out = Vec::new();
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                out.push(CriterionSpec::new(
                    test,
                    covariate,
                    [groups[i].as_ref(), groups[j].as_ref()],
                    alpha,
                ));
            }
        }
        out
    }
}

/// How group membership enters the ranking of solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BalanceMode {
    /// Keep group shares close to `target` (label → share); `None` means the
    /// dataset's original proportions.
    Proportions {
        #[serde(default)]
        target: Option<BTreeMap<String, f64>>,
    },
    /// Prefer keeping subjects of earlier-listed groups. Unlisted groups
    /// follow in canonical order.
    Precedence { order: Vec<String> },
}

impl Default for BalanceMode {
    fn default() -> Self {
        BalanceMode::Proportions { target: None }
    }
}

/// Everything that defines a matching problem apart from the data and the
/// search algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    pub criteria: CriteriaSet,
    pub balance: BalanceMode,
    pub locked_groups: Vec<String>,
    /// Bound on total removals.
    pub max_removals: Option<usize>,
    pub max_removals_per_group: BTreeMap<String, usize>,
    pub min_group_size: usize,
    pub seed: u64,
    /// Ceiling on criterion evaluations per search run.
    pub budget: u64,
    /// Worker threads for candidate evaluation; `None` uses all cores.
    pub threads: Option<usize>,
    /// Per-run wall-clock limit; a search that hits it returns its best
    /// state so far, unsuccessful.
    pub timeout: Option<std::time::Duration>,
}

impl MatchConfig {
    pub fn new(criteria: CriteriaSet) -> Self {
        MatchConfig {
            criteria,
            balance: BalanceMode::default(),
            locked_groups: Vec::new(),
            max_removals: None,
            max_removals_per_group: BTreeMap::new(),
            min_group_size: 2,
            seed: 0,
            budget: DEFAULT_BUDGET,
            threads: None,
            timeout: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_balance(mut self, balance: BalanceMode) -> Self {
        self.balance = balance;
        self
    }

    pub fn with_locked(mut self, groups: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.locked_groups = groups.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }
}

/// Per-group balance term of a [`SolutionRank`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Balance {
    /// KL(observed ∥ target) of the kept group shares.
    Divergence(f64),
    /// Removals per group, most-preferred group first.
    Removals(Vec<usize>),
}

/// Sort key for candidate solutions: more subjects kept, then better
/// balance, then higher `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionRank {
    pub preserved: usize,
    pub balance: Balance,
    pub r: f64,
}

impl SolutionRank {
    pub fn is_match(&self) -> bool {
        self.r >= 1.0
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

fn cmp_r(a: f64, b: f64) -> Ordering {
    if close(a, b) {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

/// `Greater` when `a` is better balanced than `b`.
fn cmp_balance(a: &Balance, b: &Balance) -> Ordering {
    match (a, b) {
        (Balance::Divergence(x), Balance::Divergence(y)) => {
            if (x - y).abs() <= TIE_TOLERANCE * x.abs().max(y.abs()) + 1e-15 {
                Ordering::Equal
            } else {
                y.total_cmp(x)
            }
        }
        (Balance::Removals(x), Balance::Removals(y)) => y.cmp(x),
        // Mixed modes never occur for ranks from one problem.
        _ => Ordering::Equal,
    }
}

/// Lexicographic solution order. `Greater` means `a` is the better
/// solution; `Equal` means the two are equivalent.
pub fn compare_solutions(a: &SolutionRank, b: &SolutionRank) -> Ordering {
    a.preserved
        .cmp(&b.preserved)
        .then_with(|| cmp_balance(&a.balance, &b.balance))
        .then_with(|| cmp_r(a.r, b.r))
}

/// Order for choosing the next move of a search step. Matches come first and
/// are ordered as solutions; non-matches are ordered by `r`, then balance.
pub fn compare_moves(a: &SolutionRank, b: &SolutionRank) -> Ordering {
    match (a.is_match(), b.is_match()) {
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (true, true) => compare_solutions(a, b),
        (false, false) => a
            .preserved
            .cmp(&b.preserved)
            .then_with(|| cmp_r(a.r, b.r))
            .then_with(|| cmp_balance(&a.balance, &b.balance)),
    }
}

/// KL(observed ∥ target) in nats, with 0·ln 0 = 0.
pub fn kl_divergence(observed: &[f64], target: &[f64]) -> Result<f64> {
    if observed.len() != target.len() {
        return Err(MatchError::InvalidConfig(format!(
            "kl_divergence: observed has {} entries, target has {}",
            observed.len(),
            target.len()
        )));
    }
    if let Some(t) = target.iter().find(|&&t| !(t > 0.0)) {
        return Err(MatchError::InvalidConfig(format!(
            "kl_divergence: target entries must be positive, got {t}"
        )));
    }
    let kl: f64 = observed
        .iter()
        .zip(target)
        .filter(|(&o, _)| o > 0.0)
        .map(|(&o, &t)| o * (o / t).ln())
        .sum();
    Ok(kl.max(0.0))
}

#[derive(Debug, Clone)]
struct BoundCriterion {
    test: TestFunction,
    covariate: usize,
    groups: Vec<usize>,
    alpha: f64,
}

#[derive(Debug, Clone)]
enum BalanceTerm {
    Target(Vec<f64>),
    Precedence(Vec<usize>),
}

/// p-value of one criterion on a particular subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub test: String,
    pub covariate: String,
    pub groups: Vec<String>,
    pub alpha: f64,
    pub p: f64,
    pub ratio: f64,
    /// The p-value came from outside the tabulated range of its test.
    pub extrapolated: bool,
}

/// A [`MatchConfig`] bound to a dataset and a test registry: resolved
/// indices, feasibility rules and an evaluation counter.
#[derive(Debug)]
pub struct Problem<'d> {
    dataset: &'d Dataset,
    config: MatchConfig,
    criteria: Vec<BoundCriterion>,
    locked: Vec<bool>,
    max_per_group: Vec<Option<usize>>,
    balance: BalanceTerm,
    evaluations: AtomicU64,
}

impl<'d> Problem<'d> {
    pub fn new(dataset: &'d Dataset, config: &MatchConfig, registry: &TestRegistry) -> Result<Self> {
        let cfg = config.clone();
        if cfg.criteria.is_empty() {
            return Err(MatchError::InvalidConfig("no criteria given".into()));
        }
        let group = |label: &str, what: &str| {
            dataset.group_index(label).ok_or_else(|| {
                MatchError::InvalidConfig(format!("{what}: unknown group `{label}`"))
            })
        };

        let mut seen = HashSet::new();
        let mut criteria = Vec::with_capacity(cfg.criteria.len());
        for (index, c) in cfg.criteria.criteria.iter().enumerate() {
            let fail = |message: String| MatchError::InvalidCriterion {
                index,
                test: c.test.clone(),
                covariate: c.covariate.clone(),
                message,
            };
            if !(c.alpha > 0.0 && c.alpha < 1.0) {
                return Err(fail(format!("alpha must lie in (0, 1), got {}", c.alpha)));
            }
            let test = registry
                .resolve(&c.test)
                .ok_or_else(|| fail(format!("unknown test `{}`", c.test)))?
                .clone();
            let covariate = dataset
                .covariate_index(&c.covariate)
                .ok_or_else(|| fail(format!("unknown covariate `{}`", c.covariate)))?;
            if c.groups.len() < 2 {
                return Err(fail("needs at least 2 groups".into()));
            }
            let mut groups = Vec::with_capacity(c.groups.len());
            for g in &c.groups {
                let gi = dataset
                    .group_index(g)
                    .ok_or_else(|| fail(format!("unknown group `{g}`")))?;
                if groups.contains(&gi) {
                    return Err(fail(format!("group `{g}` listed twice")));
                }
                groups.push(gi);
            }
            if test.arity() == Arity::TwoSample && groups.len() != 2 {
                return Err(fail(format!(
                    "two-sample test given {} groups",
                    groups.len()
                )));
            }
            let mut key = groups.clone();
            key.sort_unstable();
            if !seen.insert((c.test.clone(), covariate, key)) {
                return Err(fail("duplicate criterion".into()));
            }
            criteria.push(BoundCriterion {
                test,
                covariate,
                groups,
                alpha: c.alpha,
            });
        }

        let mut locked = vec![false; dataset.n_groups()];
        for label in &cfg.locked_groups {
            locked[group(label, "locked_groups")?] = true;
        }
        let mut max_per_group = vec![None; dataset.n_groups()];
        for (label, &bound) in &cfg.max_removals_per_group {
            let g = group(label, "max_removals_per_group")?;
            if locked[g] && bound < dataset.members(g).len() {
                // A lock is stricter than any bound; the combination is
                // accepted only when the bound is vacuous.
                return Err(MatchError::InvalidConfig(format!(
                    "group `{label}` is locked and also has a removal bound of {bound}"
                )));
            }
            max_per_group[g] = Some(bound);
        }
        if cfg.min_group_size < 1 {
            return Err(MatchError::InvalidConfig(
                "min_group_size must be at least 1".into(),
            ));
        }
        for (g, &is_locked) in locked.iter().enumerate() {
            if !is_locked && dataset.members(g).len() < cfg.min_group_size {
                return Err(MatchError::InvalidConfig(format!(
                    "group `{}` has {} members, fewer than min_group_size {}",
                    dataset.group_labels()[g],
                    dataset.members(g).len(),
                    cfg.min_group_size
                )));
            }
        }

        let balance = match &cfg.balance {
            BalanceMode::Proportions { target: None } => {
                let n = dataset.len() as f64;
                BalanceTerm::Target(
                    dataset
                        .group_sizes()
                        .iter()
                        .map(|&s| s as f64 / n)
                        .collect(),
                )
            }
            BalanceMode::Proportions {
                target: Some(target),
            } => {
                let mut v = vec![f64::NAN; dataset.n_groups()];
                for (label, &share) in target {
                    if !(share > 0.0) {
                        return Err(MatchError::InvalidConfig(format!(
                            "target share for `{label}` must be positive, got {share}"
                        )));
                    }
                    v[group(label, "balance.target")?] = share;
                }
                if let Some(g) = v.iter().position(|x| x.is_nan()) {
                    return Err(MatchError::InvalidConfig(format!(
                        "balance.target is missing group `{}`",
                        dataset.group_labels()[g]
                    )));
                }
                let sum: f64 = v.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(MatchError::InvalidConfig(format!(
                        "balance.target shares sum to {sum}, expected 1"
                    )));
                }
                BalanceTerm::Target(v)
            }
            BalanceMode::Precedence { order } => {
                let mut seq = Vec::with_capacity(dataset.n_groups());
                for label in order {
                    let g = group(label, "balance.order")?;
                    if seq.contains(&g) {
                        return Err(MatchError::InvalidConfig(format!(
                            "balance.order lists `{label}` twice"
                        )));
                    }
                    seq.push(g);
                }
                for g in 0..dataset.n_groups() {
                    if !seq.contains(&g) {
                        seq.push(g);
                    }
                }
                BalanceTerm::Precedence(seq)
            }
        };

        Ok(Problem {
            dataset,
            config: cfg,
            criteria,
            locked,
            max_per_group,
            balance,
            evaluations: AtomicU64::new(0),
        })
    }

    pub fn dataset(&self) -> &'d Dataset {
        self.dataset
    }

    pub fn config(&self) -> &MatchConfig {
        &self.config
    }

    pub fn n_criteria(&self) -> usize {
        self.criteria.len()
    }

    pub fn is_locked(&self, group: usize) -> bool {
        self.locked[group]
    }

    /// Criterion evaluations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(AtomicOrdering::Relaxed)
    }

    /// Fails if `states` more subset evaluations would exceed the budget.
    pub fn reserve(&self, states: u64) -> Result<()> {
        let need = states.saturating_mul(self.criteria.len() as u64);
        if self.evaluations().saturating_add(need) > self.config.budget {
            return Err(MatchError::BudgetExceeded {
                budget: self.config.budget,
            });
        }
        Ok(())
    }

    fn samples(&self, c: &BoundCriterion, s: &SubsetState) -> Vec<Vec<f64>> {
        let col = self.dataset.column(c.covariate);
        c.groups
            .iter()
            .map(|&g| {
                self.dataset
                    .members(g)
                    .iter()
                    .filter(|&&i| s.is_kept(i))
                    .map(|&i| col[i])
                    .collect()
            })
            .collect()
    }

    /// Raw p-value of every criterion.
    pub fn p_values(&self, s: &SubsetState) -> Result<Vec<f64>> {
        self.evaluations
            .fetch_add(self.criteria.len() as u64, AtomicOrdering::Relaxed);
        self.criteria
            .iter()
            .map(|c| {
                let samples = self.samples(c, s);
                let refs: Vec<&[f64]> = samples.iter().map(Vec::as_slice).collect();
                c.test.evaluate(&refs)
            })
            .collect()
    }

    /// `min_j p_j / alpha_j`. Undefined tests propagate as errors.
    pub fn compute_r(&self, s: &SubsetState) -> Result<f64> {
        let ps = self.p_values(s)?;
        Ok(ps
            .iter()
            .zip(&self.criteria)
            .map(|(p, c)| p / c.alpha)
            .fold(f64::INFINITY, f64::min))
    }

    pub fn balance(&self, s: &SubsetState) -> Result<Balance> {
        match &self.balance {
            BalanceTerm::Target(target) => {
                let observed = group_proportions(self.dataset, s)?;
                Ok(Balance::Divergence(kl_divergence(&observed, target)?))
            }
            BalanceTerm::Precedence(order) => Ok(Balance::Removals(
                order
                    .iter()
                    .map(|&g| self.dataset.members(g).len() - s.kept_per_group()[g])
                    .collect(),
            )),
        }
    }

    /// Rank of a feasible subset; `None` when the subset is infeasible or a
    /// test is undefined on it.
    pub fn rank(&self, s: &SubsetState) -> Option<SolutionRank> {
        if !self.is_admissible(s) {
            return None;
        }
        let r = self.compute_r(s).ok()?;
        let balance = self.balance(s).ok()?;
        Some(SolutionRank {
            preserved: s.kept_count(),
            balance,
            r,
        })
    }

    /// Locks, group-size floor and removal bounds all hold.
    pub fn is_admissible(&self, s: &SubsetState) -> bool {
        if !s.is_feasible(self.dataset, &self.locked, self.config.min_group_size) {
            return false;
        }
        if let Some(max) = self.config.max_removals {
            if s.removed_count() > max {
                return false;
            }
        }
        self.max_per_group.iter().enumerate().all(|(g, bound)| match bound {
            Some(b) => self.dataset.members(g).len() - s.kept_per_group()[g] <= *b,
            None => true,
        })
    }

    /// Whether subject `i` could be removed from `s` without breaking a
    /// constraint on its own.
    pub fn can_remove(&self, s: &SubsetState, i: usize) -> bool {
        if !s.is_kept(i) {
            return false;
        }
        let g = self.dataset.group_of(i);
        if self.locked[g] || s.kept_per_group()[g] <= self.config.min_group_size {
            return false;
        }
        if let Some(max) = self.config.max_removals {
            if s.removed_count() >= max {
                return false;
            }
        }
        match self.max_per_group[g] {
            Some(b) => self.dataset.members(g).len() - s.kept_per_group()[g] < b,
            None => true,
        }
    }

    /// Per-criterion report for a subset. Anderson–Darling criteria also
    /// report whether their p-value was extrapolated.
    pub fn outcomes(&self, s: &SubsetState) -> Result<Vec<CriterionOutcome>> {
        self.criteria
            .iter()
            .zip(&self.config.criteria.criteria)
            .map(|(c, spec)| {
                let samples = self.samples(c, s);
                let refs: Vec<&[f64]> = samples.iter().map(Vec::as_slice).collect();
                let p = c.test.evaluate(&refs)?;
                let extrapolated = c.test.name() == ANDERSON_DARLING
                    && anderson_darling_test(&refs).map(|r| r.extrapolated)?;
                Ok(CriterionOutcome {
                    test: spec.test.clone(),
                    covariate: spec.covariate.clone(),
                    groups: spec.groups.clone(),
                    alpha: c.alpha,
                    p,
                    ratio: p / c.alpha,
                    extrapolated,
                })
            })
            .collect()
    }
}

/// Convenience wrapper: binds `criteria` to `d` with default settings and
/// evaluates `r` on `s`.
pub fn compute_r(
    d: &Dataset,
    s: &SubsetState,
    criteria: &CriteriaSet,
    registry: &TestRegistry,
) -> Result<f64> {
    let mut cfg = MatchConfig::new(criteria.clone());
    cfg.min_group_size = 1;
    let problem = Problem::new(d, &cfg, registry)?;
    if s.kept_per_group().contains(&0) {
        return Err(MatchError::Infeasible("a group has no kept members".into()));
    }
    problem.compute_r(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Schema;
    use crate::stats::{welch_t_p, TestFunction};

    fn two_groups() -> Dataset {
        let csv = "id,g,x\n\
                   a1,A,1\na2,A,2\na3,A,3\na4,A,4\n\
                   b1,B,2\nb2,B,3\nb3,B,4\nb4,B,5\n";
        Dataset::from_reader(csv.as_bytes(), &Schema::new("id", "g", ["x"])).unwrap()
    }

    fn constant_test(p: f64) -> TestFunction {
        TestFunction::new(format!("const_{p}"), Arity::KSample, move |_| Ok(p))
    }

    #[test]
    fn r_is_p_over_alpha() {
        let d = two_groups();
        let mut reg = TestRegistry::with_builtins();
        reg.register(constant_test(0.4)).unwrap();
        let c = CriteriaSet::new(vec![CriterionSpec::new("const_0.4", "x", ["A", "B"], 0.2)]);
        let r = compute_r(&d, &SubsetState::full(&d), &c, &reg).unwrap();
        assert!((r - 2.0).abs() < 1e-15);
    }

    #[test]
    fn r_takes_the_minimum() {
        let d = two_groups();
        let mut reg = TestRegistry::with_builtins();
        reg.register(constant_test(0.3)).unwrap();
        reg.register(constant_test(0.1)).unwrap();
        let c = CriteriaSet::new(vec![
            CriterionSpec::new("const_0.3", "x", ["A", "B"], 0.2),
            CriterionSpec::new("const_0.1", "x", ["A", "B"], 0.2),
        ]);
        let r = compute_r(&d, &SubsetState::full(&d), &c, &reg).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constant_user_test_gives_half_over_alpha() {
        let d = two_groups();
        let mut reg = TestRegistry::with_builtins();
        reg.register(constant_test(0.5)).unwrap();
        for alpha in [0.1, 0.2, 0.5] {
            let c = CriteriaSet::new(vec![CriterionSpec::new("const_0.5", "x", ["A", "B"], alpha)]);
            let r = compute_r(&d, &SubsetState::full(&d), &c, &reg).unwrap();
            assert!((r - 0.5 / alpha).abs() < 1e-15);
        }
    }

    #[test]
    fn full_dataset_r_is_raw_p_over_alpha() {
        let d = two_groups();
        let reg = TestRegistry::with_builtins();
        let p = welch_t_p(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 5.0]).unwrap();
        let c = CriteriaSet::new(vec![CriterionSpec::new("welch_t", "x", ["A", "B"], 0.2)]);
        let r = compute_r(&d, &SubsetState::full(&d), &c, &reg).unwrap();
        assert!((r - p / 0.2).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let expected = 0.6 * (1.2f64).ln() + 0.4 * (0.8f64).ln();
        assert!((kl_divergence(&[0.6, 0.4], &[0.5, 0.5]).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.020_135_513_550_688_863).abs() < 1e-15);
        assert!(
            (kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - std::f64::consts::LN_2).abs()
                < 1e-15
        );
        assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
    }

    fn rank(preserved: usize, kl: f64, r: f64) -> SolutionRank {
        SolutionRank {
            preserved,
            balance: Balance::Divergence(kl),
            r,
        }
    }

    #[test]
    fn solution_priority() {
        assert_eq!(
            compare_solutions(&rank(96, 0.5, 0.1), &rank(95, 0.0, 9.0)),
            Ordering::Greater
        );
        assert_eq!(
            compare_solutions(&rank(95, 0.02, 1.0), &rank(95, 0.12, 2.0)),
            Ordering::Greater
        );
        assert_eq!(
            compare_solutions(&rank(95, 0.02, 1.3), &rank(95, 0.02, 1.1)),
            Ordering::Greater
        );
        assert_eq!(
            compare_solutions(&rank(95, 0.02, 1.3), &rank(95, 0.02, 1.3 * (1.0 + 1e-14))),
            Ordering::Equal
        );
    }

    #[test]
    fn moves_prefer_matches_then_r() {
        let fail_hi_r = rank(10, 0.5, 0.9);
        let fail_lo_r = rank(10, 0.0, 0.8);
        let ok_bal = rank(10, 0.0, 1.1);
        let ok_r = rank(10, 0.3, 3.0);
        assert_eq!(compare_moves(&fail_hi_r, &fail_lo_r), Ordering::Greater);
        assert_eq!(compare_moves(&ok_r, &fail_hi_r), Ordering::Greater);
        assert_eq!(compare_moves(&ok_bal, &ok_r), Ordering::Greater);
    }

    #[test]
    fn precedence_prefers_removing_low_priority_groups() {
        let d = two_groups();
        let reg = TestRegistry::with_builtins();
        let cfg = MatchConfig::new(CriteriaSet::new(vec![CriterionSpec::new(
            "welch_t",
            "x",
            ["A", "B"],
            0.2,
        )]))
        .with_balance(BalanceMode::Precedence {
            order: vec!["B".into(), "A".into()],
        });
        let p = Problem::new(&d, &cfg, &reg).unwrap();
        let full = SubsetState::full(&d);
        let drop_a = p.balance(&full.without(&d, &[0])).unwrap();
        let drop_b = p.balance(&full.without(&d, &[4])).unwrap();
        assert_eq!(drop_b, Balance::Removals(vec![1, 0]));
        assert_eq!(cmp_balance(&drop_a, &drop_b), Ordering::Greater);
    }

    #[test]
    fn config_validation_names_the_criterion() {
        let d = two_groups();
        let reg = TestRegistry::with_builtins();
        let bad_alpha = MatchConfig::new(CriteriaSet::new(vec![CriterionSpec::new(
            "welch_t",
            "x",
            ["A", "B"],
            1.5,
        )]));
        let err = Problem::new(&d, &bad_alpha, &reg).unwrap_err();
        assert!(matches!(err, MatchError::InvalidCriterion { index: 0, .. }), "{err}");
        let dup = MatchConfig::new(CriteriaSet::new(vec![
            CriterionSpec::new("welch_t", "x", ["A", "B"], 0.2),
            CriterionSpec::new("welch_t", "x", ["B", "A"], 0.3),
        ]));
        assert!(Problem::new(&d, &dup, &reg).is_err());
        let unknown = MatchConfig::new(CriteriaSet::new(vec![CriterionSpec::new(
            "welch_t",
            "y",
            ["A", "B"],
            0.2,
        )]));
        assert!(Problem::new(&d, &unknown, &reg).is_err());
    }

    #[test]
    fn locked_group_with_binding_bound_rejected() {
        let d = two_groups();
        let reg = TestRegistry::with_builtins();
        let mut cfg = MatchConfig::new(CriteriaSet::new(vec![CriterionSpec::new(
            "welch_t",
            "x",
            ["A", "B"],
            0.2,
        )]))
        .with_locked(["A"]);
        cfg.max_removals_per_group.insert("A".into(), 1);
        assert!(Problem::new(&d, &cfg, &reg).is_err());
    }

    #[test]
    fn admissibility_and_removal_rules() {
        let d = two_groups();
        let reg = TestRegistry::with_builtins();
        let mut cfg = MatchConfig::new(CriteriaSet::new(vec![CriterionSpec::new(
            "welch_t",
            "x",
            ["A", "B"],
            0.2,
        )]))
        .with_locked(["B"]);
        cfg.max_removals = Some(1);
        let p = Problem::new(&d, &cfg, &reg).unwrap();
        let full = SubsetState::full(&d);
        assert!(p.can_remove(&full, 0));
        assert!(!p.can_remove(&full, 4));
        let one = full.without(&d, &[0]);
        assert!(p.is_admissible(&one));
        assert!(!p.can_remove(&one, 1));
        assert!(!p.is_admissible(&one.without(&d, &[1])));
    }
}
