//! Experiment grids over synthetic data, evaluation metrics and reports.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{kl_divergence, BalanceMode, CriteriaSet, CriterionSpec, MatchConfig};
use crate::dataset::{group_proportions, Dataset, SubsetState};
use crate::error::{MatchError, Result};
use crate::search::{Algorithm, MatchResult};
use crate::stats::{TestRegistry, ANDERSON_DARLING, WELCH_T};
use crate::synthgen::{child_seed, generate_dataset, replicate, SyntheticSpec};

/// Quality of one run's best solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub n_items: usize,
    pub n_excluded: usize,
    pub pct_excluded_items: f64,
    /// Share of the excluded items that are intruders; `None` without truth
    /// or when nothing was excluded.
    pub pct_excluded_intruders: Option<f64>,
    /// Share of the intruders that were excluded; `None` without truth.
    pub intruder_recall: Option<f64>,
    pub balanced_divergence: f64,
    pub post_match_p: Option<f64>,
    pub wall_time: f64,
    pub success: bool,
    pub timed_out: bool,
    pub n_solutions: usize,
}

/// Metrics for `result` on `d`. Balanced divergence is measured against the
/// configured target proportions, or the original group ratios when none
/// are set.
pub fn evaluate_run(
    d: &Dataset,
    result: &MatchResult,
    truth: Option<&[bool]>,
    cfg: &MatchConfig,
) -> EvalMetrics {
    let best = result.best();
    let n = d.len();
    let excluded: Vec<usize> = best.removed_indices().collect();
    let (pct_intr, recall) = match truth {
        Some(flags) => {
            let hit = excluded.iter().filter(|&&i| flags[i]).count();
            let total = flags.iter().filter(|&&f| f).count();
            let pct = (!excluded.is_empty()).then(|| 100.0 * hit as f64 / excluded.len() as f64);
            let rec = (total > 0).then(|| 100.0 * hit as f64 / total as f64);
            (pct, rec)
        }
        None => (None, None),
    };
    EvalMetrics {
        n_items: n,
        n_excluded: excluded.len(),
        pct_excluded_items: 100.0 * excluded.len() as f64 / n as f64,
        pct_excluded_intruders: pct_intr,
        intruder_recall: recall,
        balanced_divergence: balanced_divergence(d, best, cfg),
        post_match_p: result.min_p(),
        wall_time: result.wall_time.as_secs_f64(),
        success: result.success,
        timed_out: result.timed_out,
        n_solutions: result.solutions.len(),
    }
}

fn balanced_divergence(d: &Dataset, s: &SubsetState, cfg: &MatchConfig) -> f64 {
    let target: Vec<f64> = match &cfg.balance {
        BalanceMode::Proportions { target: Some(t) } => d
            .group_labels()
            .iter()
            .map(|g| t.get(g).copied().unwrap_or(0.0))
            .collect(),
        _ => group_proportions(d, &SubsetState::full(d)).expect("full set has every group"),
    };
    match group_proportions(d, s) {
        Ok(obs) => kl_divergence(&obs, &target).unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    }
}

/// Welch's t on every group pair and the k-sample Anderson–Darling test
/// over all groups, for every covariate, all at `alpha`.
pub fn synthetic_criteria(d: &Dataset, alpha: f64) -> CriteriaSet {
    let mut out = Vec::new();
    for cov in d.covariate_names() {
        out.extend(CriteriaSet::pairwise(WELCH_T, cov, d.group_labels(), alpha));
        out.push(CriterionSpec::new(
            ANDERSON_DARLING,
            cov,
            d.group_labels().to_vec(),
            alpha,
        ));
    }
    CriteriaSet::new(out)
}

/// Settings shared by every cell of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub alpha: f64,
    /// Concurrent grid cells; `None` uses every core.
    pub threads: Option<usize>,
    pub timeout: Option<Duration>,
    pub budget: u64,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            alpha: 0.2,
            threads: None,
            timeout: None,
            budget: crate::criteria::DEFAULT_BUDGET,
        }
    }
}

/// One (parameter set, replicate, algorithm) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub algorithm: String,
    pub set: usize,
    pub replicate: usize,
    pub seed: u64,
    pub n_covariates: usize,
    pub n_shifted: usize,
    #[serde(flatten)]
    pub metrics: EvalMetrics,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub algorithms: Vec<String>,
    pub replications: usize,
    pub rows: Vec<RunRow>,
}

/// Per-algorithm aggregate over the raw rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub runs: usize,
    pub success_rate: f64,
    pub n_solutions: f64,
    pub pct_excluded_items: f64,
    pub pct_excluded_intruders: Option<f64>,
    pub intruder_recall: Option<f64>,
    pub balanced_divergence: f64,
    pub post_match_p: Option<f64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregate {
    #[default]
    Median,
    Mean,
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

fn mean(values: &[f64]) -> Option<f64> {
    let v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl GridReport {
    pub fn rows_for<'a>(&'a self, algorithm: &'a str) -> impl Iterator<Item = &'a RunRow> + 'a {
        self.rows.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn summary(&self, how: Aggregate) -> Vec<AlgorithmSummary> {
        let agg = |v: &[f64]| match how {
            Aggregate::Median => median(v),
            Aggregate::Mean => mean(v),
        };
        self.algorithms
            .iter()
            .map(|alg| {
                let rows: Vec<&EvalMetrics> = self.rows_for(alg).map(|r| &r.metrics).collect();
                let col = |f: &dyn Fn(&EvalMetrics) -> Option<f64>| -> Vec<f64> {
                    rows.iter().filter_map(|m| f(m)).collect()
                };
                let successes = rows.iter().filter(|m| m.success).count();
                AlgorithmSummary {
                    algorithm: alg.clone(),
                    runs: rows.len(),
                    success_rate: if rows.is_empty() {
                        0.0
                    } else {
                        100.0 * successes as f64 / rows.len() as f64
                    },
                    n_solutions: agg(&col(&|m| Some(m.n_solutions as f64))).unwrap_or(0.0),
                    pct_excluded_items: agg(&col(&|m| Some(m.pct_excluded_items))).unwrap_or(0.0),
                    pct_excluded_intruders: agg(&col(&|m| m.pct_excluded_intruders)),
                    intruder_recall: agg(&col(&|m| m.intruder_recall)),
                    balanced_divergence: agg(&col(&|m| Some(m.balanced_divergence)))
                        .unwrap_or(0.0),
                    post_match_p: agg(&col(&|m| m.post_match_p)),
                    wall_time: agg(&col(&|m| Some(m.wall_time))).unwrap_or(0.0),
                }
            })
            .collect()
    }

    /// Raw rows as CSV.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_rows_csv(w, &self.rows)
    }

    /// Aggregate table with one line per algorithm.
    pub fn text_table(&self, how: Aggregate) -> String {
        let header = [
            "algorithm", "runs", "success", "#solutions", "%E.items", "%E.intruders", "recall",
            "BD", "p", "time",
        ];
        let fmt_opt = |v: Option<f64>, prec: usize| match v {
            Some(x) => format!("{x:.prec$}"),
            None => "-".into(),
        };
        let mut lines: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for s in self.summary(how) {
            lines.push(vec![
                s.algorithm,
                s.runs.to_string(),
                format!("{:.0}%", s.success_rate),
                format!("{:.0}", s.n_solutions),
                format!("{:.0}", s.pct_excluded_items),
                fmt_opt(s.pct_excluded_intruders, 0),
                fmt_opt(s.intruder_recall, 0),
                format!("{:.2}", s.balanced_divergence),
                fmt_opt(s.post_match_p, 2),
                format_time(s.wall_time),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (n, line) in lines.iter().enumerate() {
            for (c, cell) in line.iter().enumerate() {
                if c == 0 {
                    let _ = write!(out, "{cell:<w$}", w = widths[c]);
                } else {
                    let _ = write!(out, "  {cell:>w$}", w = widths[c]);
                }
            }
            out.push('\n');
            if n == 0 {
                let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                out.push_str(&"-".repeat(total));
                out.push('\n');
            }
        }
        out
    }
}

/// Writes run rows in the report's CSV schema.
pub fn write_rows_csv<W: Write>(w: W, rows: &[RunRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(CsvRow::from(row)).map_err(csv_err)?;
    }
    out.flush().map_err(|e| MatchError::io("<report>", e))
}

fn format_time(secs: f64) -> String {
    if secs < 1.0 {
        format!("{:.0}ms", secs * 1000.0)
    } else if secs < 120.0 {
        format!("{secs:.1}s")
    } else {
        format!("{:.1}min", secs / 60.0)
    }
}

fn csv_err(e: csv::Error) -> MatchError {
    MatchError::InvalidConfig(format!("writing report: {e}"))
}

/// Flat CSV record; `csv` cannot serialize flattened structs.
#[derive(Serialize)]
struct CsvRow<'a> {
    algorithm: &'a str,
    set: usize,
    replicate: usize,
    seed: u64,
    n_covariates: usize,
    n_shifted: usize,
    n_items: usize,
    n_excluded: usize,
    pct_excluded_items: f64,
    pct_excluded_intruders: Option<f64>,
    intruder_recall: Option<f64>,
    balanced_divergence: f64,
    post_match_p: Option<f64>,
    wall_time: f64,
    success: bool,
    timed_out: bool,
    n_solutions: usize,
    error: Option<&'a str>,
}

impl<'a> From<&'a RunRow> for CsvRow<'a> {
    fn from(r: &'a RunRow) -> Self {
        let m = &r.metrics;
        CsvRow {
            algorithm: &r.algorithm,
            set: r.set,
            replicate: r.replicate,
            seed: r.seed,
            n_covariates: r.n_covariates,
            n_shifted: r.n_shifted,
            n_items: m.n_items,
            n_excluded: m.n_excluded,
            pct_excluded_items: m.pct_excluded_items,
            pct_excluded_intruders: m.pct_excluded_intruders,
            intruder_recall: m.intruder_recall,
            balanced_divergence: m.balanced_divergence,
            post_match_p: m.post_match_p,
            wall_time: m.wall_time,
            success: m.success,
            timed_out: m.timed_out,
            n_solutions: m.n_solutions,
            error: r.error.as_deref(),
        }
    }
}

fn failed_metrics(n_items: usize) -> EvalMetrics {
    EvalMetrics {
        n_items,
        n_excluded: 0,
        pct_excluded_items: 0.0,
        pct_excluded_intruders: None,
        intruder_recall: None,
        balanced_divergence: 0.0,
        post_match_p: None,
        wall_time: 0.0,
        success: false,
        timed_out: false,
        n_solutions: 0,
    }
}

/// Runs every algorithm on `replications` datasets of every spec.
///
/// Replicate `r` of spec `s` is generated with `replicate(spec, master_seed,
/// s, r)`; searches on it use a seed derived the same way. Cells run
/// concurrently, one search thread each, and rows come back in grid order
/// (spec, replicate, algorithm). A failed generation or search yields an
/// unsuccessful row carrying the error message.
pub fn run_experiment_grid(
    specs: &[SyntheticSpec],
    algorithms: &[Algorithm],
    replications: usize,
    master_seed: u64,
    opts: &GridOptions,
) -> Result<GridReport> {
    if specs.is_empty() || algorithms.is_empty() || replications == 0 {
        return Err(MatchError::InvalidConfig(
            "a grid needs at least one spec, algorithm and replicate".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| MatchError::InvalidConfig(format!("thread pool: {e}")))?;
    let registry = TestRegistry::with_builtins();
    let cells: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|s| (0..replications).map(move |r| (s, r)))
        .collect();
    let rows: Vec<Vec<RunRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(s, r)| run_cell(&specs[s], s, r, algorithms, master_seed, opts, &registry))
            .collect()
    });
    Ok(GridReport {
        algorithms: algorithms.iter().map(Algorithm::label).collect(),
        replications,
        rows: rows.into_iter().flatten().collect(),
    })
}

fn run_cell(
    spec: &SyntheticSpec,
    set: usize,
    rep: usize,
    algorithms: &[Algorithm],
    master: u64,
    opts: &GridOptions,
    registry: &TestRegistry,
) -> Vec<RunRow> {
    let seed = child_seed(master, set as u64, 1_000_000 + rep as u64);
    let row = |alg: &Algorithm, metrics: EvalMetrics, error: Option<String>| RunRow {
        algorithm: alg.label(),
        set,
        replicate: rep,
        seed,
        n_covariates: spec.n_covariates,
        n_shifted: spec.n_shifted_covariates,
        metrics,
        error,
    };
    let data = match generate_dataset(&replicate(spec, master, set, rep)) {
        Ok(data) => data,
        Err(e) => {
            return algorithms
                .iter()
                .map(|a| row(a, failed_metrics(spec.n_items), Some(e.to_string())))
                .collect()
        }
    };
    let d = &data.dataset;
    let mut cfg = MatchConfig::new(synthetic_criteria(d, opts.alpha))
        .with_seed(seed)
        .with_threads(1);
    cfg.timeout = opts.timeout;
    cfg.budget = opts.budget;
    algorithms
        .iter()
        .map(|alg| match alg.run(d, &cfg, registry) {
            Ok(res) => row(alg, evaluate_run(d, &res, Some(&data.intruders), &cfg), None),
            Err(e) => row(alg, failed_metrics(d.len()), Some(e.to_string())),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Schema;
    use crate::search::TraceRecord;

    fn toy() -> Dataset {
        let mut csv = String::from("id,g,x\n");
        for i in 0..100 {
            csv.push_str(&format!("s{i},{},{}\n", if i < 50 { "A" } else { "B" }, i % 7));
        }
        Dataset::from_reader(csv.as_bytes(), &Schema::new("id", "g", ["x"])).unwrap()
    }

    fn result_for(d: &Dataset, removed: &[usize]) -> MatchResult {
        MatchResult {
            algorithm: "test".into(),
            params: serde_json::Value::Null,
            seed: 0,
            solutions: vec![SubsetState::full(d).without(d, removed)],
            rank: None,
            criteria: Vec::new(),
            success: true,
            timed_out: false,
            wall_time: Duration::from_millis(5),
            evaluations: 0,
            trace: Vec::<TraceRecord>::new(),
        }
    }

    #[test]
    fn metric_arithmetic() {
        let d = toy();
        let cfg = MatchConfig::new(synthetic_criteria(&d, 0.2));
        let m = evaluate_run(&d, &result_for(&d, &[]), None, &cfg);
        assert_eq!(m.pct_excluded_items, 0.0);
        assert_eq!(m.balanced_divergence, 0.0);
        assert_eq!(m.pct_excluded_intruders, None);

        let mut truth = vec![false; 100];
        truth[3] = true;
        truth[60] = true;
        let m = evaluate_run(&d, &result_for(&d, &[3, 4]), Some(&truth), &cfg);
        assert_eq!(m.pct_excluded_items, 2.0);
        assert_eq!(m.pct_excluded_intruders, Some(50.0));
        assert_eq!(m.intruder_recall, Some(50.0));
        assert!(m.balanced_divergence > 0.0);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn criteria_shape() {
        let d = toy();
        let c = synthetic_criteria(&d, 0.2);
        assert_eq!(c.len(), 2);
    }
}
