//! Subset-search strategies.
//!
//! Every strategy starts from the full dataset and removes subjects until
//! the criteria are met (`r >= 1`) or no admissible removal remains.
//! Candidate evaluations inside a step run on a private rayon pool and are
//! reduced in canonical candidate order, so results do not depend on the
//! number of worker threads. All tie-breaking randomness comes from one
//! ChaCha generator seeded from [`MatchConfig::seed`].

mod engine;
mod estimate;
mod exhaustive;
mod greedy;
mod lookahead;
mod random;

use std::io::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::criteria::{CriterionOutcome, MatchConfig, SolutionRank};
use crate::dataset::{Dataset, SubsetState};
use crate::error::Result;
use crate::stats::TestRegistry;

pub use estimate::{
    calibrate_rate, count_configurations, estimate_exhaustive, humanize_seconds,
    ExhaustiveEstimate,
};
pub use exhaustive::exhaustive_search;
pub use greedy::greedy_search;
pub use lookahead::{lookahead_search, LookaheadParams, Variant, DEFAULT_REVERT_AT, POOL_CAP};
pub use random::{keep_probability, random_search, KeepSchedule, FLOOR_KEPT_PER_GROUP};

/// One removal in a search trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub removed: String,
    pub r_before: Option<f64>,
    /// `None` for removals inside a batch whose `r` was not recomputed.
    pub r_after: Option<f64>,
    pub pool_size: usize,
}

/// Writes a trace as line-delimited JSON.
pub fn write_trace<W: Write>(mut w: W, trace: &[TraceRecord]) -> std::io::Result<()> {
    for rec in trace {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Outcome of one search run.
#[derive(Debug, Clone)]
pub struct MatchResult {
    pub algorithm: String,
    pub params: serde_json::Value,
    pub seed: u64,
    /// Mutually equivalent best subsets, sorted by their kept-id lists.
    pub solutions: Vec<SubsetState>,
    /// Rank of the best subset; `None` only if no subset could be scored.
    pub rank: Option<SolutionRank>,
    /// Criteria evaluated on `solutions[0]`.
    pub criteria: Vec<CriterionOutcome>,
    pub success: bool,
    pub timed_out: bool,
    pub wall_time: Duration,
    pub evaluations: u64,
    pub trace: Vec<TraceRecord>,
}

impl MatchResult {
    pub fn best(&self) -> &SubsetState {
        &self.solutions[0]
    }

    pub fn removed_count(&self) -> usize {
        self.best().removed_count()
    }

    /// Minimum raw p-value over the criteria of the best subset.
    pub fn min_p(&self) -> Option<f64> {
        self.criteria
            .iter()
            .map(|c| c.p)
            .min_by(|a, b| a.total_cmp(b))
    }

    /// One line per solution: sorted kept ids joined by commas.
    pub fn solutions_text(&self, d: &Dataset) -> String {
        let mut out = String::new();
        for s in &self.solutions {
            out.push_str(&s.kept_ids(d).join(","));
            out.push('\n');
        }
        out
    }
}

/// A search strategy with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Algorithm {
    Random {
        iterations: usize,
        #[serde(default)]
        schedule: KeepSchedule,
    },
    Greedy,
    Lookahead {
        variant: Variant,
        #[serde(default = "one")]
        lookahead: usize,
        #[serde(default = "one")]
        batch: usize,
        #[serde(default = "default_revert")]
        revert_at: f64,
    },
    Exhaustive {
        max_removed: usize,
    },
}

fn one() -> usize {
    1
}

fn default_revert() -> f64 {
    DEFAULT_REVERT_AT
}

impl Algorithm {
    /// Short label in the style `h3(L=2,rho=10)`, used in reports.
    pub fn label(&self) -> String {
        match self {
            Algorithm::Random { iterations, .. } => format!("random(I={iterations})"),
            Algorithm::Greedy => "greedy".into(),
            Algorithm::Lookahead {
                variant,
                lookahead,
                batch,
                ..
            } => {
                let v = match variant {
                    Variant::H3 => "h3",
                    Variant::H4 => "h4",
                };
                if *batch > 1 {
                    format!("{v}(L={lookahead},rho={batch})")
                } else {
                    format!("{v}(L={lookahead})")
                }
            }
            Algorithm::Exhaustive { max_removed } => format!("exhaustive(n={max_removed})"),
        }
    }

    pub fn run(
        &self,
        d: &Dataset,
        cfg: &MatchConfig,
        registry: &TestRegistry,
    ) -> Result<MatchResult> {
        match *self {
            Algorithm::Random {
                iterations,
                schedule,
            } => random_search(d, cfg, registry, iterations, schedule),
            Algorithm::Greedy => greedy_search(d, cfg, registry),
            Algorithm::Lookahead {
                variant,
                lookahead,
                batch,
                revert_at,
            } => lookahead_search(
                d,
                cfg,
                registry,
                LookaheadParams {
                    variant,
                    lookahead,
                    batch,
                    revert_at,
                },
            ),
            Algorithm::Exhaustive { max_removed } => {
                exhaustive_search(d, cfg, registry, max_removed)
            }
        }
    }
}
