//! Group matching by subset selection.
//!
//! Given subjects in groups and a set of statistical criteria (a test, a
//! covariate, the groups it compares and a significance threshold), find a
//! large subset in which no criterion rejects: every p-value clears its
//! threshold. The match score `r = min_j p_j / alpha_j` reaches 1 exactly
//! when that holds.
//!
//! ```no_run
//! use groupmatch::{greedy_search, load_dataset, CriteriaSet, MatchConfig, Schema, TestRegistry};
//!
//! let schema = Schema::new("id", "group", ["age", "iq"]);
//! let d = load_dataset("subjects.csv", &schema).unwrap();
//! let criteria = CriteriaSet::new(CriteriaSet::pairwise("welch_t", "age", d.group_labels(), 0.2));
//! let cfg = MatchConfig::new(criteria).with_seed(7);
//! let res = greedy_search(&d, &cfg, &TestRegistry::with_builtins()).unwrap();
//! println!("{}", res.solutions_text(&d));
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod criteria;
pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod search;
pub mod stats;
pub mod synthgen;

pub use criteria::{
    compare_moves, compare_solutions, compute_r, kl_divergence, Balance, BalanceMode, CriteriaSet,
    CriterionOutcome, CriterionSpec, MatchConfig, Problem, SolutionRank, DEFAULT_BUDGET,
};
pub use dataset::{group_proportions, load_dataset, write_dataset, Dataset, Schema, SubsetState};
pub use error::{MatchError, Result};
pub use search::{
    calibrate_rate, count_configurations, estimate_exhaustive, exhaustive_search, greedy_search,
    humanize_seconds, lookahead_search, random_search, write_trace, Algorithm,
    ExhaustiveEstimate, KeepSchedule, LookaheadParams, MatchResult, TraceRecord, Variant,
};
pub use stats::{anderson_darling_p, welch_t_p, Arity, TestFunction, TestRegistry};
