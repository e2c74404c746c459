use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::criteria::{MatchConfig, Problem};
use crate::dataset::{Dataset, SubsetState};
use crate::error::{MatchError, Result};
use crate::stats::TestRegistry;

/// `C(N,0) + C(N,1) + … + C(N,n)`, exactly.
pub fn count_configurations(n_subjects: usize, max_removed: usize) -> Result<BigUint> {
    if max_removed > n_subjects {
        return Err(MatchError::InvalidConfig(format!(
            "cannot remove {max_removed} of {n_subjects} subjects"
        )));
    }
    let mut total = BigUint::one();
    let mut term = BigUint::one();
    for i in 1..=max_removed {
        term = term * BigUint::from(n_subjects - i + 1) / BigUint::from(i);
        total += &term;
    }
    Ok(total)
}

/// Projected cost of an exhaustive run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveEstimate {
    pub n_subjects: usize,
    pub max_removed: usize,
    pub configurations: BigUint,
    /// Criterion evaluations (configurations × criteria).
    pub evaluations: BigUint,
    /// Configurations scored per second.
    pub rate: f64,
    pub seconds: f64,
    /// Whether the evaluations fit the configured budget.
    pub feasible: bool,
}

impl ExhaustiveEstimate {
    pub fn time_text(&self) -> String {
        if self.configurations.is_one() {
            "instantaneous".into()
        } else {
            humanize_seconds(self.seconds)
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.feasible {
            "feasible"
        } else {
            "infeasible"
        }
    }
}

impl std::fmt::Display for ExhaustiveEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let unit = if self.configurations.is_one() {
            "configuration"
        } else {
            "configurations"
        };
        write!(
            f,
            "{} {unit} (N={}, n={}), {}, {}",
            self.configurations,
            self.n_subjects,
            self.max_removed,
            self.time_text(),
            self.verdict()
        )
    }
}

/// Projects the running time of exhaustive search to depth
/// `heuristic_removals` (typically the removal count a heuristic needed) at
/// `rate` configurations per second.
pub fn estimate_exhaustive(
    d: &Dataset,
    cfg: &MatchConfig,
    heuristic_removals: usize,
    rate: f64,
) -> Result<ExhaustiveEstimate> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(MatchError::InvalidConfig(format!("rate must be positive, got {rate}")));
    }
    let configurations = count_configurations(d.len(), heuristic_removals)?;
    let evaluations = &configurations * BigUint::from(cfg.criteria.len().max(1));
    let seconds = configurations.to_f64().unwrap_or(f64::INFINITY) / rate;
    let feasible = evaluations <= BigUint::from(cfg.budget);
    Ok(ExhaustiveEstimate {
        n_subjects: d.len(),
        max_removed: heuristic_removals,
        configurations,
        evaluations,
        rate,
        seconds,
        feasible,
    })
}

/// Times full-set scoring for at least `min_time` and returns the rate in
/// configurations per second.
pub fn calibrate_rate(
    d: &Dataset,
    cfg: &MatchConfig,
    registry: &TestRegistry,
    min_time: Duration,
) -> Result<f64> {
    let problem = Problem::new(d, cfg, registry)?;
    let full = SubsetState::full(d);
    let start = Instant::now();
    let mut count = 0u64;
    loop {
        // Undefined tests cost the same to detect; the value is irrelevant.
        let _ = problem.compute_r(&full);
        count += 1;
        let elapsed = start.elapsed();
        if elapsed >= min_time && count >= 3 {
            return Ok(count as f64 / elapsed.as_secs_f64());
        }
    }
}

/// Short human reading of a duration: `< 11 seconds`, `≈13 minutes`, …
pub fn humanize_seconds(seconds: f64) -> String {
    if !seconds.is_finite() {
        return "unbounded".into();
    }
    const MINUTE: f64 = 60.0;
    const HOUR: f64 = 3600.0;
    const DAY: f64 = 86_400.0;
    const YEAR: f64 = 365.25 * DAY;
    let plural = |v: f64, unit: &str| {
        if v == 1.0 {
            format!("≈1 {unit}")
        } else {
            format!("≈{v} {unit}s")
        }
    };
    if seconds < 1.0 {
        "< 1 second".into()
    } else if seconds < MINUTE {
        format!("< {} seconds", seconds.ceil())
    } else if seconds < HOUR {
        plural((seconds / MINUTE).round(), "minute")
    } else if seconds < DAY {
        plural((seconds / HOUR).round(), "hour")
    } else if seconds < YEAR {
        plural((seconds / DAY).round(), "day")
    } else if seconds < 1e6 * YEAR {
        plural((seconds / YEAR).round(), "year")
    } else {
        format!("≈{:.1e} years", seconds / YEAR)
    }
}
