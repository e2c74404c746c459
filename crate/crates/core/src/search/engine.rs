use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::criteria::{compare_solutions, MatchConfig, Problem, SolutionRank};
use crate::dataset::{Dataset, SubsetState};
use crate::error::{MatchError, Result};
use crate::search::{MatchResult, TraceRecord};
use crate::stats::TestRegistry;

/// Driver state for one search run: the bound problem, the worker pool,
/// the seeded generator, the clock and the trace.
pub(crate) struct SearchState<'d> {
    pub problem: Problem<'d>,
    /// `None` when running on one thread: candidates are then scored inline,
    /// which also keeps a search nested inside another pool's worker from
    /// stealing unrelated jobs while it waits.
    pool: Option<rayon::ThreadPool>,
    pub rng: ChaCha8Rng,
    started: Instant,
    pub trace: Vec<TraceRecord>,
    pub current: SubsetState,
    pub r: Option<f64>,
}

impl<'d> SearchState<'d> {
    pub fn new(d: &'d Dataset, cfg: &MatchConfig, registry: &TestRegistry) -> Result<Self> {
        let problem = Problem::new(d, cfg, registry)?;
        let pool = match cfg.threads {
            Some(1) => None,
            n => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.unwrap_or(0))
                    .build()
                    .map_err(|e| MatchError::InvalidConfig(format!("thread pool: {e}")))?,
            ),
        };
        Ok(SearchState {
            problem,
            pool,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            started: Instant::now(),
            trace: Vec::new(),
            current: SubsetState::full(d),
            r: None,
        })
    }

    pub fn dataset(&self) -> &'d Dataset {
        self.problem.dataset()
    }

    pub fn timed_out(&self) -> bool {
        match self.problem.config().timeout {
            Some(limit) => self.started.elapsed() >= limit,
            None => false,
        }
    }

    /// Ranks of `current` with each candidate set removed, in input order.
    /// `None` marks inadmissible or undefined states.
    pub fn rank_removals(&self, sets: &[Vec<usize>]) -> Result<Vec<Option<SolutionRank>>> {
        let d = self.dataset();
        let admissible: Vec<bool> = sets
            .iter()
            .map(|set| {
                let s = self.current.without(d, set);
                s.removed_count() == self.current.removed_count() + set.len()
                    && self.problem.is_admissible(&s)
            })
            .collect();
        self.problem
            .reserve(admissible.iter().filter(|&&a| a).count() as u64)?;
        let problem = &self.problem;
        let current = &self.current;
        let score = |(set, &ok): (&Vec<usize>, &bool)| {
            if ok {
                problem.rank(&current.without(d, set))
            } else {
                None
            }
        };
        Ok(match &self.pool {
            Some(pool) => pool.install(|| sets.par_iter().zip(admissible.par_iter()).map(score).collect()),
            None => sets.iter().zip(admissible.iter()).map(score).collect(),
        })
    }

    /// Ranks of arbitrary states, in input order.
    pub fn rank_states(&self, states: &[SubsetState]) -> Result<Vec<Option<SolutionRank>>> {
        let admissible: Vec<bool> = states
            .iter()
            .map(|s| self.problem.is_admissible(s))
            .collect();
        self.problem
            .reserve(admissible.iter().filter(|&&a| a).count() as u64)?;
        let problem = &self.problem;
        let score = |(s, &ok): (&SubsetState, &bool)| if ok { problem.rank(s) } else { None };
        Ok(match &self.pool {
            Some(pool) => {
                pool.install(|| states.par_iter().zip(admissible.par_iter()).map(score).collect())
            }
            None => states.iter().zip(admissible.iter()).map(score).collect(),
        })
    }

    pub fn rank_one(&self, s: &SubsetState) -> Result<Option<SolutionRank>> {
        if !self.problem.is_admissible(s) {
            return Ok(None);
        }
        self.problem.reserve(1)?;
        Ok(self.problem.rank(s))
    }

    /// Uniform pick among `n` tied options; the generator is only consumed
    /// when there is a real choice.
    pub fn pick(&mut self, n: usize) -> usize {
        if n <= 1 {
            0
        } else {
            self.rng.random_range(0..n)
        }
    }

    pub fn record(&mut self, removed: usize, r_before: Option<f64>, r_after: Option<f64>, pool_size: usize) {
        let step = self.trace.len() + 1;
        let id = self.dataset().id(removed).to_owned();
        self.trace.push(TraceRecord {
            step,
            removed: id,
            r_before,
            r_after,
            pool_size,
        });
    }

    /// Packages the run. `solutions` must be non-empty; they are deduplicated
    /// and sorted by kept-id list.
    pub fn finish(
        self,
        algorithm: &str,
        params: serde_json::Value,
        mut solutions: Vec<SubsetState>,
        success: bool,
        timed_out: bool,
    ) -> MatchResult {
        let d = self.dataset();
        solutions.sort_by_cached_key(|s| s.kept_ids(d));
        solutions.dedup();
        let rank = self.problem.rank(&solutions[0]);
        let criteria = self.problem.outcomes(&solutions[0]).unwrap_or_default();
        MatchResult {
            algorithm: algorithm.to_owned(),
            params,
            seed: self.problem.config().seed,
            solutions,
            rank,
            criteria,
            success,
            timed_out,
            wall_time: self.started.elapsed(),
            evaluations: self.problem.evaluations(),
            trace: self.trace,
        }
    }
}

/// Indices of all entries equivalent to the maximum under `cmp`, in input
/// order. Entries that are `None` are skipped.
pub(crate) fn best_indices(
    ranks: &[Option<SolutionRank>],
    cmp: fn(&SolutionRank, &SolutionRank) -> Ordering,
) -> Vec<usize> {
    let mut best: Option<&SolutionRank> = None;
    for r in ranks.iter().flatten() {
        match best {
            Some(b) if cmp(r, b) != Ordering::Greater => {}
            _ => best = Some(r),
        }
    }
    let Some(best) = best else {
        return Vec::new();
    };
    ranks
        .iter()
        .enumerate()
        .filter_map(|(i, r)| match r {
            Some(r) if cmp(r, best) == Ordering::Equal => Some(i),
            _ => None,
        })
        .collect()
}

/// Among matching ranks, the indices of the best-equivalent ones.
pub(crate) fn best_matches(ranks: &[Option<SolutionRank>]) -> Vec<usize> {
    let matches: Vec<Option<SolutionRank>> = ranks
        .iter()
        .map(|r| r.as_ref().filter(|r| r.is_match()).cloned())
        .collect();
    best_indices(&matches, compare_solutions)
}

/// Lexicographic k-combinations of `items`.
pub(crate) struct Combinations<'a> {
    items: &'a [usize],
    idx: Vec<usize>,
    done: bool,
}

impl<'a> Combinations<'a> {
    pub fn new(items: &'a [usize], k: usize) -> Self {
        Combinations {
            items,
            idx: (0..k).collect(),
            done: k > items.len(),
        }
    }
}

impl Iterator for Combinations<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out: Vec<usize> = self.idx.iter().map(|&i| self.items[i]).collect();
        let n = self.items.len();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_enumerate_in_order() {
        let items = [3, 5, 7, 9];
        let all: Vec<Vec<usize>> = Combinations::new(&items, 2).collect();
        assert_eq!(
            all,
            vec![
                vec![3, 5],
                vec![3, 7],
                vec![3, 9],
                vec![5, 7],
                vec![5, 9],
                vec![7, 9]
            ]
        );
        assert_eq!(Combinations::new(&items, 0).count(), 1);
        assert_eq!(Combinations::new(&items, 4).count(), 1);
        assert_eq!(Combinations::new(&items, 5).count(), 0);
        let ten: Vec<usize> = (0..10).collect();
        assert_eq!(Combinations::new(&ten, 3).count(), 120);
    }
}
