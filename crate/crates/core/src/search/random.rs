use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::criteria::{compare_moves, MatchConfig};
use crate::dataset::{Dataset, SubsetState};
use crate::error::Result;
use crate::search::engine::{best_indices, best_matches, SearchState};
use crate::search::MatchResult;
use crate::stats::TestRegistry;

/// Expected kept subjects per group at the last draw.
pub const FLOOR_KEPT_PER_GROUP: f64 = 4.0;

/// Shape of the keep-probability decay across random draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeepSchedule {
    #[default]
    Linear,
    Geometric,
}

/// Keep probability for draw `i` of `iterations` (1-based). Decays from
/// (almost) 1 to `floor` at the last draw.
pub fn keep_probability(schedule: KeepSchedule, i: usize, iterations: usize, floor: f64) -> f64 {
    let frac = i as f64 / iterations as f64;
    match schedule {
        KeepSchedule::Linear => 1.0 - (1.0 - floor) * frac,
        KeepSchedule::Geometric => floor.powf(frac),
    }
}

/// Random search over `iterations` independent draws. Draw `i` keeps each
/// unlocked subject with probability [`keep_probability`], decaying to an
/// expected count of [`FLOOR_KEPT_PER_GROUP`] × G kept subjects; locked
/// subjects are always kept. The full set is scored before any draw.
pub fn random_search(
    d: &Dataset,
    cfg: &MatchConfig,
    registry: &TestRegistry,
    iterations: usize,
    schedule: KeepSchedule,
) -> Result<MatchResult> {
    let params = json!({ "iterations": iterations, "schedule": schedule });
    let iterations = iterations.max(1);
    let mut st = SearchState::new(d, cfg, registry)?;
    let full = SubsetState::full(d);
    let full_rank = st.rank_one(&full)?;
    if full_rank.as_ref().is_some_and(|r| r.is_match()) {
        return Ok(st.finish("random", params, vec![full], true, false));
    }

    let locked: Vec<bool> = (0..d.len())
        .map(|i| st.problem.is_locked(d.group_of(i)))
        .collect();
    let target_kept = FLOOR_KEPT_PER_GROUP * d.n_groups() as f64;
    let floor = (target_kept / d.len() as f64).min(1.0);

    let mut best_states = vec![full];
    let mut best_ranks = vec![full_rank];
    // Draws are generated serially from the seeded stream and scored in
    // chunks so memory stays bounded.
    const CHUNK: usize = 256;
    let mut timed_out = false;
    let mut i = 1;
    while i <= iterations {
        if st.timed_out() {
            timed_out = true;
            break;
        }
        let end = (i + CHUNK - 1).min(iterations);
        let mut draws = Vec::with_capacity(end - i + 1);
        for draw in i..=end {
            let q = keep_probability(schedule, draw, iterations, floor);
            let keep: Vec<bool> = locked
                .iter()
                .map(|&l| l || st.rng.random::<f64>() < q)
                .collect();
            draws.push(SubsetState::from_keep(d, keep)?);
        }
        let ranks = st.rank_states(&draws)?;
        best_states.extend(draws);
        best_ranks.extend(ranks);
        // keep only the running leaders
        let keep_idx = leaders(&best_ranks);
        best_states = keep_idx.iter().map(|&k| best_states[k].clone()).collect();
        best_ranks = keep_idx.iter().map(|&k| best_ranks[k].clone()).collect();
        i = end + 1;
    }

    let matches = best_matches(&best_ranks);
    if !matches.is_empty() {
        let sols = matches.into_iter().map(|k| best_states[k].clone()).collect();
        return Ok(st.finish("random", params, sols, true, timed_out));
    }
    let fallback = best_indices(&best_ranks, compare_moves)
        .first()
        .map(|&k| best_states[k].clone())
        .unwrap_or_else(|| SubsetState::full(d));
    Ok(st.finish("random", params, vec![fallback], false, timed_out))
}

/// Best matches if any exist, otherwise the best non-match (by `r`).
fn leaders(ranks: &[Option<crate::criteria::SolutionRank>]) -> Vec<usize> {
    let m = best_matches(ranks);
    if !m.is_empty() {
        return m;
    }
    best_indices(ranks, compare_moves).into_iter().take(1).collect()
}
