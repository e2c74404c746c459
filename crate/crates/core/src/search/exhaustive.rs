use serde_json::json;

use crate::criteria::{compare_moves, MatchConfig, SolutionRank};
use crate::dataset::{Dataset, SubsetState};
use crate::error::Result;
use crate::search::engine::{best_indices, best_matches, Combinations, SearchState};
use crate::search::MatchResult;
use crate::stats::TestRegistry;

const CHUNK: usize = 4096;

/// Breadth-first search over removal sets of size 0, 1, … `max_removed`.
///
/// At the first size where some admissible subset matches, every subset of
/// that size equivalent to the best (by balance, then `r`) is returned. If
/// no size up to `max_removed` matches, the best failing subset seen is
/// returned with `success == false`. Only subjects in unlocked groups are
/// enumerated.
pub fn exhaustive_search(
    d: &Dataset,
    cfg: &MatchConfig,
    registry: &TestRegistry,
    max_removed: usize,
) -> Result<MatchResult> {
    let params = json!({ "max_removed": max_removed });
    let st = SearchState::new(d, cfg, registry)?;
    let removable: Vec<usize> = (0..d.len())
        .filter(|&i| !st.problem.is_locked(d.group_of(i)))
        .collect();
    let mut depth_cap = max_removed.min(removable.len());
    if let Some(m) = cfg.max_removals {
        depth_cap = depth_cap.min(m);
    }

    let mut fallback: Option<(SubsetState, SolutionRank)> = None;
    for depth in 0..=depth_cap {
        let mut states: Vec<SubsetState> = Vec::new();
        let mut ranks: Vec<Option<SolutionRank>> = Vec::new();
        let mut combos = Combinations::new(&removable, depth);
        loop {
            if st.timed_out() {
                let best = leader(&states, &ranks, fallback)
                    .unwrap_or_else(|| SubsetState::full(d));
                return Ok(st.finish("exhaustive", params, vec![best], false, true));
            }
            let chunk: Vec<Vec<usize>> = combos.by_ref().take(CHUNK).collect();
            if chunk.is_empty() {
                break;
            }
            let chunk_ranks = st.rank_removals(&chunk)?;
            // Keep only the leaders of this depth so memory stays bounded.
            for (set, r) in chunk.iter().zip(chunk_ranks) {
                if r.is_some() {
                    states.push(st.current.without(d, set));
                    ranks.push(r);
                }
            }
            let keep = depth_leaders(&ranks);
            states = keep.iter().map(|&k| states[k].clone()).collect();
            ranks = keep.iter().map(|&k| ranks[k].clone()).collect();
        }

        let matches = best_matches(&ranks);
        if !matches.is_empty() {
            let sols = matches.into_iter().map(|k| states[k].clone()).collect();
            return Ok(st.finish("exhaustive", params, sols, true, false));
        }
        if let Some(&k) = best_indices(&ranks, compare_moves).first() {
            let cand = ranks[k].clone().expect("leaders are ranked");
            let better = match &fallback {
                Some((_, f)) => compare_moves(&cand, f).is_gt(),
                None => true,
            };
            if better {
                fallback = Some((states[k].clone(), cand));
            }
        }
    }
    let best = fallback
        .map(|(s, _)| s)
        .unwrap_or_else(|| SubsetState::full(d));
    Ok(st.finish("exhaustive", params, vec![best], false, false))
}

/// All best matches, or else the single best non-match.
fn depth_leaders(ranks: &[Option<SolutionRank>]) -> Vec<usize> {
    let m = best_matches(ranks);
    if !m.is_empty() {
        return m;
    }
    best_indices(ranks, compare_moves).into_iter().take(1).collect()
}

fn leader(
    states: &[SubsetState],
    ranks: &[Option<SolutionRank>],
    fallback: Option<(SubsetState, SolutionRank)>,
) -> Option<SubsetState> {
    let here = best_indices(ranks, compare_moves)
        .first()
        .map(|&k| (states[k].clone(), ranks[k].clone().expect("ranked")));
    match (here, fallback) {
        (Some(h), Some(f)) => Some(if compare_moves(&h.1, &f.1).is_gt() { h.0 } else { f.0 }),
        (Some(h), None) => Some(h.0),
        (None, f) => f.map(|f| f.0),
    }
}
