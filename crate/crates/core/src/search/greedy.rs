use serde_json::json;

use crate::criteria::{compare_moves, MatchConfig};
use crate::dataset::{Dataset, SubsetState};
use crate::error::Result;
use crate::search::engine::{best_indices, best_matches, SearchState};
use crate::search::MatchResult;
use crate::stats::TestRegistry;

/// Test-statistic search: at every step remove the subject whose removal
/// gives the best move (highest `r`; among matches the best solution rank),
/// until `r >= 1`. Ties go to the seeded generator.
pub fn greedy_search(d: &Dataset, cfg: &MatchConfig, registry: &TestRegistry) -> Result<MatchResult> {
    let mut st = SearchState::new(d, cfg, registry)?;
    let full = SubsetState::full(d);
    let full_rank = st.rank_one(&full)?;
    st.r = full_rank.as_ref().map(|r| r.r);
    if full_rank.is_some_and(|r| r.is_match()) {
        return Ok(st.finish("greedy", json!({}), vec![full], true, false));
    }

    loop {
        if st.timed_out() {
            let cur = st.current.clone();
            return Ok(st.finish("greedy", json!({}), vec![cur], false, true));
        }
        let candidates: Vec<Vec<usize>> = (0..d.len())
            .filter(|&i| st.problem.can_remove(&st.current, i))
            .map(|i| vec![i])
            .collect();
        let ranks = st.rank_removals(&candidates)?;
        let ties = best_indices(&ranks, compare_moves);
        if ties.is_empty() {
            let cur = st.current.clone();
            return Ok(st.finish("greedy", json!({}), vec![cur], false, false));
        }
        let chosen = ties[st.pick(ties.len())];
        let subject = candidates[chosen][0];
        let rank = ranks[chosen].clone().expect("tie entries are ranked");
        let before = st.r;
        st.current.remove(d, subject);
        st.r = Some(rank.r);
        st.record(subject, before, Some(rank.r), ties.len());

        if rank.is_match() {
            let mut pre = st.current.clone();
            pre.restore(d, subject);
            let solutions = best_matches(&ranks)
                .into_iter()
                .map(|k| pre.without(d, &candidates[k]))
                .collect();
            return Ok(st.finish("greedy", json!({}), solutions, true, false));
        }
    }
}
