//! Test-statistic search with lookahead.
//!
//! Each step scores every admissible removal set of size `L`, keeps the
//! best-equivalent sets (the pool), and removes a single subject drawn from
//! them:
//!
//! * `h3` narrows the pool to its best subsets of size `L-1`, `L-2`, … `1`
//!   and picks one of the surviving singletons at random;
//! * `h4` picks the subject that occurs in the most pool sets, then the one
//!   with the highest single-removal `r`, then at random.
//!
//! With a batch size above one, up to `batch` subjects are removed per
//! scoring pass while `r` is below `revert_at`; after `r` first reaches it,
//! every removal is rescored.

use std::collections::{BTreeSet, HashMap};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::criteria::{compare_moves, MatchConfig, SolutionRank};
use crate::dataset::{Dataset, SubsetState};
use crate::error::{MatchError, Result};
use crate::search::engine::{best_indices, best_matches, Combinations, SearchState};
use crate::search::MatchResult;
use crate::stats::TestRegistry;

/// Most equal-rank candidate sets retained per step.
pub const POOL_CAP: usize = 64;

pub const DEFAULT_REVERT_AT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    H3,
    H4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookaheadParams {
    pub variant: Variant,
    pub lookahead: usize,
    pub batch: usize,
    pub revert_at: f64,
}

impl LookaheadParams {
    pub fn new(variant: Variant, lookahead: usize) -> Self {
        LookaheadParams {
            variant,
            lookahead,
            batch: 1,
            revert_at: DEFAULT_REVERT_AT,
        }
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch;
        self
    }
}

pub fn lookahead_search(
    d: &Dataset,
    cfg: &MatchConfig,
    registry: &TestRegistry,
    params: LookaheadParams,
) -> Result<MatchResult> {
    if params.lookahead == 0 || params.batch == 0 {
        return Err(MatchError::InvalidConfig(
            "lookahead and batch must both be at least 1".into(),
        ));
    }
    let name = match params.variant {
        Variant::H3 => "h3",
        Variant::H4 => "h4",
    };
    let meta = json!({
        "variant": params.variant,
        "lookahead": params.lookahead,
        "batch": params.batch,
        "revert_at": params.revert_at,
    });

    let mut st = SearchState::new(d, cfg, registry)?;
    let full = SubsetState::full(d);
    let full_rank = st.rank_one(&full)?;
    st.r = full_rank.as_ref().map(|r| r.r);
    if full_rank.is_some_and(|r| r.is_match()) {
        return Ok(st.finish(name, meta, vec![full], true, false));
    }

    let mut batching = params.batch > 1;
    loop {
        if st.timed_out() {
            let cur = st.current.clone();
            return Ok(st.finish(name, meta, vec![cur], false, true));
        }
        if batching && st.r.is_some_and(|r| r >= params.revert_at) {
            batching = false;
        }
        let removable: Vec<usize> = (0..d.len())
            .filter(|&i| st.problem.can_remove(&st.current, i))
            .collect();
        if removable.is_empty() {
            let cur = st.current.clone();
            return Ok(st.finish(name, meta, vec![cur], false, false));
        }

        let size = params.lookahead.min(removable.len());
        let sets: Vec<Vec<usize>> = Combinations::new(&removable, size).collect();
        let ranks = st.rank_removals(&sets)?;
        let mut pool = best_indices(&ranks, compare_moves);
        if pool.is_empty() {
            // No admissible set of this size; fall back to single removals.
            if size > 1 {
                let singles: Vec<Vec<usize>> = removable.iter().map(|&i| vec![i]).collect();
                let ranks1 = st.rank_removals(&singles)?;
                if best_indices(&ranks1, compare_moves).is_empty() {
                    let cur = st.current.clone();
                    return Ok(st.finish(name, meta, vec![cur], false, false));
                }
            } else {
                let cur = st.current.clone();
                return Ok(st.finish(name, meta, vec![cur], false, false));
            }
        }
        cap_pool(&mut st, &mut pool);
        let pool_size = pool.len();

        // Ranks of single removals seen this step.
        let mut singles: HashMap<usize, Option<SolutionRank>> = HashMap::new();
        if size == 1 {
            for (set, r) in sets.iter().zip(&ranks) {
                singles.insert(set[0], r.clone());
            }
        }

        let first = if pool.is_empty() {
            best_single(&mut st, &removable, &mut singles)?
        } else {
            let pool_sets: Vec<Vec<usize>> = pool.iter().map(|&k| sets[k].clone()).collect();
            match params.variant {
                Variant::H3 => choose_h3(&mut st, pool_sets, &mut singles)?,
                Variant::H4 => choose_h4(&mut st, &pool_sets, &mut singles)?,
            }
        };

        let mut chosen = vec![first];
        if batching {
            let mut order: Vec<usize> = (0..sets.len()).filter(|&k| ranks[k].is_some()).collect();
            order.sort_by(|&a, &b| {
                compare_moves(ranks[b].as_ref().unwrap(), ranks[a].as_ref().unwrap())
            });
            let mut probe = st.current.without(d, &chosen);
            'fill: for k in order {
                for &i in &sets[k] {
                    if chosen.len() >= params.batch {
                        break 'fill;
                    }
                    if !chosen.contains(&i) && st.problem.can_remove(&probe, i) {
                        probe.remove(d, i);
                        chosen.push(i);
                    }
                }
            }
        }

        let pre = st.current.clone();
        let before = st.r;
        let after_rank = if chosen.len() == 1 {
            match singles.get(&first) {
                Some(r) => r.clone(),
                None => st.rank_one(&pre.without(d, &chosen))?,
            }
        } else {
            let lead = match singles.get(&first) {
                Some(r) => r.clone(),
                None => st.rank_one(&pre.without(d, &[first]))?,
            };
            shrink_batch(&mut st, &pre, &mut chosen, lead)?
        };
        let Some(after_rank) = after_rank else {
            return Err(MatchError::Infeasible(
                "lookahead chose a removal whose state cannot be scored".into(),
            ));
        };

        for (n, &i) in chosen.iter().enumerate() {
            st.current.remove(d, i);
            let last = n + 1 == chosen.len();
            st.record(
                i,
                if n == 0 { before } else { None },
                last.then_some(after_rank.r),
                pool_size,
            );
        }
        st.r = Some(after_rank.r);

        if after_rank.is_match() {
            let solutions = if chosen.len() == 1 {
                // All equivalent best single-removal matches from `pre`.
                let cands: Vec<usize> = (0..d.len())
                    .filter(|&i| st.problem.can_remove(&pre, i))
                    .collect();
                let missing: Vec<Vec<usize>> = cands
                    .iter()
                    .filter(|i| !singles.contains_key(i))
                    .map(|&i| vec![i])
                    .collect();
                let saved = std::mem::replace(&mut st.current, pre.clone());
                let extra = st.rank_removals(&missing)?;
                st.current = saved;
                for (set, r) in missing.iter().zip(extra) {
                    singles.insert(set[0], r);
                }
                let ranks1: Vec<Option<SolutionRank>> =
                    cands.iter().map(|i| singles[i].clone()).collect();
                best_matches(&ranks1)
                    .into_iter()
                    .map(|k| pre.without(d, &[cands[k]]))
                    .collect()
            } else {
                vec![st.current.clone()]
            };
            return Ok(st.finish(name, meta, solutions, true, false));
        }
    }
}

/// Settles the size of a batch of removals by halving it while the shorter
/// prefix scores at least as well, or while it still matches. An
/// unscorable batch is always halved. A matching batch is then cut to its
/// shortest matching prefix.
fn shrink_batch(
    st: &mut SearchState<'_>,
    pre: &SubsetState,
    chosen: &mut Vec<usize>,
    lead: Option<SolutionRank>,
) -> Result<Option<SolutionRank>> {
    let d = st.problem.dataset();
    let mut rank = st.rank_one(&pre.without(d, chosen))?;
    while chosen.len() > 1 {
        let half = chosen.len() / 2;
        let shorter = if half == 1 {
            lead.clone()
        } else {
            st.rank_one(&pre.without(d, &chosen[..half]))?
        };
        let take = match (&rank, &shorter) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(r), Some(s)) => s.r >= r.r || s.is_match(),
        };
        if !take {
            break;
        }
        chosen.truncate(half);
        rank = shorter;
    }
    if chosen.len() > 1 && rank.as_ref().is_some_and(|r| r.is_match()) {
        // Shortest matching prefix, by bisection: `lo` fails, `hi` matches.
        let (mut lo, mut hi) = (chosen.len() / 2, chosen.len());
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let r = st.rank_one(&pre.without(d, &chosen[..mid]))?;
            if r.as_ref().is_some_and(|r| r.is_match()) {
                hi = mid;
                rank = r;
            } else {
                lo = mid;
            }
        }
        chosen.truncate(hi);
    }
    Ok(rank)
}

/// Seeded subsample down to [`POOL_CAP`], kept in canonical order.
fn cap_pool(st: &mut SearchState<'_>, pool: &mut Vec<usize>) {
    if pool.len() > POOL_CAP {
        let mut picked: Vec<usize> = sample(&mut st.rng, pool.len(), POOL_CAP)
            .into_iter()
            .map(|k| pool[k])
            .collect();
        picked.sort_unstable();
        *pool = picked;
    }
}

fn rank_singles(
    st: &mut SearchState<'_>,
    subjects: &[usize],
    cache: &mut HashMap<usize, Option<SolutionRank>>,
) -> Result<Vec<Option<SolutionRank>>> {
    let missing: Vec<Vec<usize>> = subjects
        .iter()
        .filter(|i| !cache.contains_key(i))
        .map(|&i| vec![i])
        .collect();
    let ranks = st.rank_removals(&missing)?;
    for (set, r) in missing.iter().zip(ranks) {
        cache.insert(set[0], r);
    }
    Ok(subjects.iter().map(|i| cache[i].clone()).collect())
}

fn best_single(
    st: &mut SearchState<'_>,
    subjects: &[usize],
    cache: &mut HashMap<usize, Option<SolutionRank>>,
) -> Result<usize> {
    let ranks = rank_singles(st, subjects, cache)?;
    let ties = best_indices(&ranks, compare_moves);
    if ties.is_empty() {
        return Err(MatchError::Infeasible("no scorable single removal".into()));
    }
    Ok(subjects[ties[st.pick(ties.len())]])
}

fn choose_h3(
    st: &mut SearchState<'_>,
    mut candidates: Vec<Vec<usize>>,
    cache: &mut HashMap<usize, Option<SolutionRank>>,
) -> Result<usize> {
    let mut l = candidates[0].len();
    while l > 1 {
        l -= 1;
        // Every size-l subset of some candidate set.
        let mut subsets = BTreeSet::new();
        for set in &candidates {
            for drop in 0..set.len() {
                let mut sub = set.clone();
                sub.remove(drop);
                subsets.insert(sub);
            }
        }
        let subsets: Vec<Vec<usize>> = subsets.into_iter().collect();
        let ranks = if l == 1 {
            let subjects: Vec<usize> = subsets.iter().map(|s| s[0]).collect();
            rank_singles(st, &subjects, cache)?
        } else {
            st.rank_removals(&subsets)?
        };
        let mut best = best_indices(&ranks, compare_moves);
        if best.is_empty() {
            break;
        }
        cap_pool(st, &mut best);
        candidates = best.into_iter().map(|k| subsets[k].clone()).collect();
    }
    if candidates[0].len() == 1 {
        let k = st.pick(candidates.len());
        return Ok(candidates[k][0]);
    }
    // Narrowing stalled on unscorable subsets; pick from the union.
    let members: BTreeSet<usize> = candidates.iter().flatten().copied().collect();
    let members: Vec<usize> = members.into_iter().collect();
    best_single(st, &members, cache)
}

fn choose_h4(
    st: &mut SearchState<'_>,
    pool: &[Vec<usize>],
    cache: &mut HashMap<usize, Option<SolutionRank>>,
) -> Result<usize> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for set in pool {
        for &i in set {
            *counts.entry(i).or_default() += 1;
        }
    }
    let max = counts.values().copied().max().unwrap_or(0);
    let mut top: Vec<usize> = counts
        .into_iter()
        .filter_map(|(i, c)| (c == max).then_some(i))
        .collect();
    top.sort_unstable();
    if top.len() == 1 {
        return Ok(top[0]);
    }
    let ranks = rank_singles(st, &top, cache)?;
    let ties = best_indices(&ranks, compare_moves);
    if ties.is_empty() {
        let k = st.pick(top.len());
        return Ok(top[k]);
    }
    Ok(top[ties[st.pick(ties.len())]])
}
