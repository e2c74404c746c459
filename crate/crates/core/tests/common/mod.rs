//! Reference implementations shared by the integration tests. They are
//! written from the textbook formulas and share no code with the crate.

#![allow(dead_code)]

use groupmatch::Dataset;
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn welch_oracle(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n1 = x.len() as f64;
    let n2 = y.len() as f64;
    let m1 = x.iter().sum::<f64>() / n1;
    let m2 = y.iter().sum::<f64>() / n2;
    let v1 = x.iter().map(|v| (v - m1).powi(2)).sum::<f64>() / (n1 - 1.0);
    let v2 = y.iter().map(|v| (v - m2).powi(2)).sum::<f64>() / (n2 - 1.0);
    let a = v1 / n1;
    let b = v2 / n2;
    let t = (m1 - m2) / (a + b).sqrt();
    let df = (a + b).powi(2) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    let p = 2.0 * dist.cdf(-t.abs());
    (t, df, p)
}

/// Midrank k-sample Anderson–Darling statistic, standardized, and its
/// interpolated p-value.
pub fn ad_oracle(samples: &[&[f64]]) -> (f64, f64) {
    let k = samples.len();
    let mut pooled: Vec<f64> = samples.iter().flat_map(|s| s.iter().copied()).collect();
    pooled.sort_by(f64::total_cmp);
    let n = pooled.len() as f64;
    let mut distinct = pooled.clone();
    distinct.dedup();

    let mut a2 = 0.0;
    for s in samples {
        let ni = s.len() as f64;
        let mut inner = 0.0;
        for &z in &distinct {
            let l = pooled.iter().filter(|&&v| v == z).count() as f64;
            let b = pooled.iter().filter(|&&v| v <= z).count() as f64;
            let m = s.iter().filter(|&&v| v <= z).count() as f64;
            let f = s.iter().filter(|&&v| v == z).count() as f64;
            let ba = b - l / 2.0;
            let ma = m - f / 2.0;
            let denom = ba * (n - ba) - n * l / 4.0;
            if denom > 0.0 {
                inner += l / n * (n * ma - ni * ba).powi(2) / denom;
            }
        }
        a2 += inner / ni;
    }
    a2 *= (n - 1.0) / n;

    let kk = k as f64;
    let hh: f64 = samples.iter().map(|s| 1.0 / s.len() as f64).sum();
    let nn = pooled.len();
    let h: f64 = (1..nn).map(|i| 1.0 / i as f64).sum();
    let mut g = 0.0;
    for i in 1..nn - 1 {
        for j in i + 1..nn {
            g += 1.0 / ((nn - i) as f64 * j as f64);
        }
    }
    let a = (4.0 * g - 6.0) * (kk - 1.0) + (10.0 - 6.0 * g) * hh;
    let b = (2.0 * g - 4.0) * kk * kk + 8.0 * h * kk + (2.0 * g - 14.0 * h - 4.0) * hh
        - 8.0 * h
        + 4.0 * g
        - 6.0;
    let c = (6.0 * h + 2.0 * g - 2.0) * kk * kk + (4.0 * h - 4.0 * g + 6.0) * kk
        + (2.0 * h - 6.0) * hh
        + 4.0 * h;
    let d = (2.0 * h + 6.0) * kk * kk - 4.0 * h * kk;
    let var = (a * n.powi(3) + b * n * n + c * n + d) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
    let m = kk - 1.0;
    let std = (a2 - m) / var.sqrt();

    let sig = [0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.001];
    let b0 = [0.675, 1.281, 1.645, 1.96, 2.326, 2.573, 3.085];
    let b1 = [-0.245, 0.25, 0.678, 1.149, 1.822, 2.364, 3.615];
    let b2 = [-0.105, -0.305, -0.362, -0.391, -0.396, -0.345, -0.154];
    let crit: Vec<f64> = (0..7).map(|i| b0[i] + b1[i] / m.sqrt() + b2[i] / m).collect();
    let x = DMatrix::from_fn(7, 3, |r, c| crit[r].powi(c as i32));
    let y = DVector::from_iterator(7, sig.iter().map(|s: &f64| s.ln()));
    let coef = x.svd(true, true).solve(&y, 1e-14).unwrap();
    let p = (coef[0] + coef[1] * std + coef[2] * std * std).exp();
    (std, p.min(1.0))
}

/// Two-group dataset from plain vectors.
pub fn two_groups(a: &[f64], b: &[f64]) -> Dataset {
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, &v) in a.iter().enumerate() {
        ids.push(format!("a{i}"));
        labels.push("A".to_string());
        rows.push(vec![v]);
    }
    for (i, &v) in b.iter().enumerate() {
        ids.push(format!("b{i}"));
        labels.push("B".to_string());
        rows.push(vec![v]);
    }
    Dataset::new(ids, labels, vec!["x".into()], rows).unwrap()
}

/// Largest subset (by size) over all 2^N masks where every group keeps at
/// least two members and Welch p on covariate 0 reaches `alpha`.
pub fn brute_force_best(d: &Dataset, alpha: f64) -> Option<usize> {
    let n = d.len();
    assert!(n <= 20);
    let col = d.column(0);
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << n) {
        let kept = mask.count_ones() as usize;
        if best.is_some_and(|b| kept <= b) {
            continue;
        }
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (i, &v) in col.iter().enumerate() {
            if mask >> i & 1 == 1 {
                if d.group_of(i) == 0 {
                    a.push(v);
                } else {
                    b.push(v);
                }
            }
        }
        if a.len() < 2 || b.len() < 2 {
            continue;
        }
        let (_, _, p) = welch_oracle(&a, &b);
        // Two constant samples with equal means count as matched.
        let p = if p.is_nan() { welch_nan_case(&a, &b) } else { p };
        if p >= alpha {
            best = Some(kept);
        }
    }
    best
}

fn welch_nan_case(a: &[f64], b: &[f64]) -> f64 {
    let same = |s: &[f64]| s.iter().all(|&v| v == s[0]);
    if same(a) && same(b) && a[0] == b[0] {
        1.0
    } else {
        0.0
    }
}

/// Two-group dataset with `n` subjects: A ~ N(0,1), B ~ N(shift,1), values
/// rounded to 3 decimals.
pub fn random_two_group(seed: u64, n: usize, shift: f64) -> Dataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let na = n / 2;
    let mut draw = |m: f64| {
        let v: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) + m;
        (v * 1000.0).round() / 1000.0
    };
    let a: Vec<f64> = (0..na).map(|_| draw(0.0)).collect();
    let b: Vec<f64> = (0..n - na).map(|_| draw(shift)).collect();
    two_groups(&a, &b)
}

/// Replays a trace of single removals and checks each step against every
/// alternative under `compare_moves`. Returns `Some(true)` when every
/// step's choice was the unique best, `Some(false)` when some step had
/// ties, and `None` if a step was not a best move at all.
pub fn replay_steps(
    d: &Dataset,
    cfg: &groupmatch::MatchConfig,
    reg: &groupmatch::TestRegistry,
    removed: &[String],
) -> Option<bool> {
    use groupmatch::{compare_moves, Problem, SubsetState};
    use std::cmp::Ordering;
    let p = Problem::new(d, cfg, reg).unwrap();
    let mut s = SubsetState::full(d);
    let mut unique = true;
    for id in removed {
        let chosen = d.ids().iter().position(|x| x == id).unwrap();
        let chosen_rank = p.rank(&s.without(d, &[chosen]))?;
        for i in 0..d.len() {
            if i == chosen || !p.can_remove(&s, i) {
                continue;
            }
            if let Some(r) = p.rank(&s.without(d, &[i])) {
                match compare_moves(&r, &chosen_rank) {
                    Ordering::Greater => return None,
                    Ordering::Equal => unique = false,
                    Ordering::Less => {}
                }
            }
        }
        s.remove(d, chosen);
    }
    Some(unique)
}
