use std::cmp::Ordering;

use groupmatch::{
    anderson_darling_p, compare_solutions, kl_divergence, welch_t_p, Balance, Dataset, Schema,
    SolutionRank, SubsetState,
};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn sample(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    // Values on a 0.01 grid so that shifts cannot merge distinct values.
    prop::collection::vec((-5000i32..5000).prop_map(|v| v as f64 / 100.0), min..max)
}

fn non_constant(x: &[f64]) -> bool {
    x.iter().any(|&v| v != x[0])
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn welch_shift_invariant(x in sample(2, 40), y in sample(2, 40), c in -1000i32..1000) {
        prop_assume!(non_constant(&x) || non_constant(&y));
        let c = c as f64;
        let xs: Vec<f64> = x.iter().map(|v| v + c).collect();
        let ys: Vec<f64> = y.iter().map(|v| v + c).collect();
        let p = welch_t_p(&x, &y).unwrap();
        let q = welch_t_p(&xs, &ys).unwrap();
        prop_assert!(close(p, q, 1e-6), "{p} vs {q}");
    }

    #[test]
    fn welch_swap_and_scale_invariant(x in sample(2, 40), y in sample(2, 40), s in 0.01f64..100.0) {
        prop_assume!(non_constant(&x) || non_constant(&y));
        let p = welch_t_p(&x, &y).unwrap();
        prop_assert!(close(p, welch_t_p(&y, &x).unwrap(), 1e-12));
        let xs: Vec<f64> = x.iter().map(|v| v * s).collect();
        let ys: Vec<f64> = y.iter().map(|v| v * s).collect();
        prop_assert!(close(p, welch_t_p(&xs, &ys).unwrap(), 1e-6));
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn anderson_darling_shift_invariant(x in sample(2, 40), y in sample(2, 40), c in -1000i32..1000) {
        let mut all = x.clone();
        all.extend(&y);
        prop_assume!(non_constant(&all));
        let c = c as f64;
        let xs: Vec<f64> = x.iter().map(|v| v + c).collect();
        let ys: Vec<f64> = y.iter().map(|v| v + c).collect();
        let p = anderson_darling_p(&[&x, &y]).unwrap();
        let q = anderson_darling_p(&[&xs, &ys]).unwrap();
        prop_assert!(close(p, q, 1e-9), "{p} vs {q}");
    }

    #[test]
    fn anderson_darling_swap_invariant(x in sample(2, 40), y in sample(2, 40), z in sample(2, 20)) {
        let mut all = x.clone();
        all.extend(&y);
        prop_assume!(non_constant(&all));
        let p = anderson_darling_p(&[&x, &y]).unwrap();
        prop_assert!(close(p, anderson_darling_p(&[&y, &x]).unwrap(), 1e-12));
        let p3 = anderson_darling_p(&[&x, &y, &z]).unwrap();
        prop_assert!(close(p3, anderson_darling_p(&[&z, &x, &y]).unwrap(), 1e-12));
    }

    #[test]
    fn anderson_darling_monotone_invariant(x in sample(2, 40), y in sample(2, 40)) {
        let mut all = x.clone();
        all.extend(&y);
        prop_assume!(non_constant(&all));
        let f = |v: &f64| v * v * v + v;
        let xs: Vec<f64> = x.iter().map(f).collect();
        let ys: Vec<f64> = y.iter().map(f).collect();
        let p = anderson_darling_p(&[&x, &y]).unwrap();
        let q = anderson_darling_p(&[&xs, &ys]).unwrap();
        prop_assert!(close(p, q, 1e-12), "{p} vs {q}");
    }

    #[test]
    fn kl_is_non_negative(obs in prop::collection::vec(0.0f64..1.0, 2..6), tgt in prop::collection::vec(0.01f64..1.0, 6)) {
        let k = obs.len();
        let so: f64 = obs.iter().sum();
        prop_assume!(so > 0.0);
        let st: f64 = tgt[..k].iter().sum();
        let o: Vec<f64> = obs.iter().map(|v| v / so).collect();
        let t: Vec<f64> = tgt[..k].iter().map(|v| v / st).collect();
        let kl = kl_divergence(&o, &t).unwrap();
        prop_assert!(kl >= 0.0);
        prop_assert!(kl_divergence(&o, &o).unwrap().abs() < 1e-12);
    }
}

fn rank(kind: bool) -> impl Strategy<Value = SolutionRank> {
    (0usize..5, 0usize..4, 0u32..8, 0usize..3).prop_map(move |(p, b, r, rem)| {
        SolutionRank {
            preserved: p,
            balance: if kind {
                Balance::Divergence(b as f64 * 0.05)
            } else {
                Balance::Removals(vec![rem, b])
            },
            r: r as f64 * 0.25,
        }
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn solution_order_is_a_total_preorder(
        (a, b, c) in any::<bool>().prop_flat_map(|k| (rank(k), rank(k), rank(k)))
    ) {
        prop_assert_eq!(compare_solutions(&a, &a), Ordering::Equal);
        prop_assert_eq!(compare_solutions(&a, &b), compare_solutions(&b, &a).reverse());
        if compare_solutions(&a, &b) != Ordering::Less && compare_solutions(&b, &c) != Ordering::Less {
            prop_assert_ne!(compare_solutions(&a, &c), Ordering::Less);
        }
    }

    #[test]
    fn feasibility_is_monotone(
        sizes in prop::collection::vec(2usize..7, 2..4),
        remove in prop::collection::vec(any::<bool>(), 18),
        lock_first in any::<bool>(),
        floor in 1usize..4,
    ) {
        let mut ids = Vec::new();
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for (g, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                ids.push(format!("g{g}s{i}"));
                labels.push(format!("G{g}"));
                rows.push(vec![i as f64]);
            }
        }
        let d = Dataset::new(ids, labels, vec!["x".into()], rows).unwrap();
        let mut locked = vec![false; d.n_groups()];
        locked[0] = lock_first;
        let keep: Vec<bool> = (0..d.len()).map(|i| !remove[i]).collect();
        let s = SubsetState::from_keep(&d, keep).unwrap();
        let feasible = s.is_feasible(&d, &locked, floor);
        for i in 0..d.len() {
            if s.is_kept(i) {
                // removing more never repairs an infeasible state
                if !feasible {
                    prop_assert!(!s.without(&d, &[i]).is_feasible(&d, &locked, floor));
                }
            } else if feasible {
                // restoring a subject never breaks a feasible one
                let mut t = s.clone();
                t.restore(&d, i);
                prop_assert!(t.is_feasible(&d, &locked, floor));
            }
        }
    }

    #[test]
    fn csv_round_trip(
        rows in prop::collection::vec((any::<bool>(), -1e6f64..1e6, -1e-3f64..1e-3), 2..30),
        semicolon in any::<bool>(),
    ) {
        let n = rows.len();
        let ids: Vec<String> = (0..n).map(|i| format!("s{i:03}")).collect();
        let mut labels: Vec<String> = rows.iter().map(|r| if r.0 { "case" } else { "ctrl" }.to_string()).collect();
        labels[0] = "case".into();
        labels[1] = "ctrl".into();
        let values: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.1, r.2]).collect();
        let d = Dataset::new(ids, labels, vec!["a".into(), "b".into()], values).unwrap();
        let mut schema = Schema::new("id", "group", ["a", "b"]);
        if semicolon {
            schema = schema.with_delimiter(b';');
        }
        let mut buf = Vec::new();
        d.to_writer(&mut buf, &schema).unwrap();
        let back = Dataset::from_reader(buf.as_slice(), &schema).unwrap();
        prop_assert_eq!(back, d);
    }
}
