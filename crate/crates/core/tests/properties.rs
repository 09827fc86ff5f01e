use std::collections::BTreeMap;

use proptest::prelude::*;
use sublin::classify::{feature_map, identify_lower_bound_case, train_linear_sqrt_d, train_linear_sqrt_n};
use sublin::instance::{DataMatrix, Matrix, QueryLedger};
use sublin::mwdual::{clip, mw_factor, reconstruct_coordinate, TrainConfig};
use sublin::qsim::{amplify_prepare_sample, median, SliceOracle};
use sublin::rng::seeded;
use sublin::zerosum::{antisymmetrize, Strategy as Mixed};

fn rows(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clip_lands_in_range(v in -1e6f64..1e6, c in 1e-3f64..1e3) {
        let r = clip(v, c);
        prop_assert!(r.abs() <= c);
        if v.abs() <= c {
            prop_assert_eq!(r, v);
        }
    }

    #[test]
    fn clipped_factors_are_at_least_three_quarters(v in -1e4f64..1e4, eta in 1e-3f64..1.0) {
        let f = mw_factor(clip(v, 1.0 / eta), eta);
        prop_assert!(f >= 0.75 - 1e-12 && f <= 3.0 + 1e-12);
    }

    #[test]
    fn normalized_rows_lie_in_the_ball(data in rows(6, 3), flip in prop::collection::vec(any::<bool>(), 6)) {
        let m = Matrix::from_rows(&data).unwrap();
        let labels: Vec<f64> = flip.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        let x = DataMatrix::normalized(&m, Some(&labels)).unwrap();
        prop_assert!(x.max_row_norm() <= 1.0 + 1e-12);
        prop_assert!(x.labels_folded());
    }

    #[test]
    fn antisymmetrized_games_are_skew(data in prop::collection::vec(prop::collection::vec(-1.0f64..=1.0, 3), 1..5)) {
        let x = Matrix::from_rows(&data).unwrap();
        let g = antisymmetrize(&x).unwrap();
        let n = g.n();
        prop_assert_eq!(n, data.len() + 3 + 1);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(g.matrix().get(i, j) + g.matrix().get(j, i), 0.0);
            }
        }
    }

    #[test]
    fn tallies_give_simplex_strategies(counts in prop::collection::btree_map(0usize..20, 1u64..50, 1..10)) {
        let tally: BTreeMap<usize, u64> = counts;
        let s = Mixed::from_tally(&tally, 20).unwrap();
        s.validate().unwrap();
        let total: f64 = s.dense().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(s.dense().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn preparation_is_reproducible(a in prop::collection::vec(-1.0f64..1.0, 1..40), seed in any::<u64>()) {
        prop_assume!(a.iter().any(|v| *v != 0.0));
        let oracle = SliceOracle { values: &a, per_call: 2 };
        let draw = || {
            let mut ledger = QueryLedger::default();
            let p = amplify_prepare_sample(&oracle, &mut ledger, &mut seeded(seed)).unwrap();
            (p.index, ledger.charged_queries())
        };
        let (i, q) = draw();
        prop_assert_eq!((i, q), draw());
        prop_assert!(a[i] != 0.0);
    }

    #[test]
    fn median_splits_the_sample(xs in prop::collection::vec(-100.0f64..100.0, 1..30)) {
        let mut v = xs.clone();
        let m = median(&mut v);
        let below = xs.iter().filter(|&&x| x <= m).count();
        let above = xs.iter().filter(|&&x| x >= m).count();
        prop_assert!(2 * below >= xs.len() && 2 * above >= xs.len());
    }

    #[test]
    fn feature_maps_realize_the_polynomial_kernel(
        x in prop::collection::vec(-1.0f64..1.0, 3),
        y in prop::collection::vec(-1.0f64..1.0, 3),
        q in 1u32..4,
    ) {
        let lhs: f64 = feature_map(&x, q).iter().zip(feature_map(&y, q)).map(|(a, b)| a * b).sum();
        let rhs = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().powi(q as i32);
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn decision_rule_reports_the_largest_tail_coordinate(w in prop::collection::vec(-1.0f64..1.0, 2..10)) {
        let call = identify_lower_bound_case(&w).unwrap();
        let top = w[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(w[call.l], top);
        prop_assert!(call.l >= 1);
        prop_assert_eq!(call.case, if top > 0.94 { 2 } else { 1 });
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn training_is_deterministic_and_reconstructs_consistently(data in rows(8, 3), seed in any::<u64>(), sqrt_d in any::<bool>()) {
        let x = DataMatrix::normalized(&Matrix::from_rows(&data).unwrap(), None).unwrap();
        let mut cfg = TrainConfig::new(0.3, seed);
        cfg.rounds = Some(300);
        let train = if sqrt_d { train_linear_sqrt_d } else { train_linear_sqrt_n };
        let a = train(&x, &cfg, &mut QueryLedger::default(), &mut seeded(seed)).unwrap();
        let b = train(&x, &cfg, &mut QueryLedger::default(), &mut seeded(seed)).unwrap();
        prop_assert_eq!(&a.classifier, &b.classifier);
        prop_assert_eq!(&a.ledger, &b.ledger);
        let w = a.classifier.reconstruct(&x).unwrap();
        for (j, wj) in w.iter().enumerate() {
            let c = reconstruct_coordinate(&a.classifier, &x, &mut QueryLedger::default(), j).unwrap();
            prop_assert!((c - wj).abs() <= 1e-9);
        }
        if !sqrt_d {
            prop_assert!(w.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1.0 + 1e-9);
        }
        prop_assert!(a.diagnostics.regret_holds());
        prop_assert!(a.diagnostics.mw_inequality_holds());
    }
}
