use rand::Rng;
use sublin::classify::{
    kernel_estimate, kernel_margin, train_classical_baseline, train_kernel, train_linear_sqrt_d, train_linear_sqrt_n,
    KernelMode, KernelSpec,
};
use sublin::instance::{case2, exact_margin, random_ball, reference_maximin, DataMatrix, Matrix, QueryLedger};
use sublin::mwdual::TrainConfig;
use sublin::reference::exact_primal_dual;
use sublin::rng::seeded;

fn quick(eps: f64, seed: u64, rounds: usize) -> TrainConfig {
    let mut cfg = TrainConfig::new(eps, seed);
    cfg.rounds = Some(rounds);
    cfg
}

#[test]
fn random_instance_margin_tracks_the_reference() {
    let x = random_ball(32, 8, &mut seeded(77)).unwrap();
    let eps = 0.1;
    let sigma = reference_maximin(&x, 1e-3).unwrap();
    let mut hits = 0;
    for seed in 0..9 {
        let r = train_linear_sqrt_n(&x, &TrainConfig::new(eps, seed), &mut QueryLedger::default(), &mut seeded(seed))
            .unwrap();
        if r.achieved_margin >= sigma - eps {
            hits += 1;
        }
    }
    assert!(hits >= 6, "{hits}/9 against sigma {sigma}");
}

#[test]
fn baseline_and_quantum_row_sampling_agree() {
    let x = case2(64, 8, 2).unwrap();
    let eps = 0.1;
    let mut agree = 0;
    for seed in 0..9 {
        let cfg = TrainConfig::new(eps, seed);
        let a = train_linear_sqrt_n(&x, &cfg, &mut QueryLedger::default(), &mut seeded(seed)).unwrap();
        let b = train_classical_baseline(&x, &cfg, &mut QueryLedger::default(), &mut seeded(seed)).unwrap();
        if (a.achieved_margin - b.achieved_margin).abs() <= 2.0 * eps {
            agree += 1;
        }
        // The baseline bills at least n entry queries per round.
        assert!(b.ledger.breakdown.direct >= 64 * b.diagnostics.rounds as u128);
    }
    assert!(agree >= 6, "{agree}/9");
}

#[test]
fn one_column_instances_match_across_budgets() {
    let x = DataMatrix::from_rows(&[vec![0.8], vec![0.5], vec![0.9]]).unwrap();
    let cfg = TrainConfig::new(0.1, 0);
    let a = train_linear_sqrt_n(&x, &cfg, &mut QueryLedger::default(), &mut seeded(1)).unwrap();
    let b = train_linear_sqrt_d(&x, &cfg, &mut QueryLedger::default(), &mut seeded(1)).unwrap();
    assert!(a.achieved_margin >= 0.4 && b.achieved_margin >= 0.4);
    assert!((a.achieved_margin - b.achieved_margin).abs() <= 0.2);
}

#[test]
fn sqrt_d_norm_estimates_land_within_delta() {
    let x = case2(16, 64, 5).unwrap();
    let r = train_linear_sqrt_d(&x, &quick(0.2, 0, 20_000), &mut QueryLedger::default(), &mut seeded(2)).unwrap();
    let d = &r.diagnostics;
    assert!(d.norm_rounds > 0 && d.delta.is_some());
    assert!(3 * d.norm_within_delta >= 2 * d.norm_rounds, "{}/{}", d.norm_within_delta, d.norm_rounds);
    assert!(r.ledger.breakdown.norm_estimation > 0);
}

#[test]
fn degree_one_kernel_reproduces_linear_training() {
    let x = case2(32, 6, 3).unwrap();
    let eps = 0.1;
    let cfg = TrainConfig::new(eps, 0);
    let linear = train_linear_sqrt_d(&x, &cfg, &mut QueryLedger::default(), &mut seeded(3)).unwrap();
    let kernel = train_kernel(
        &x,
        &[],
        &KernelSpec::Polynomial { q: 1 },
        &cfg,
        KernelMode::Estimator,
        &mut QueryLedger::default(),
        &mut seeded(3),
    )
    .unwrap();
    assert!((linear.achieved_margin - kernel.achieved_margin).abs() <= 2.0 * eps);
}

#[test]
fn quadratic_kernel_separates_xor() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let points = vec![vec![h, h, 0.0], vec![-h, -h, 0.0], vec![h, -h, 0.0], vec![-h, h, 0.0]];
    let labels = [1.0, 1.0, -1.0, -1.0];
    let signed: Vec<Vec<f64>> = points
        .iter()
        .zip(&labels)
        .map(|(p, l)| p.iter().map(|v| v * l).collect())
        .collect();
    assert!(reference_maximin(&DataMatrix::from_rows(&signed).unwrap(), 1e-3).unwrap() <= 1e-3);

    let x = DataMatrix::new(Matrix::from_rows(&points).unwrap(), false).unwrap();
    let k = KernelSpec::Polynomial { q: 2 };
    for mode in [KernelMode::ExplicitFeature, KernelMode::Estimator] {
        let r = train_kernel(&x, &labels, &k, &TrainConfig::new(0.1, 0), mode, &mut QueryLedger::default(), &mut seeded(4))
            .unwrap();
        assert!(r.achieved_margin > 0.0, "{mode:?}: {}", r.achieved_margin);
        let audit = kernel_margin(&x, &labels, &k, &r.classifier).unwrap();
        assert!((audit - r.achieved_margin).abs() < 1e-12);
    }
}

fn kernel_mean(k: &KernelSpec, x: &[f64], y: &[f64], draws: usize, seed: u64) -> (f64, f64) {
    let mut ledger = QueryLedger::default();
    let mut rng = seeded(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let v = kernel_estimate(k, x, y, &mut ledger, &mut rng).unwrap();
        s += v;
        s2 += v * v;
    }
    let mean = s / draws as f64;
    (mean, ((s2 / draws as f64 - mean * mean).max(0.0) / draws as f64).sqrt())
}

#[test]
fn kernel_estimates_are_unbiased() {
    let mut ledger = QueryLedger::default();
    let mut rng = seeded(8);
    let e1 = [1.0, 0.0];
    for _ in 0..100 {
        assert_eq!(kernel_estimate(&KernelSpec::Polynomial { q: 1 }, &e1, &e1, &mut ledger, &mut rng).unwrap(), 1.0);
    }
    let mut r = seeded(9);
    for q in 1..=4 {
        let x: Vec<f64> = (0..4).map(|_| r.random_range(-0.5..0.5)).collect();
        let y: Vec<f64> = (0..4).map(|_| r.random_range(-0.5..0.5)).collect();
        let k = KernelSpec::Polynomial { q };
        let (mean, sd) = kernel_mean(&k, &x, &y, 200_000, q as u64);
        assert!((mean - k.exact(&x, &y)).abs() <= 5.0 * sd, "q = {q}");
    }
    let x = [0.3, -0.4, 0.5];
    let g = KernelSpec::Gaussian { s: 1.5 };
    let (mean, sd) = kernel_mean(&g, &x, &x, 200_000, 10);
    assert!((g.exact(&x, &x) - 1.0).abs() < 1e-15);
    assert!((mean - 1.0).abs() <= 5.0 * sd, "{mean} ± {sd}");
    let y = [-0.2, 0.1, 0.6];
    let (mean, sd) = kernel_mean(&g, &x, &y, 200_000, 11);
    assert!((mean - g.exact(&x, &y)).abs() <= 5.0 * sd);
}

#[test]
fn output_norm_stays_in_the_ball_for_sqrt_n() {
    let x = random_ball(20, 5, &mut seeded(12)).unwrap();
    let r = train_linear_sqrt_n(&x, &quick(0.2, 0, 3000), &mut QueryLedger::default(), &mut seeded(13)).unwrap();
    let w = r.classifier.reconstruct(&x).unwrap();
    assert!(w.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1.0 + 1e-9);
    assert_eq!(exact_margin(&x, &w).unwrap(), r.achieved_margin);
}

#[test]
fn exact_reference_matches_grid_search_in_three_dimensions() {
    let x = random_ball(5, 3, &mut seeded(21)).unwrap();
    let rows = x.matrix().to_rows();
    let margin = |w: &[f64; 3]| {
        rows.iter()
            .map(|r| r[0] * w[0] + r[1] * w[1] + r[2] * w[2])
            .fold(f64::INFINITY, f64::min)
    };
    // Fibonacci lattice on the sphere, then a shrinking local grid.
    let count = 200_000;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let (mut best, mut best_w) = (f64::NEG_INFINITY, [0.0; 3]);
    for i in 0..count {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
        let r = (1.0 - z * z).sqrt();
        let w = [r * (golden * i as f64).cos(), r * (golden * i as f64).sin(), z];
        let m = margin(&w);
        if m > best {
            best = m;
            best_w = w;
        }
    }
    let mut step = 0.02;
    while step > 1e-7 {
        let centre = best_w;
        for a in -10..=10 {
            for b in -10..=10 {
                for c in -10..=10 {
                    let v = [
                        centre[0] + a as f64 * step,
                        centre[1] + b as f64 * step,
                        centre[2] + c as f64 * step,
                    ];
                    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    let w = [v[0] / norm, v[1] / norm, v[2] / norm];
                    let m = margin(&w);
                    if m > best {
                        best = m;
                        best_w = w;
                    }
                }
            }
        }
        step /= 4.0;
    }
    let grid = best.max(0.0);
    let sigma = reference_maximin(&x, 1e-3).unwrap();
    assert!((sigma - grid).abs() <= 2e-3, "reference {sigma} vs grid {grid}");
    let run = exact_primal_dual(&x, 1e-3).unwrap();
    assert!(run.lower <= grid + 1e-9 && grid <= run.upper + 1e-9);
}
