mod common;

use common::{noiseless, rng};
use matfactor::selection::{
    demean, eigenvalue_ratio, eigenvalue_ratios, select_factor_numbers, vectorized_er, Demean, SelectionConfig,
};
use matfactor::series::MatrixSeries;
use matfactor::simulate::{generate_dataset, SimulationSpec};
use ndarray::Array3;
use proptest::prelude::*;
use rand::Rng;

fn config(k_max: usize, c: f64) -> SelectionConfig {
    SelectionConfig { k_max, c, ..SelectionConfig::default() }
}

#[test]
fn double_demean_matches_four_term_formula() {
    let mut g = rng(1);
    let x = Array3::from_shape_simple_fn((3, 2, 2), || g.random_range(-5.0..5.0));
    let out = demean(&MatrixSeries::new(x.clone()).unwrap(), Demean::DoubleDemean).unwrap().into_inner();
    let (t, p1, p2) = x.dim();
    let grand = x.sum() / (t * p1 * p2) as f64;
    for s in 0..t {
        let period = (0..p1).flat_map(|i| (0..p2).map(move |j| (i, j))).map(|(i, j)| x[[s, i, j]]).sum::<f64>()
            / (p1 * p2) as f64;
        for i in 0..p1 {
            for j in 0..p2 {
                let entry = (0..t).map(|u| x[[u, i, j]]).sum::<f64>() / t as f64;
                let want = x[[s, i, j]] - entry - period + grand;
                assert!((out[[s, i, j]] - want).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn noiseless_rank_two_pair_is_selected() {
    let d = noiseless(4, 60, 12, 10, 2, 2);
    for c in [0.0, 1e-4] {
        let sel = select_factor_numbers(&d.x, &config(5, c)).unwrap();
        assert_eq!((sel.k1_hat, sel.k2_hat), (2, 2));
        assert!(sel.converged && sel.iterations <= 3);
    }
    assert_eq!(vectorized_er(&d.x, 10, Demean::None).unwrap(), 4);
}

#[test]
fn planted_gaps_match_exhaustive_argmax() {
    let mut g = rng(99);
    for _ in 0..100 {
        let n = g.random_range(4..12);
        let gap_at = g.random_range(1..n - 1);
        // Slowly decaying spectrum with one large drop after `gap_at` values.
        let mut eigs: Vec<f64> = Vec::with_capacity(n);
        let mut v = 100.0;
        for j in 0..n {
            eigs.push(v);
            v *= if j + 1 == gap_at { g.random_range(0.001..0.05) } else { g.random_range(0.6..0.95) };
        }
        let k_max = n - 1;
        let c = g.random_range(0.0..0.5);
        let delta = g.random_range(1e-4..1e-2);
        let mut best = 0;
        let mut best_ratio = f64::NEG_INFINITY;
        for j in 0..k_max {
            let ratio = eigs[j] / (eigs[j + 1] + c * delta);
            if ratio > best_ratio {
                best_ratio = ratio;
                best = j + 1;
            }
        }
        assert_eq!(eigenvalue_ratio(&eigs, k_max, c, delta).unwrap(), best);
        assert_eq!(best, gap_at);
    }
}

#[test]
fn ratio_examples() {
    assert_eq!(eigenvalue_ratio(&[10.0, 9.0, 1.0, 0.5, 0.25], 4, 0.0, 0.0).unwrap(), 2);
    assert_eq!(eigenvalue_ratio(&[5.0, 0.0, 0.0, 0.0], 3, 1.0, 1e-3).unwrap(), 1);
    let r = eigenvalue_ratios(&[5.0, 0.0, 0.0, 0.0], 3, 1.0, 1e-3).unwrap();
    assert!((r[0] - 5000.0).abs() < 1e-9 && r[1..].iter().all(|v| *v <= 1.0));
}

fn first_max(ratios: &[f64]) -> usize {
    let mut best = 0;
    for (j, r) in ratios.iter().enumerate() {
        if *r > ratios[best] {
            best = j;
        }
    }
    best + 1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ratio_argmax_ignores_spectrum_scale(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let mut g = rng(seed);
        let mut eigs: Vec<f64> = (0..9).map(|_| g.random_range(0.01..10.0)).collect();
        eigs.sort_by(|a, b| b.total_cmp(a));
        let scaled: Vec<f64> = eigs.iter().map(|v| v * scale).collect();
        prop_assert_eq!(eigenvalue_ratio(&eigs, 8, 0.0, 0.0).unwrap(), eigenvalue_ratio(&scaled, 8, 0.0, 0.0).unwrap());
    }

    #[test]
    fn noiseless_selection_holds_for_every_k_max(seed in any::<u64>(), k1 in 1usize..4, k2 in 1usize..4) {
        let (p1, p2) = (9, 8);
        let d = noiseless(seed, 40, p1, p2, k1, k2);
        for k_max in k1.max(k2) + 1..p1.min(p2) {
            let sel = select_factor_numbers(&d.x, &config(k_max, 0.0)).unwrap();
            prop_assert_eq!((sel.k1_hat, sel.k2_hat), (k1, k2));
        }
    }

    #[test]
    fn selection_is_deterministic_and_bounded(seed in any::<u64>(), k_max in 1usize..10) {
        let ds = generate_dataset::<f64>(&SimulationSpec::setting_a(20).with_seed(seed)).unwrap();
        let cfg = config(k_max, 0.0);
        let a = select_factor_numbers(&ds.observations, &cfg).unwrap();
        let b = select_factor_numbers(&ds.observations, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!((1..=k_max).contains(&a.k1_hat) && (1..=k_max).contains(&a.k2_hat));
        // Converged means the last iteration reproduced the previous pair
        // (the starting pair is (k_max, k_max)).
        if a.converged {
            let picks: Vec<(usize, usize)> = a.ratio_traces.iter().map(|r| (first_max(&r.row), first_max(&r.col))).collect();
            let before = if picks.len() >= 2 { picks[picks.len() - 2] } else { (k_max, k_max) };
            prop_assert_eq!(before, *picks.last().unwrap());
            prop_assert_eq!(before, (a.k1_hat, a.k2_hat));
        }
    }

    #[test]
    fn subtracting_means_centres_every_entry(seed in any::<u64>(), t in 2usize..30) {
        let mut g = rng(seed);
        let x = Array3::from_shape_simple_fn((t, 3, 4), || g.random_range(-100.0..100.0));
        let out = demean(&MatrixSeries::new(x).unwrap(), Demean::SubtractMean).unwrap();
        let means = out.view().sum_axis(ndarray::Axis(0)) / t as f64;
        prop_assert!(means.iter().all(|m| m.abs() <= 1e-12));
    }
}
