mod common;

use common::{gaussian, max_abs_diff, rng, symmetric};
use matfactor::evaluation::ols_fit;
use matfactor::linalg::{kron, lstsq, sym_eig_topk, sym_eigenvalues, varimax, varimax_criterion};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

/// Full eigendecomposition from nalgebra, sorted descending, with the
/// largest-magnitude entry of each vector made positive.
fn oracle_eig(s: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = s.nrows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| s[[i, j]]);
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut vecs = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 0..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vecs[[i, col]] = sign * v[i];
        }
    }
    (order.iter().map(|&i| eig.eigenvalues[i]).collect(), vecs)
}

fn min_gap(vals: &[f64]) -> f64 {
    vals.windows(2).map(|w| (w[0] - w[1]).abs()).fold(f64::INFINITY, f64::min)
}

#[test]
fn top_three_of_six_match_full_oracle() {
    for seed in 0..20 {
        let s = symmetric(&mut rng(seed), 6);
        let (vals, vecs) = oracle_eig(&s);
        let got = sym_eig_topk(s.view(), 3).unwrap();
        for (j, want) in vals.iter().take(3).enumerate() {
            assert!((got.eigenvalues[j] - want).abs() <= 1e-8, "seed {seed} value {j}");
        }
        let want = vecs.slice(ndarray::s![.., ..3]).to_owned();
        assert!(max_abs_diff(&got.eigenvectors, &want) <= 1e-8, "seed {seed}");
    }
}

#[test]
fn kron_matches_four_index_loop() {
    let mut g = rng(11);
    let a = gaussian(&mut g, 2, 2);
    let b = gaussian(&mut g, 2, 2);
    let k = kron(a.view(), b.view());
    for i in 0..2 {
        for j in 0..2 {
            for p in 0..2 {
                for q in 0..2 {
                    assert_eq!(k[[2 * i + p, 2 * j + q]], a[[i, j]] * b[[p, q]]);
                }
            }
        }
    }
}

#[test]
fn varimax_raises_criterion_and_keeps_gram() {
    for seed in 0..20 {
        let l = gaussian(&mut rng(seed), 10, 2);
        let out = varimax(l.view(), 1000, 1e-8).unwrap();
        assert!(varimax_criterion(out.view()) >= varimax_criterion(l.view()) - 1e-12);
        // A rotation keeps L Lᵀ and the spectrum of LᵀL, not LᵀL itself.
        assert!(max_abs_diff(&l.dot(&l.t()), &out.dot(&out.t())) <= 1e-8, "seed {seed}");
        let vals_in = sym_eigenvalues(l.t().dot(&l).view()).unwrap();
        let vals_out = sym_eigenvalues(out.t().dot(&out).view()).unwrap();
        assert!((&vals_in - &vals_out).iter().all(|v| v.abs() <= 1e-8));
        // O recovered column by column by least squares must be orthogonal.
        let mut o = Array2::zeros((2, 2));
        for j in 0..2 {
            let coef = lstsq(l.view(), out.column(j)).unwrap();
            o.column_mut(j).assign(&coef);
        }
        assert!(max_abs_diff(&o.t().dot(&o), &Array2::eye(2)) <= 1e-8);
    }
}

#[test]
fn least_squares_matches_normal_equations() {
    let mut g = rng(5);
    let design = gaussian(&mut g, 50, 3);
    let response = gaussian(&mut g, 50, 1).column(0).to_owned();
    let xtx = design.t().dot(&design);
    let xty = design.t().dot(&response);
    let a = nalgebra::DMatrix::from_fn(3, 3, |i, j| xtx[[i, j]]);
    let b = nalgebra::DVector::from_fn(3, |i, _| xty[i]);
    let want = a.lu().solve(&b).unwrap();
    let got = ols_fit(design.view(), response.view()).unwrap();
    for i in 0..3 {
        assert!((got[i] - want[i]).abs() <= 1e-8);
    }
}

#[test]
fn exact_linear_data_leaves_no_residual() {
    let mut g = rng(6);
    let design = gaussian(&mut g, 30, 4);
    let beta = Array1::from(vec![0.5, -2.0, 3.0, 0.25]);
    let y = design.dot(&beta);
    let fit = ols_fit(design.view(), y.view()).unwrap();
    let resid = &y - &design.dot(&fit);
    assert!(resid.iter().all(|v| v.abs() <= 1e-10));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn full_decomposition_matches_nalgebra(seed in any::<u64>()) {
        let s = symmetric(&mut rng(seed), 8);
        let (vals, vecs) = oracle_eig(&s);
        let got = sym_eig_topk(s.view(), 8).unwrap();
        for (j, want) in vals.iter().enumerate() {
            prop_assert!((got.eigenvalues[j] - want).abs() <= 1e-8);
        }
        // Vectors are only determined when eigenvalues are separated.
        prop_assume!(min_gap(&vals) > 1e-4);
        prop_assert!(max_abs_diff(&got.eigenvectors, &vecs) <= 1e-8);
    }

    #[test]
    fn eigenpairs_follow_conventions(seed in any::<u64>(), n in 2usize..12, k_frac in 0.0f64..1.0) {
        let s = symmetric(&mut rng(seed), n);
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let got = sym_eig_topk(s.view(), k).unwrap();
        let v = &got.eigenvectors;
        prop_assert!(got.eigenvalues.windows(2).into_iter().all(|w| w[0] >= w[1]));
        prop_assert!(max_abs_diff(&v.t().dot(v), &Array2::eye(k)) <= 1e-10);
        for col in v.columns() {
            let mut pivot = 0;
            for i in 0..col.len() {
                if col[i].abs() > col[pivot].abs() {
                    pivot = i;
                }
            }
            prop_assert!(col[pivot] > 0.0);
        }
    }

    #[test]
    fn full_decomposition_reconstructs_input(seed in any::<u64>(), n in 1usize..16) {
        let s = symmetric(&mut rng(seed), n);
        let got = sym_eig_topk(s.view(), n).unwrap();
        let lam = Array2::from_diag(&got.eigenvalues);
        let back = got.eigenvectors.dot(&lam).dot(&got.eigenvectors.t());
        let err: f64 = (&back - &s).iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-8 * norm.max(1e-300));
    }

    #[test]
    fn eigen_is_scale_equivariant(seed in any::<u64>(), c in 0.01f64..100.0) {
        let s = symmetric(&mut rng(seed), 7);
        let vals = sym_eigenvalues(s.view()).unwrap();
        prop_assume!(min_gap(vals.as_slice().unwrap()) > 1e-3);
        let base = sym_eig_topk(s.view(), 4).unwrap();
        let scaled = sym_eig_topk(s.mapv(|v| v * c).view(), 4).unwrap();
        for j in 0..4 {
            let want = c * base.eigenvalues[j];
            prop_assert!((scaled.eigenvalues[j] - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
        prop_assert!(max_abs_diff(&scaled.eigenvectors, &base.eigenvectors) <= 1e-10);
    }

    #[test]
    fn kron_mixed_product(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (a, b, c, d) = (gaussian(&mut g, 2, 2), gaussian(&mut g, 2, 2), gaussian(&mut g, 2, 2), gaussian(&mut g, 2, 2));
        let lhs = kron(a.view(), b.view()).dot(&kron(c.view(), d.view()));
        let rhs = kron(a.dot(&c).view(), b.dot(&d).view());
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn varimax_rotation_is_orthogonal(seed in any::<u64>(), p in 4usize..20, k in 2usize..4) {
        let l = gaussian(&mut rng(seed), p, k);
        let out = varimax(l.view(), 1000, 1e-8).unwrap();
        let mut o = Array2::zeros((k, k));
        for j in 0..k {
            o.column_mut(j).assign(&lstsq(l.view(), out.column(j)).unwrap());
        }
        prop_assert!(max_abs_diff(&o.t().dot(&o), &Array2::eye(k)) <= 1e-8);
        prop_assert!(varimax_criterion(out.view()) >= varimax_criterion(l.view()) - 1e-12);
    }
}
