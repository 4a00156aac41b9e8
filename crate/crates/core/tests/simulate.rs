mod common;

use common::rng;
use matfactor::simulate::{generate_dataset, matrix_normal_sample, EntryMean, SimulationSpec};
use ndarray::{array, Array2};

fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let var: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    let cov: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    cov / var
}

fn factor_coordinates(spec: &SimulationSpec) -> Vec<Vec<f64>> {
    let ds = generate_dataset::<f64>(spec).unwrap();
    let kk = spec.k1 * spec.k2;
    (0..kk).map(|idx| (0..spec.t).map(|t| ds.true_factors.vec_at(t)[idx]).collect()).collect()
}

#[test]
fn independent_factors_are_serially_uncorrelated() {
    let mut spec = SimulationSpec::new(5000, 4, 4, 2, 2).with_seed(1);
    spec.phi = 0.0;
    spec.psi = 0.0;
    let bound = 4.0 / 5000f64.sqrt();
    for series in factor_coordinates(&spec) {
        assert!(lag1_autocorrelation(&series).abs() <= bound);
    }
}

#[test]
fn default_factors_have_identity_covariance() {
    let spec = SimulationSpec::new(5000, 4, 4, 2, 2).with_seed(2);
    let coords = factor_coordinates(&spec);
    for (a, xa) in coords.iter().enumerate() {
        for (b, xb) in coords.iter().enumerate() {
            let cov = xa.iter().zip(xb).map(|(u, v)| u * v).sum::<f64>() / 5000.0;
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((cov - want).abs() <= 0.1, "({a},{b}) {cov}");
        }
    }
}

#[test]
fn unit_innovation_mean_follows_the_ar_mean_recursion() {
    let mut spec = SimulationSpec::setting_d(5000).with_seed(3);
    spec.p1 = 4;
    spec.p2 = 4;
    let phi: f64 = spec.phi;
    let want = (1.0 - phi * phi).sqrt() / (1.0 - phi);
    let bound = 4.0 / 5000f64.sqrt();
    for series in factor_coordinates(&spec) {
        let m = series.iter().sum::<f64>() / series.len() as f64;
        assert!((m - want).abs() <= bound, "{m} vs {want}");
    }
}

#[test]
fn first_period_is_already_stationary() {
    // Across many seeds the first factor draw has unit variance, as does a
    // draw deep inside the chain.
    let n = 3000;
    let mut first = Vec::with_capacity(n);
    let mut late = Vec::with_capacity(n);
    for seed in 0..n as u64 {
        let mut spec = SimulationSpec::new(30, 3, 3, 1, 1).with_seed(seed);
        spec.phi = 0.8;
        let ds = generate_dataset::<f64>(&spec).unwrap();
        first.push(ds.true_factors.vec_at(0)[0]);
        late.push(ds.true_factors.vec_at(29)[0]);
    }
    let var = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
    // Variance of a sample variance of n unit normals has SD √(2/n) ≈ 0.026.
    assert!((var(&first) - 1.0).abs() <= 0.1);
    assert!((var(&first) - var(&late)).abs() <= 0.15);
}

#[test]
fn noise_is_centred_on_the_entry_mean_and_white() {
    let mut spec = SimulationSpec::new(2000, 3, 4, 1, 1).with_seed(4);
    spec.psi = 0.0;
    spec.entry_mean = EntryMean::StandardNormal;
    let ds = generate_dataset::<f64>(&spec).unwrap();
    let noise = ds.observations.view().to_owned() - &ds.true_common;
    let bound = 4.0 / 2000f64.sqrt();
    for i in 0..3 {
        for j in 0..4 {
            let series: Vec<f64> = (0..2000).map(|t| noise[[t, i, j]]).collect();
            let m = series.iter().sum::<f64>() / 2000.0;
            assert!((m - ds.entry_mean[[i, j]]).abs() <= bound);
            assert!(lag1_autocorrelation(&series).abs() <= bound);
        }
    }
}

#[test]
fn identical_specs_give_identical_datasets() {
    let spec = SimulationSpec::setting_f(25).with_seed(11);
    let a = generate_dataset::<f64>(&spec).unwrap();
    let b = generate_dataset::<f64>(&spec).unwrap();
    assert_eq!(a.observations, b.observations);
    assert_eq!(a.true_r, b.true_r);
    assert_eq!(a.true_factors, b.true_factors);
}

#[test]
fn identity_matrix_normal_has_unit_variance() {
    let eye = Array2::<f64>::eye(2);
    let mut g = rng(5);
    let n = 100_000;
    let mut ss = 0.0;
    for _ in 0..n {
        let z = matrix_normal_sample(eye.view(), eye.view(), &mut g).unwrap();
        ss += z.iter().map(|v| v * v).sum::<f64>();
    }
    let var = ss / (4 * n) as f64;
    assert!((var - 1.0).abs() <= 0.02);
}

#[test]
fn matrix_normal_covariance_is_the_kronecker_product() {
    let u = array![[1.0, 0.5], [0.5, 1.0]];
    let v = Array2::<f64>::eye(2);
    let mut g = rng(6);
    let n = 100_000;
    let mut cov = Array2::<f64>::zeros((4, 4));
    for _ in 0..n {
        let z = matrix_normal_sample(u.view(), v.view(), &mut g).unwrap();
        // Column-major vectorization.
        let vecz = [z[[0, 0]], z[[1, 0]], z[[0, 1]], z[[1, 1]]];
        for a in 0..4 {
            for b in 0..4 {
                cov[[a, b]] += vecz[a] * vecz[b];
            }
        }
    }
    cov /= n as f64;
    let want = matfactor::linalg::kron(v.view(), u.view());
    for (got, want) in cov.iter().zip(want.iter()) {
        assert!((got - want).abs() <= 0.02, "{got} vs {want}");
    }
    let mut g1 = rng(7);
    let mut g2 = rng(7);
    assert_eq!(
        matrix_normal_sample(u.view(), v.view(), &mut g1).unwrap(),
        matrix_normal_sample(u.view(), v.view(), &mut g2).unwrap()
    );
}
