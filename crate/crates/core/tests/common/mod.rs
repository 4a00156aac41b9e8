#![allow(dead_code)]

use matfactor::series::{FactorSeries, MatrixSeries};
use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

pub fn symmetric(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let a = gaussian(rng, n, n);
    (&a + &a.t()) / 2.0
}

/// `√p` times an orthonormal basis of a Gaussian `p×k` draw.
pub fn scaled_basis(rng: &mut ChaCha8Rng, p: usize, k: usize) -> Array2<f64> {
    let a = gaussian(rng, p, k);
    let q = matfactor::linalg::orthonormal_basis(a.view()).unwrap();
    q * (p as f64).sqrt()
}

pub struct Noiseless {
    pub x: MatrixSeries<f64>,
    pub r: Array2<f64>,
    pub c: Array2<f64>,
    pub factors: FactorSeries<f64>,
}

/// `X_t = R F_t Cᵀ` with Gaussian loadings and factors.
pub fn noiseless(seed: u64, t: usize, p1: usize, p2: usize, k1: usize, k2: usize) -> Noiseless {
    let mut g = rng(seed);
    let r = gaussian(&mut g, p1, k1);
    let c = gaussian(&mut g, p2, k2);
    let f = Array3::from_shape_simple_fn((t, k1, k2), || g.sample(StandardNormal));
    let mut x = Array3::zeros((t, p1, p2));
    for s in 0..t {
        let slice = r.dot(&f.index_axis(ndarray::Axis(0), s)).dot(&c.t());
        x.index_axis_mut(ndarray::Axis(0), s).assign(&slice);
    }
    Noiseless { x: MatrixSeries::new(x).unwrap(), r, c, factors: FactorSeries { factors: f } }
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Flips the sign of every column whose entry in `signs` is true.
pub fn flip_columns(a: &Array2<f64>, signs: &[bool]) -> Array2<f64> {
    let mut out = a.clone();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        if signs[j % signs.len()] {
            col.mapv_inplace(|v| -v);
        }
    }
    out
}
