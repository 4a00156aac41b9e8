//! Seeded synthetic matrix factor data.
//!
//! Every dataset is driven by a `ChaCha8Rng` seeded with `seed_from_u64`.
//! Draw order: row loadings (row-major), column loadings, the entry mean
//! matrix when it is random, then for each period the factor innovations
//! (column-major over `F_t`) followed by the noise innovations (row-major).

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Array3, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, thin_svd};
use crate::scalar::Scalar;
use crate::series::{FactorSeries, MatrixSeries};

/// How the true loadings are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LoadingMode {
    /// Entries i.i.d. Uniform(−1, 1).
    #[default]
    Uniform,
    /// Uniform draws replaced by `√p` times their left singular vectors.
    Orthonormalized,
}

/// Deterministic mean added to every observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "values")]
pub enum EntryMean {
    #[default]
    Zero,
    /// Entries drawn i.i.d. N(0, 1) once per dataset.
    StandardNormal,
    /// A fixed `p1×p2` matrix given row by row.
    Fixed(Vec<Vec<f64>>),
}

/// Full description of a synthetic matrix factor model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(rename = "T")]
    pub t: usize,
    pub p1: usize,
    pub p2: usize,
    pub k1: usize,
    pub k2: usize,
    /// AR coefficient of the vectorized factors.
    #[serde(default = "base_ar")]
    pub phi: f64,
    /// AR coefficient of the noise.
    #[serde(default = "base_ar")]
    pub psi: f64,
    /// Mean of the factor innovations, length `k1·k2` (column-major). Empty means zero.
    #[serde(default)]
    pub factor_mean: Vec<f64>,
    /// Innovation variances of the vectorized factors. Absent means identity.
    #[serde(default)]
    pub factor_cov_diag: Option<Vec<f64>>,
    #[serde(default)]
    pub entry_mean: EntryMean,
    #[serde(default)]
    pub loading_mode: LoadingMode,
    /// Off-diagonal of the noise row covariance; defaults to `1/p1`.
    #[serde(default)]
    pub noise_row_offdiag: Option<f64>,
    /// Off-diagonal of the noise column covariance; defaults to `1/p2`.
    #[serde(default)]
    pub noise_col_offdiag: Option<f64>,
    /// Multiplier applied to the noise column covariance.
    #[serde(default = "one")]
    pub noise_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn base_ar() -> f64 {
    0.1
}

impl SimulationSpec {
    /// Base design: unit-variance AR(1) factors, equicorrelated noise,
    /// uniform loadings.
    pub fn new(t: usize, p1: usize, p2: usize, k1: usize, k2: usize) -> Self {
        SimulationSpec {
            t,
            p1,
            p2,
            k1,
            k2,
            phi: base_ar(),
            psi: base_ar(),
            factor_mean: Vec::new(),
            factor_cov_diag: None,
            entry_mean: EntryMean::Zero,
            loading_mode: LoadingMode::Uniform,
            noise_row_offdiag: None,
            noise_col_offdiag: None,
            noise_scale: 1.0,
            seed: 0,
        }
    }

    /// `p1 = 20`, `T = p2 = n`, three factors on each side.
    pub fn setting_a(n: usize) -> Self {
        Self::new(n, 20, n, 3, 3)
    }

    /// `p2 = 20`, `T = p1 = n`.
    pub fn setting_b(n: usize) -> Self {
        Self::new(n, n, 20, 3, 3)
    }

    /// Setting A with factor innovations of mean one.
    pub fn setting_d(n: usize) -> Self {
        let mut s = Self::setting_a(n);
        s.factor_mean = vec![1.0; s.k1 * s.k2];
        s
    }

    /// Setting A plus an N(0, 1) entry mean drawn per dataset.
    pub fn setting_f(n: usize) -> Self {
        let mut s = Self::setting_a(n);
        s.entry_mean = EntryMean::StandardNormal;
        s
    }

    /// Serially independent factors with distinct row variances and
    /// orthonormalized loadings, for checking the limiting distribution of
    /// the row loadings.
    pub fn normality(t: usize, p1: usize, p2: usize) -> Self {
        let mut s = Self::new(t, p1, p2, 3, 3);
        s.phi = 0.0;
        s.psi = 0.0;
        s.loading_mode = LoadingMode::Orthonormalized;
        s.factor_cov_diag = Some([1.5, 1.0, 0.5].repeat(3));
        s
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn row_offdiag(&self) -> f64 {
        self.noise_row_offdiag.unwrap_or(1.0 / self.p1 as f64)
    }

    pub fn col_offdiag(&self) -> f64 {
        self.noise_col_offdiag.unwrap_or(1.0 / self.p2 as f64)
    }

    /// Row covariance `U_E` of the noise innovations.
    pub fn noise_row_cov(&self) -> Array2<f64> {
        equicorrelated(self.p1, self.row_offdiag(), 1.0)
    }

    /// Column covariance `V_E` of the noise innovations (including `noise_scale`).
    pub fn noise_col_cov(&self) -> Array2<f64> {
        equicorrelated(self.p2, self.col_offdiag(), self.noise_scale)
    }

    /// Innovation variances of `Vec(F_t)`.
    pub fn factor_variances(&self) -> Vec<f64> {
        self.factor_cov_diag.clone().unwrap_or_else(|| vec![1.0; self.k1 * self.k2])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.t == 0 || self.p1 == 0 || self.p2 == 0 || self.k1 == 0 || self.k2 == 0 {
            return bad("T, p1, p2, k1, k2 must be positive".into());
        }
        if self.k1 > self.p1 || self.k2 > self.p2 {
            return bad(format!(
                "factor numbers ({}, {}) exceed dimensions ({}, {})",
                self.k1, self.k2, self.p1, self.p2
            ));
        }
        if !(self.phi.abs() < 1.0) || !(self.psi.abs() < 1.0) {
            return bad("phi and psi must lie strictly inside (-1, 1)".into());
        }
        let kk = self.k1 * self.k2;
        if !self.factor_mean.is_empty() && self.factor_mean.len() != kk {
            return bad(format!("factor_mean must have length {kk}"));
        }
        if let Some(d) = &self.factor_cov_diag {
            if d.len() != kk {
                return bad(format!("factor_cov_diag must have length {kk}"));
            }
            if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return bad("factor_cov_diag entries must be positive".into());
            }
        }
        if let EntryMean::Fixed(rows) = &self.entry_mean {
            if rows.len() != self.p1 || rows.iter().any(|r| r.len() != self.p2) {
                return bad(format!("entry_mean must be {}x{}", self.p1, self.p2));
            }
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return bad("noise_scale must be nonnegative".into());
        }
        for (n, rho, side) in [(self.p1, self.row_offdiag(), "row"), (self.p2, self.col_offdiag(), "column")] {
            if !equicorrelated_is_pd(n, rho) {
                return Err(Error::Covariance(format!(
                    "{side} noise covariance with off-diagonal {rho} is not positive definite"
                )));
            }
        }
        Ok(())
    }
}

/// A synthetic dataset together with the quantities that generated it.
#[derive(Debug, Clone)]
pub struct SimulatedDataset<T> {
    pub observations: MatrixSeries<T>,
    pub true_r: Array2<T>,
    pub true_c: Array2<T>,
    pub true_factors: FactorSeries<T>,
    /// `R F_t Cᵀ` for every period.
    pub true_common: Array3<T>,
    /// Entry mean added to the observations (zero unless requested).
    pub entry_mean: Array2<T>,
}

fn equicorrelated(n: usize, rho: f64, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { scale } else { rho * scale })
}

fn equicorrelated_is_pd(n: usize, rho: f64) -> bool {
    n == 1 || (rho < 1.0 && 1.0 + rho * (n as f64 - 1.0) > 0.0)
}

/// Symmetric square root `a·I + b·11ᵀ` of the equicorrelated matrix with unit
/// diagonal and off-diagonal `rho`.
fn equicorrelated_sqrt(n: usize, rho: f64) -> (f64, f64) {
    if n == 1 {
        return (1.0, 0.0);
    }
    let a = (1.0 - rho).sqrt();
    let b = ((1.0 + rho * (n as f64 - 1.0)).sqrt() - a) / n as f64;
    (a, b)
}

fn standard_normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let mut z = Array2::<f64>::zeros((rows, cols));
    for v in z.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    z
}

fn draw_loading(rng: &mut ChaCha8Rng, p: usize, k: usize, mode: LoadingMode) -> Result<Array2<f64>> {
    let unif = Uniform::new(-1.0, 1.0).expect("valid uniform range");
    let mut l = Array2::<f64>::zeros((p, k));
    for v in l.iter_mut() {
        *v = rng.sample(unif);
    }
    if mode == LoadingMode::Orthonormalized {
        let u = thin_svd(l.view())?.u;
        l = u.mapv(|v| v * (p as f64).sqrt());
    }
    Ok(l)
}

/// Replaces `z` with `(ra I + rb 11ᵀ) z (ca I + cb 11ᵀ)`.
fn equicorrelated_sandwich(
    z: &mut Array2<f64>,
    row_sums: &mut [f64],
    col_sums: &mut [f64],
    ra: f64,
    rb: f64,
    ca: f64,
    cb: f64,
) {
    row_sums.fill(0.0);
    col_sums.fill(0.0);
    for (row, rs) in z.rows().into_iter().zip(row_sums.iter_mut()) {
        for (v, cs) in row.iter().zip(col_sums.iter_mut()) {
            *rs += v;
            *cs += v;
        }
    }
    let total: f64 = row_sums.iter().sum();
    for (mut row, rs) in z.rows_mut().into_iter().zip(row_sums.iter()) {
        let shift = cb * (ra * rs + rb * total);
        for (v, cs) in row.iter_mut().zip(col_sums.iter()) {
            *v = ca * (ra * *v + rb * cs) + shift;
        }
    }
}

/// Generates one dataset from `spec`.
///
/// Factor and noise chains start from their stationary laws, so no burn-in
/// is needed. Noise innovations use the symmetric square roots of the
/// equicorrelated covariances, which gives the same matrix-normal law as a
/// Cholesky construction in `O(p1·p2)` work per period.
pub fn generate_dataset<T: Scalar>(spec: &SimulationSpec) -> Result<SimulatedDataset<T>> {
    spec.validate()?;
    let SimulationSpec { t, p1, p2, k1, k2, phi, psi, .. } = *spec;
    let kk = k1 * k2;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let r = draw_loading(&mut rng, p1, k1, spec.loading_mode)?;
    let c = draw_loading(&mut rng, p2, k2, spec.loading_mode)?;
    let mean = match &spec.entry_mean {
        EntryMean::Zero => Array2::<f64>::zeros((p1, p2)),
        EntryMean::StandardNormal => standard_normal_matrix(&mut rng, p1, p2),
        EntryMean::Fixed(rows) => Array2::from_shape_fn((p1, p2), |(i, j)| rows[i][j]),
    };

    let innov_mean: Vec<f64> = if spec.factor_mean.is_empty() { vec![0.0; kk] } else { spec.factor_mean.clone() };
    let innov_sd: Vec<f64> = spec.factor_variances().iter().map(|v| v.sqrt()).collect();
    let f_scale = (1.0 - phi * phi).sqrt();
    let e_scale = (1.0 - psi * psi).sqrt();
    let stationary_mean: Vec<f64> = innov_mean.iter().map(|m| m * f_scale / (1.0 - phi)).collect();
    let (ra, rb) = equicorrelated_sqrt(p1, spec.row_offdiag());
    let (ca, cb) = equicorrelated_sqrt(p2, spec.col_offdiag());
    let col_mult = spec.noise_scale.sqrt();

    let mut factors = Array3::<f64>::zeros((t, k1, k2));
    let mut x = Array3::<T>::zeros((t, p1, p2));
    let mut common = Array3::<T>::zeros((t, p1, p2));
    let mut prev_f = vec![0.0; kk];
    let mut f_vec = vec![0.0; kk];
    let mut noise = Array2::<f64>::zeros((p1, p2));
    let mut z = Array2::<f64>::zeros((p1, p2));
    let mut sc = Array2::<f64>::zeros((p1, p2));
    let mut row_sums = vec![0.0; p1];
    let mut col_sums = vec![0.0; p2];
    for s in 0..t {
        for idx in 0..kk {
            let draw: f64 = rng.sample(StandardNormal);
            f_vec[idx] = if s == 0 {
                stationary_mean[idx] + innov_sd[idx] * draw
            } else {
                phi * prev_f[idx] + f_scale * (innov_mean[idx] + innov_sd[idx] * draw)
            };
        }
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        equicorrelated_sandwich(&mut z, &mut row_sums, &mut col_sums, ra, rb, ca * col_mult, cb * col_mult);
        if s == 0 {
            noise.assign(&z);
        } else {
            noise.zip_mut_with(&z, |e, &u| *e = psi * *e + e_scale * u);
        }
        let mut f = factors.index_axis_mut(Axis(0), s);
        for j in 0..k2 {
            for i in 0..k1 {
                f[[i, j]] = f_vec[j * k1 + i];
            }
        }
        general_mat_mul(1.0, &r.dot(&f), &c.t(), 0.0, &mut sc);
        ndarray::Zip::from(x.index_axis_mut(Axis(0), s))
            .and(common.index_axis_mut(Axis(0), s))
            .and(&sc)
            .and(&mean)
            .and(&noise)
            .for_each(|o, cm, &a, &m, &e| {
                *o = T::lit(a + m + e);
                *cm = T::lit(a);
            });
        std::mem::swap(&mut prev_f, &mut f_vec);
    }

    let cast2 = |a: &Array2<f64>| a.mapv(T::lit);
    let cast3 = |a: &Array3<f64>| a.mapv(T::lit);
    Ok(SimulatedDataset {
        observations: MatrixSeries::new(x)?,
        true_r: cast2(&r),
        true_c: cast2(&c),
        true_factors: FactorSeries { factors: cast3(&factors) },
        true_common: common,
        entry_mean: cast2(&mean),
    })
}

/// One draw from the matrix normal law `MN(0, U, V)`, i.e. `Vec` has
/// covariance `V ⊗ U`, built as `A Z Bᵀ` from Cholesky factors.
pub fn matrix_normal_sample<T: Scalar, R: Rng + ?Sized>(
    row_cov: ArrayView2<T>,
    col_cov: ArrayView2<T>,
    rng: &mut R,
) -> Result<Array2<T>> {
    let a = cholesky(row_cov)?;
    let b = cholesky(col_cov)?;
    let (p1, p2) = (a.nrows(), b.nrows());
    let mut z = Array2::<T>::zeros((p1, p2));
    for v in z.iter_mut() {
        let d: f64 = rng.sample(StandardNormal);
        *v = T::lit(d);
    }
    Ok(a.dot(&z).dot(&b.t()))
}

/// A scalar series driven by lagged factors:
/// `y[t+1] = intercept + ar·y[t] + beta·Vec(F_t) + noise_sd·ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedTarget {
    pub beta: Vec<f64>,
    #[serde(default)]
    pub intercept: f64,
    #[serde(default)]
    pub ar: f64,
    #[serde(default = "one")]
    pub noise_sd: f64,
}

/// Draws a [`PlantedTarget`] series over the periods of `factors`. The
/// first value is the unconditional mean plus noise.
pub fn planted_target(factors: &FactorSeries<f64>, target: &PlantedTarget, seed: u64) -> Result<Array1<f64>> {
    let (t, k1, k2) = factors.dims();
    if target.beta.len() != k1 * k2 {
        return Err(Error::Config(format!(
            "target beta has length {} but there are {} factors",
            target.beta.len(),
            k1 * k2
        )));
    }
    if !(target.ar.abs() < 1.0) || !(target.noise_sd >= 0.0) {
        return Err(Error::Config("target needs |ar| < 1 and noise_sd >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Array1::<f64>::zeros(t);
    let draw = |rng: &mut ChaCha8Rng| -> f64 { target.noise_sd * rng.sample::<f64, _>(StandardNormal) };
    y[0] = target.intercept / (1.0 - target.ar) + draw(&mut rng);
    for s in 1..t {
        let signal: f64 = factors.vec_at(s - 1).iter().zip(&target.beta).map(|(f, b)| f * b).sum();
        y[s] = target.intercept + target.ar * y[s - 1] + signal + draw(&mut rng);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_square_root_recovers_covariance() {
        for (n, rho) in [(5usize, 0.2f64), (20, 0.05), (3, -0.3)] {
            let (a, b) = equicorrelated_sqrt(n, rho);
            let s = Array2::<f64>::eye(n) * a + Array2::<f64>::ones((n, n)) * b;
            let cov = s.dot(&s);
            let target = equicorrelated(n, rho, 1.0);
            assert!((cov - target).iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn fast_equicorrelated_products_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = standard_normal_matrix(&mut rng, 4, 6);
        let (ra, rb, ca, cb) = (0.7, 0.05, 1.3, -0.1);
        let left = Array2::<f64>::eye(4) * ra + Array2::<f64>::ones((4, 4)) * rb;
        let right = Array2::<f64>::eye(6) * ca + Array2::<f64>::ones((6, 6)) * cb;
        let mut fast = z.clone();
        equicorrelated_sandwich(&mut fast, &mut [0.0; 4], &mut [0.0; 6], ra, rb, ca, cb);
        let dense = left.dot(&z).dot(&right);
        assert!((fast - dense).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn identical_seed_is_bit_identical() {
        let spec = SimulationSpec::setting_f(30).with_seed(11);
        let a = generate_dataset::<f64>(&spec).unwrap();
        let b = generate_dataset::<f64>(&spec).unwrap();
        assert_eq!(a.observations, b.observations);
        assert_eq!(a.true_r, b.true_r);
    }

    #[test]
    fn orthonormalized_loadings_follow_scaling() {
        let spec = SimulationSpec::normality(10, 20, 15);
        let d = generate_dataset::<f64>(&spec).unwrap();
        let g = d.true_r.t().dot(&d.true_r) / 20.0;
        assert!((g - Array2::<f64>::eye(3)).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn invalid_noise_covariance_is_rejected() {
        let mut spec = SimulationSpec::setting_a(20);
        spec.noise_row_offdiag = Some(1.5);
        assert!(matches!(generate_dataset::<f64>(&spec), Err(Error::Covariance(_))));
        spec.noise_row_offdiag = None;
        spec.phi = 1.0;
        assert!(matches!(generate_dataset::<f64>(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn spec_roundtrips_through_toml() {
        let spec = SimulationSpec::normality(50, 20, 50).with_seed(9);
        let text = toml::to_string(&spec).unwrap();
        let back: SimulationSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn planted_target_follows_its_recursion() {
        let data = generate_dataset::<f64>(&SimulationSpec::new(40, 5, 4, 2, 1).with_seed(2)).unwrap();
        let target = PlantedTarget { beta: vec![1.0, -0.5], intercept: 0.3, ar: 0.5, noise_sd: 0.0 };
        let y = planted_target(&data.true_factors, &target, 9).unwrap();
        assert!((y[0] - 0.6).abs() < 1e-15);
        for s in 1..40 {
            let f = data.true_factors.vec_at(s - 1);
            let expected = 0.3 + 0.5 * y[s - 1] + f[0] - 0.5 * f[1];
            assert!((y[s] - expected).abs() < 1e-12);
        }
    }
}
