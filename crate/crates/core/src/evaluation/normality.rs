//! Limiting-distribution check for one row of the estimated row loading.
//!
//! Each replication draws a dataset with serially independent factors and
//! noise, estimates the row loading, aligns it with the truth and
//! standardizes the error of row `i` by its asymptotic covariance
//! `Σ₁⁻¹ V Σ₁⁻¹`, where `Σ₁ = E[F_t (CᵀC/p2) F_tᵀ]` and `V` is the covariance
//! of `F_t Cᵀ e_{t,i} / √p2`.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimators::{initial_estimate, projected_estimate, LoadingPair};
use crate::linalg::polar_orthogonal;
use crate::replicate::run_replications;
use crate::series::FactorSeries;
use crate::simulate::{generate_dataset, EntryMean, LoadingMode, SimulatedDataset, SimulationSpec};

/// How the estimated loading is rotated onto the truth before differencing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Orthogonal Procrustes fit of the estimate to the true loading.
    #[default]
    Procrustes,
    /// The estimator's own population rotation, built from the true factors
    /// and loadings and the estimated eigenvalues.
    Formula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalityEstimator {
    Initial,
    Projected,
}

/// Standardized error vector of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalitySample {
    pub seed: u64,
    pub standardized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityReport {
    pub estimator: NormalityEstimator,
    pub alignment: Alignment,
    pub row_index: usize,
    pub standardized_samples: Vec<NormalitySample>,
    /// First coordinates of the standardized samples.
    pub pooled: Vec<f64>,
    pub ks_statistic: f64,
    /// 5% critical value `1.36/√n` of the Kolmogorov–Smirnov statistic.
    pub ks_critical: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub failed: usize,
}

impl NormalityReport {
    pub fn passes_ks(&self) -> bool {
        self.ks_statistic < self.ks_critical
    }

    fn from_samples(
        estimator: NormalityEstimator,
        alignment: Alignment,
        row_index: usize,
        samples: Vec<NormalitySample>,
        failed: usize,
    ) -> Result<Self> {
        let pooled: Vec<f64> = samples.iter().map(|s| s.standardized[0]).collect();
        if pooled.is_empty() {
            return Err(Error::InsufficientData("no successful replications".into()));
        }
        let (skewness, excess_kurtosis) = shape_moments(&pooled);
        Ok(NormalityReport {
            estimator,
            alignment,
            row_index,
            ks_statistic: ks_normal_statistic(&pooled),
            ks_critical: 1.36 / (pooled.len() as f64).sqrt(),
            skewness,
            excess_kurtosis,
            pooled,
            standardized_samples: samples,
            failed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityComparison {
    pub initial: NormalityReport,
    pub projected: NormalityReport,
}

fn check_spec(spec: &SimulationSpec, row_index: usize) -> Result<()> {
    spec.validate()?;
    let mut problems = Vec::new();
    if spec.loading_mode != LoadingMode::Orthonormalized {
        problems.push("loadings must be orthonormalized");
    }
    if spec.phi != 0.0 || spec.psi != 0.0 {
        problems.push("factors and noise must be serially independent (phi = psi = 0)");
    }
    if spec.factor_mean.iter().any(|m| *m != 0.0) || spec.entry_mean != EntryMean::Zero {
        problems.push("factor and entry means must be zero");
    }
    if row_index >= spec.p1 {
        problems.push("row index outside the row dimension");
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("normality diagnostic: {}", problems.join("; "))))
    }
}

/// Diagonal of the asymptotic covariance of `√(T p2)(R̃_i − HᵀR_i)` for
/// serially independent factors with independent entries.
///
/// The noise column covariance is taken without `noise_scale`, so shrinking
/// the noise shrinks the standardized errors proportionally.
pub fn asymptotic_row_variances(spec: &SimulationSpec, true_c: ArrayView2<f64>, row_index: usize) -> Vec<f64> {
    let (k1, k2, p2) = (spec.k1, spec.k2, spec.p2 as f64);
    let d = spec.factor_variances();
    let mut nominal = spec.clone();
    nominal.noise_scale = 1.0;
    let v_e = nominal.noise_col_cov();
    let u_ii = nominal.noise_row_cov()[[row_index, row_index]];
    let ctc = true_c.t().dot(&true_c) / p2;
    let a = true_c.t().dot(&v_e).dot(&true_c) / p2;
    (0..k1)
        .map(|i| {
            let sigma1: f64 = (0..k2).map(|j| d[j * k1 + i] * ctc[[j, j]]).sum();
            let v: f64 = u_ii * (0..k2).map(|j| d[j * k1 + i] * a[[j, j]]).sum::<f64>();
            v / (sigma1 * sigma1)
        })
        .collect()
}

/// `Σ_t F_t B Bᵀ F_tᵀ`.
fn factor_sandwich(f: &FactorSeries<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (_, k1, _) = f.dims();
    let mut g = Array2::<f64>::zeros((k1, k1));
    for t in 0..f.dims().0 {
        let fb = f.slice(t).dot(b);
        g = g + fb.dot(&fb.t());
    }
    g
}

fn formula_rotation(
    data: &SimulatedDataset<f64>,
    estimate: ArrayView2<f64>,
    eigenvalues: &Array1<f64>,
    projection: Option<ArrayView2<f64>>,
) -> Array2<f64> {
    let (t, p1, p2) = data.observations.dims();
    let c = &data.true_c;
    let (b, scale) = match projection {
        None => (c.t().to_owned(), (t * p1 * p2) as f64),
        Some(c_hat) => (c.t().dot(&c_hat), (t * p1) as f64 * (p2 * p2) as f64),
    };
    let g = factor_sandwich(&data.true_factors, &b);
    let lam_inv = Array2::from_diag(&eigenvalues.mapv(|v| 1.0 / v));
    g.dot(&data.true_r.t().dot(&estimate)).dot(&lam_inv) / scale
}

fn procrustes_rotation(true_r: &Array2<f64>, estimate: ArrayView2<f64>) -> Result<Array2<f64>> {
    polar_orthogonal(true_r.t().dot(&estimate).view())
}

fn standardized_error(
    data: &SimulatedDataset<f64>,
    estimate: ArrayView2<f64>,
    rotation: &Array2<f64>,
    variances: &[f64],
    row_index: usize,
) -> Vec<f64> {
    let (t, _, p2) = data.observations.dims();
    let root = ((t * p2) as f64).sqrt();
    let aligned = rotation.t().dot(&data.true_r.row(row_index));
    estimate
        .row(row_index)
        .iter()
        .zip(aligned.iter())
        .zip(variances)
        .map(|((e, a), v)| root * (e - a) / v.sqrt())
        .collect()
}

fn replicate_once(
    spec: &SimulationSpec,
    row_index: usize,
    alignment: Alignment,
    seed: u64,
) -> Result<(NormalitySample, NormalitySample)> {
    let mut s = spec.clone();
    s.seed = seed;
    let data = generate_dataset::<f64>(&s)?;
    let x = &data.observations;
    let init = initial_estimate(x, s.k1, s.k2)?;
    let pe = projected_estimate(x, s.k1, s.k2, &init)?;
    let variances = asymptotic_row_variances(&s, data.true_c.view(), row_index);
    let sample = |pair: &LoadingPair<f64>, projection: Option<ArrayView2<f64>>| -> Result<NormalitySample> {
        let est = pair.r.view();
        let rotation = match alignment {
            Alignment::Procrustes => procrustes_rotation(&data.true_r, est)?,
            Alignment::Formula => formula_rotation(&data, est, &pair.eigvals_row, projection),
        };
        Ok(NormalitySample { seed, standardized: standardized_error(&data, est, &rotation, &variances, row_index) })
    };
    Ok((sample(&init, None)?, sample(&pe, Some(init.c.view()))?))
}

/// Runs the diagnostic for both estimators on shared datasets. Replication
/// `i` uses seed `spec.seed + i`.
pub fn normality_comparison(
    spec: &SimulationSpec,
    row_index: usize,
    n_reps: usize,
    alignment: Alignment,
) -> Result<NormalityComparison> {
    check_spec(spec, row_index)?;
    let reps = run_replications(n_reps, spec.seed, |seed| replicate_once(spec, row_index, alignment, seed))?;
    let failed = reps.failed.len();
    let (init, pe): (Vec<_>, Vec<_>) = reps.results.into_iter().map(|(_, pair)| pair).unzip();
    Ok(NormalityComparison {
        initial: NormalityReport::from_samples(NormalityEstimator::Initial, alignment, row_index, init, failed)?,
        projected: NormalityReport::from_samples(NormalityEstimator::Projected, alignment, row_index, pe, failed)?,
    })
}

/// Diagnostic for a single estimator.
pub fn normality_diagnostic(
    spec: &SimulationSpec,
    row_index: usize,
    n_reps: usize,
    estimator: NormalityEstimator,
    alignment: Alignment,
) -> Result<NormalityReport> {
    let both = normality_comparison(spec, row_index, n_reps, alignment)?;
    Ok(match estimator {
        NormalityEstimator::Initial => both.initial,
        NormalityEstimator::Projected => both.projected,
    })
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and the standard normal.
pub fn ks_normal_statistic(samples: &[f64]) -> f64 {
    let normal = Normal::standard();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = normal.cdf(x);
            ((i + 1) as f64 / n - cdf).max(cdf - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Sample skewness and excess kurtosis (moment estimators).
pub fn shape_moments(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m = |p: i32| samples.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
    let m2 = m(2);
    if !(m2 > 0.0) {
        return (0.0, 0.0);
    }
    (m(3) / m2.powf(1.5), m(4) / (m2 * m2) - 3.0)
}
