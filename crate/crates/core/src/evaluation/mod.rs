//! Accuracy metrics, convergence-rate checks, normality diagnostics, rolling
//! validation and factor-augmented forecasting.

mod faar;
mod normality;
mod rolling;

pub use faar::{faar_predict, vector_pca_factors, FaarModelSpec, FaarPrediction, FactorSource};
pub use normality::{
    asymptotic_row_variances, normality_comparison, normality_diagnostic, Alignment, NormalityComparison,
    NormalityEstimator, NormalityReport, NormalitySample,
};
pub use rolling::{rolling_validate, RollingPeriod, RollingReport};

use ndarray::{Array1, ArrayView1, ArrayView2, ArrayView3};

use crate::error::{Error, Result};
use crate::linalg::{lstsq, orthonormal_basis};
use crate::scalar::Scalar;

/// Distance between the column spaces of `a` (`p×kA`) and `b` (`p×kB`):
/// `√(1 − ‖QaᵀQb‖²_F / max(kA, kB))` for orthonormal bases `Qa`, `Qb`.
///
/// Evaluated as the residual of projecting the smaller basis onto the larger
/// one, so spans that agree to rounding give distances near machine
/// precision rather than its square root.
pub fn space_distance<T: Scalar>(a: ArrayView2<T>, b: ArrayView2<T>) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "space distance between {}-row and {}-row matrices",
            a.nrows(),
            b.nrows()
        )));
    }
    let qa = orthonormal_basis(a)?;
    let qb = orthonormal_basis(b)?;
    let (small, large) = if qa.ncols() <= qb.ncols() { (qa, qb) } else { (qb, qa) };
    let coef = large.t().dot(&small);
    let resid = &small - &large.dot(&coef);
    let resid_sq: f64 = resid.iter().map(|v| v.as_f64() * v.as_f64()).sum();
    let k_large = large.ncols() as f64;
    let d2 = ((k_large - small.ncols() as f64) + resid_sq) / k_large;
    Ok(d2.clamp(0.0, 1.0).sqrt())
}

/// `Σ_t ‖Ŝ_t − S_t‖²_F / (T p1 p2)`.
pub fn common_component_mse<T: Scalar>(estimate: ArrayView3<T>, truth: ArrayView3<T>) -> Result<f64> {
    if estimate.dim() != truth.dim() {
        return Err(Error::Dimension(format!(
            "common components have shapes {:?} and {:?}",
            estimate.dim(),
            truth.dim()
        )));
    }
    let n = estimate.len();
    if n == 0 {
        return Err(Error::Dimension("empty common component tensor".into()));
    }
    let sum: f64 = estimate
        .iter()
        .zip(truth.iter())
        .map(|(a, b)| {
            let d = (*a - *b).as_f64();
            d * d
        })
        .sum();
    Ok(sum / n as f64)
}

/// One grid point of a convergence-rate study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub t: usize,
    pub p1: usize,
    pub p2: usize,
    pub mean_distance: f64,
}

/// Which loading the distances refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Row,
    Column,
}

/// OLS slope of `log(mean_distance)` on `log √(T·p2)` (row side) or
/// `log √(T·p1)` (column side).
pub fn rate_slope_check(points: &[RatePoint], side: Side) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!("rate slope needs at least 3 points, got {}", points.len())));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for p in points {
        if !(p.mean_distance > 0.0) || !p.mean_distance.is_finite() {
            return Err(Error::InvalidInput(format!("mean distance must be positive, got {}", p.mean_distance)));
        }
        let other = match side {
            Side::Row => p.p2,
            Side::Column => p.p1,
        };
        xs.push(0.5 * ((p.t * other) as f64).ln());
        ys.push(p.mean_distance.ln());
    }
    ols_slope(&xs, &ys)
}

/// Slope of the least-squares line through `(x, y)` pairs.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData("slope needs at least two paired points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all abscissae are equal".into()));
    }
    Ok(sxy / sxx)
}

/// Ordinary least squares by Householder QR.
pub fn ols_fit<T: Scalar>(design: ArrayView2<T>, response: ArrayView1<T>) -> Result<Array1<T>> {
    lstsq(design, response)
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
