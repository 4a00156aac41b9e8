//! Rolling out-of-sample validation of fitted loading spaces.

use log::warn;
use ndarray::Axis;

use super::space_distance;
use crate::error::{Error, Result};
use crate::estimators::{estimate_loadings, project_onto_spans, LoadingPair, Method};
use crate::linalg::kron;
use crate::scalar::Scalar;
use crate::series::MatrixSeries;

/// Metrics of one evaluation period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollingPeriod {
    /// Index of the period within the series (0-based).
    pub period: usize,
    pub mse: f64,
    pub rho: f64,
    /// Drift of the fitted loading space from the previous evaluation
    /// period; absent for the first one.
    pub v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingReport {
    pub periods: Vec<RollingPeriod>,
    pub mean_mse: f64,
    pub mean_rho: f64,
    /// Mean of `v` over the periods where it is defined (NaN if none).
    pub mean_v: f64,
}

/// Fits loadings on the `bandwidth` periods before each evaluation period and
/// scores the projection of that period's observations onto the fitted
/// spans.
///
/// The series is cut into consecutive periods of `period_length`
/// observations (a trailing partial period is ignored). For evaluation
/// period `e`:
/// `mse = Σ‖Ŷ − Y‖² / (period_length·p1·p2)`,
/// `rho = Σ‖Ŷ − Y‖² / Σ‖Y − Ȳ‖²` with `Ȳ` the period mean, and
/// `v` = distance between `Ĉ_e ⊗ R̂_e` and the previous period's product.
pub fn rolling_validate<T: Scalar>(
    x: &MatrixSeries<T>,
    period_length: usize,
    bandwidth: usize,
    k1: usize,
    k2: usize,
    method: Method,
) -> Result<RollingReport> {
    let (t, p1, p2) = x.dims();
    if period_length == 0 || bandwidth == 0 {
        return Err(Error::InvalidInput("period length and bandwidth must be positive".into()));
    }
    let n_periods = t / period_length;
    if n_periods <= bandwidth {
        return Err(Error::InsufficientData(format!(
            "{t} observations give {n_periods} periods of length {period_length}; \
             need more than the bandwidth {bandwidth}"
        )));
    }
    if t % period_length != 0 {
        warn!("ignoring {} trailing observations that do not fill a period", t % period_length);
    }
    let mut periods = Vec::with_capacity(n_periods - bandwidth);
    let mut previous: Option<LoadingPair<T>> = None;
    for e in bandwidth..n_periods {
        let train = x.window((e - bandwidth) * period_length, e * period_length)?;
        let fit = estimate_loadings(&train, k1, k2, method)?;
        let held = x.window(e * period_length, (e + 1) * period_length)?;
        let recon = project_onto_spans(&held, fit.r.view(), fit.c.view())?;
        let y = held.view();
        let mean = y.mean_axis(Axis(0)).expect("non-empty period");
        let mut resid = 0.0;
        let mut total = 0.0;
        for s in 0..period_length {
            for ((a, b), m) in recon.index_axis(Axis(0), s).iter().zip(y.index_axis(Axis(0), s).iter()).zip(mean.iter())
            {
                let d = (*a - *b).as_f64();
                resid += d * d;
                let c = (*b - *m).as_f64();
                total += c * c;
            }
        }
        let mse = resid / (period_length * p1 * p2) as f64;
        let rho = if total > 0.0 {
            resid / total
        } else if resid > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        let v = match &previous {
            Some(prev) => Some(space_distance(
                kron(fit.c.view(), fit.r.view()).view(),
                kron(prev.c.view(), prev.r.view()).view(),
            )?),
            None => None,
        };
        periods.push(RollingPeriod { period: e, mse, rho, v });
        previous = Some(fit);
    }
    let n = periods.len() as f64;
    let vs: Vec<f64> = periods.iter().filter_map(|p| p.v).collect();
    Ok(RollingReport {
        mean_mse: periods.iter().map(|p| p.mse).sum::<f64>() / n,
        mean_rho: periods.iter().map(|p| p.rho).sum::<f64>() / n,
        mean_v: if vs.is_empty() { f64::NAN } else { vs.iter().sum::<f64>() / vs.len() as f64 },
        periods,
    })
}
