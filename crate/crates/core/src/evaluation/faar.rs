//! One-step-ahead autoregressive forecasts augmented with estimated factors.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::ols_fit;
use crate::error::{Error, Result};
use crate::estimators::{estimate_loadings, factors_from, Method};
use crate::linalg::sym_eig_topk;
use crate::series::MatrixSeries;

/// Where the extra regressors come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorSource {
    /// Plain AR(1).
    None,
    /// Vector factors of the target's own row of the panel.
    VectorOwnRow,
    /// Vector factors of the vectorized panel.
    VectorPanel,
    /// Matrix factors `Vec(F̃_t)` from the given loading estimator.
    Matrix(Method),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaarModelSpec {
    pub model_id: u8,
    pub source: FactorSource,
    pub k1: usize,
    pub k2: usize,
}

impl FaarModelSpec {
    pub fn model1() -> Self {
        FaarModelSpec { model_id: 1, source: FactorSource::None, k1: 0, k2: 0 }
    }

    /// `k` vector factors of the target's own row.
    pub fn model2(k: usize) -> Self {
        FaarModelSpec { model_id: 2, source: FactorSource::VectorOwnRow, k1: 1, k2: k }
    }

    /// `k` vector factors of the vectorized panel.
    pub fn model3(k: usize) -> Self {
        FaarModelSpec { model_id: 3, source: FactorSource::VectorPanel, k1: 1, k2: k }
    }

    pub fn model4(k1: usize, k2: usize, method: Method) -> Self {
        FaarModelSpec { model_id: 4, source: FactorSource::Matrix(method), k1, k2 }
    }

    /// Number of factor regressors.
    pub fn n_factors(&self) -> usize {
        match self.source {
            FactorSource::None => 0,
            _ => self.k1 * self.k2,
        }
    }

    pub fn label(&self) -> String {
        match self.source {
            FactorSource::Matrix(m) => format!("model4_{m}"),
            _ => format!("model{}", self.model_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaarPrediction {
    /// Forecast origins `t`; each prediction targets `y[t + 1]`.
    pub origins: Vec<usize>,
    pub predictions: Vec<f64>,
    pub actual: Vec<f64>,
    pub mean_abs_error: f64,
}

/// Principal-component factors of a `T×N` panel: `T×k` scores spanning the
/// leading eigenspace of the panel's second moment.
pub fn vector_pca_factors(panel: ArrayView2<f64>, k: usize) -> Result<Array2<f64>> {
    let (t, n) = panel.dim();
    if k == 0 || k > t.min(n) {
        return Err(Error::Dimension(format!("cannot extract {k} factors from a {t}x{n} panel")));
    }
    if n <= t {
        let cov = panel.t().dot(&panel) / (t * n) as f64;
        let load = sym_eig_topk(cov.view(), k)?.eigenvectors * (n as f64).sqrt();
        Ok(panel.dot(&load) / n as f64)
    } else {
        let dual = panel.dot(&panel.t()) / (t * n) as f64;
        Ok(sym_eig_topk(dual.view(), k)?.eigenvectors * (t as f64).sqrt())
    }
}

fn window_factors(panel: &MatrixSeries<f64>, own_row: usize, spec: &FaarModelSpec) -> Result<Option<Array2<f64>>> {
    let (t, p1, p2) = panel.dims();
    match spec.source {
        FactorSource::None => Ok(None),
        FactorSource::VectorOwnRow => {
            let own = Array2::from_shape_fn((t, p2), |(s, j)| panel.slice(s)[[own_row, j]]);
            vector_pca_factors(own.view(), spec.n_factors()).map(Some)
        }
        FactorSource::VectorPanel => vector_pca_factors(panel.vectorized().view(), spec.n_factors()).map(Some),
        FactorSource::Matrix(method) => {
            if spec.k1 == 0 || spec.k2 == 0 || spec.k1 > p1 || spec.k2 > p2 {
                return Err(Error::Dimension(format!(
                    "matrix factor numbers ({}, {}) do not fit a {p1}x{p2} panel",
                    spec.k1, spec.k2
                )));
            }
            let fit = estimate_loadings(panel, spec.k1, spec.k2, method)?;
            let f = factors_from(panel, fit.r.view(), fit.c.view())?;
            Ok(Some(Array2::from_shape_fn((t, spec.k1 * spec.k2), |(s, idx)| f.vec_at(s)[idx])))
        }
    }
}

/// Rolling one-step-ahead forecasts of `y`.
///
/// For each origin `t` the window holds observations `t − window + 1 ..= t`.
/// Factors are estimated on the panel over that window, an OLS regression of
/// `y[u + 1]` on `(1, y[u], f_u)` is fitted for `u` in the window except its
/// last element, and `y[t + 1]` is predicted from `(1, y[t], f_t)`.
/// `own_row` selects the panel row used by [`FactorSource::VectorOwnRow`].
pub fn faar_predict(
    y: ArrayView1<f64>,
    panel: &MatrixSeries<f64>,
    own_row: usize,
    spec: &FaarModelSpec,
    window: usize,
) -> Result<FaarPrediction> {
    let t_total = y.len();
    if panel.len() != t_total {
        return Err(Error::Dimension(format!("target has {t_total} observations but the panel has {}", panel.len())));
    }
    if own_row >= panel.rows() {
        return Err(Error::Dimension(format!("own row {own_row} outside the panel")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("target series must be finite".into()));
    }
    let q = 2 + spec.n_factors();
    if window + 1 > t_total || window < q + 1 {
        return Err(Error::InsufficientData(format!(
            "window {window} needs {} ≤ window ≤ {}",
            q + 1,
            t_total.saturating_sub(1)
        )));
    }
    let mut origins = Vec::new();
    let mut predictions = Vec::new();
    let mut actual = Vec::new();
    for t in (window - 1)..(t_total - 1) {
        let start = t + 1 - window;
        let sub = panel.window(start, t + 1)?;
        let factors = window_factors(&sub, own_row, spec)?;
        let row = |u: usize| -> Array1<f64> {
            let mut r = Array1::<f64>::zeros(q);
            r[0] = 1.0;
            r[1] = y[start + u];
            if let Some(f) = &factors {
                r.slice_mut(s![2..]).assign(&f.row(u));
            }
            r
        };
        let n_eq = window - 1;
        let mut design = Array2::<f64>::zeros((n_eq, q));
        let mut response = Array1::<f64>::zeros(n_eq);
        for u in 0..n_eq {
            design.row_mut(u).assign(&row(u));
            response[u] = y[start + u + 1];
        }
        let beta = ols_fit(design.view(), response.view())?;
        origins.push(t);
        predictions.push(row(window - 1).dot(&beta));
        actual.push(y[t + 1]);
    }
    let mae = predictions.iter().zip(&actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / predictions.len() as f64;
    Ok(FaarPrediction { origins, predictions, actual, mean_abs_error: mae })
}
