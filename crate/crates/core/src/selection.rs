//! Factor-number selection by eigenvalue ratios, the iterative two-sided
//! procedure, the vectorized baseline and demeaning.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{col_second_moment, projected_col_matrix, projected_row_matrix, row_second_moment};
use crate::linalg::{sym_eig_topk, sym_eigenvalues};
use crate::scalar::Scalar;
use crate::series::MatrixSeries;

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Mean-removal applied before selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Demean {
    #[default]
    None,
    /// Remove each entry's time mean.
    #[serde(alias = "mean")]
    SubtractMean,
    /// Remove entry and period means and add back the grand mean.
    #[serde(alias = "double")]
    DoubleDemean,
}

impl fmt::Display for Demean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Demean::None => "none",
            Demean::SubtractMean => "mean",
            Demean::DoubleDemean => "double",
        };
        f.write_str(name)
    }
}

impl FromStr for Demean {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Demean::None),
            "mean" | "subtract_mean" => Ok(Demean::SubtractMean),
            "double" | "double_demean" => Ok(Demean::DoubleDemean),
            _ => Err(Error::Config(format!("unknown demean strategy {s:?} (expected none, mean or double)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub k_max: usize,
    /// Coefficient of the `δ` term added to each ratio denominator.
    pub c: f64,
    pub max_iter: usize,
    pub demean: Demean,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { k_max: 8, c: 0.0, max_iter: 10, demean: Demean::None }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::Config("c must be a nonnegative number".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Ratio vectors of one iteration, `ratios[j-1]` for `j = 1..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTrace {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub k1_hat: usize,
    pub k2_hat: usize,
    pub iterations: usize,
    pub converged: bool,
    pub ratio_traces: Vec<RatioTrace>,
}

/// Applies a demeaning strategy. Needs at least two periods unless the
/// strategy is `None`.
pub fn demean<T: Scalar>(x: &MatrixSeries<T>, strategy: Demean) -> Result<MatrixSeries<T>> {
    if strategy == Demean::None {
        return Ok(x.clone());
    }
    let (t, p1, p2) = x.dims();
    if t < 2 {
        return Err(Error::InsufficientData(format!("demeaning needs at least two periods, got {t}")));
    }
    let data = x.view();
    let tt = T::from_usize_lossy(t);
    let entry_mean = data.sum_axis(Axis(0)).mapv(|v| v / tt);
    let mut out: Array3<T> = data.to_owned();
    for mut slice in out.outer_iter_mut() {
        slice.zip_mut_with(&entry_mean, |v, &m| *v = *v - m);
    }
    if strategy == Demean::DoubleDemean {
        // After removing entry means, the period mean of the residual equals
        // x̄_t − x̄, so subtracting it completes the four-term formula.
        let n = T::from_usize_lossy(p1 * p2);
        for mut slice in out.outer_iter_mut() {
            let m = slice.sum() / n;
            slice.mapv_inplace(|v| v - m);
        }
    }
    MatrixSeries::new(out)
}

fn clamp_spectrum(eigs: &[f64]) -> Vec<f64> {
    let top = eigs.first().copied().unwrap_or(0.0).max(0.0);
    eigs.iter().map(|&v| if v < EIGEN_FLOOR * top || v <= 0.0 { 0.0 } else { v }).collect()
}

/// The ratios `λ_j / (λ_{j+1} + c·δ)` for `j = 1..=k_max` after clamping
/// small eigenvalues to zero. `0/0` is 0 and `x/0` is infinite.
pub fn eigenvalue_ratios(eigs: &[f64], k_max: usize, c: f64, delta: f64) -> Result<Vec<f64>> {
    if k_max == 0 || eigs.len() < k_max + 1 {
        return Err(Error::Dimension(format!("eigenvalue ratio needs {} eigenvalues, got {}", k_max + 1, eigs.len())));
    }
    if eigs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("eigenvalues must be finite".into()));
    }
    let lam = clamp_spectrum(&eigs[..=k_max]);
    let reg = c * delta;
    Ok((0..k_max)
        .map(|j| {
            let num = lam[j];
            let den = lam[j + 1] + reg;
            if den > 0.0 {
                num / den
            } else if num > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect())
}

/// Smallest `j` in `1..=k_max` maximizing the regularized eigenvalue ratio.
pub fn eigenvalue_ratio(eigs: &[f64], k_max: usize, c: f64, delta: f64) -> Result<usize> {
    let ratios = eigenvalue_ratios(eigs, k_max, c, delta)?;
    Ok(argmax_first(&ratios) + 1)
}

fn argmax_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &r) in v.iter().enumerate() {
        if r > v[best] {
            best = j;
        }
    }
    best
}

/// `δ` for the row side; swap `p1` and `p2` for the column side.
pub fn ratio_delta(t: usize, p1: usize, p2: usize) -> f64 {
    let (t, p1, p2) = (t as f64, p1 as f64, p2 as f64);
    (1.0 / (t * p2).sqrt()).max(1.0 / (t * p1).sqrt()).max(1.0 / p1)
}

fn leading_values<T: Scalar>(m: &Array2<T>, count: usize) -> Result<Vec<f64>> {
    let vals = sym_eigenvalues(m.view())?;
    Ok(vals.iter().take(count).map(|v| v.as_f64()).collect())
}

/// Iterative selection of `(k1, k2)`: alternate between projecting on the
/// current column estimate to choose `k1` and on the row estimate to choose
/// `k2`, until both stop changing.
pub fn select_factor_numbers<T: Scalar>(x: &MatrixSeries<T>, config: &SelectionConfig) -> Result<SelectionResult> {
    config.validate()?;
    let (t, p1, p2) = x.dims();
    let k_max = config.k_max;
    if k_max >= p1.min(p2) {
        return Err(Error::Dimension(format!("k_max = {k_max} must be below min(p1, p2) = {}", p1.min(p2))));
    }
    if t < 2 {
        return Err(Error::InsufficientData("selection needs at least two periods".into()));
    }
    let x = demean(x, config.demean)?;
    let row_vecs = sym_eig_topk(row_second_moment(&x).view(), k_max)?.eigenvectors;
    let col_vecs = sym_eig_topk(col_second_moment(&x).view(), k_max)?.eigenvectors;
    let sp1 = T::from_usize_lossy(p1).sqrt();
    let sp2 = T::from_usize_lossy(p2).sqrt();
    let delta_row = ratio_delta(t, p1, p2);
    let delta_col = ratio_delta(t, p2, p1);

    let (mut k1, mut k2) = (k_max, k_max);
    let mut traces = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let c_hat = col_vecs.slice(s![.., ..k2]).mapv(|v| v * sp2);
        let row_vals = leading_values(&projected_row_matrix(&x, c_hat.view()), k_max + 1)?;
        let row_ratios = eigenvalue_ratios(&row_vals, k_max, config.c, delta_row)?;
        let new_k1 = argmax_first(&row_ratios) + 1;

        let r_hat = row_vecs.slice(s![.., ..new_k1]).mapv(|v| v * sp1);
        let col_vals = leading_values(&projected_col_matrix(&x, r_hat.view()), k_max + 1)?;
        let col_ratios = eigenvalue_ratios(&col_vals, k_max, config.c, delta_col)?;
        let new_k2 = argmax_first(&col_ratios) + 1;

        traces.push(RatioTrace { row: row_ratios, col: col_ratios });
        let same = new_k1 == k1 && new_k2 == k2;
        k1 = new_k1;
        k2 = new_k2;
        if same {
            converged = true;
            break;
        }
    }
    Ok(SelectionResult { k1_hat: k1, k2_hat: k2, iterations, converged, ratio_traces: traces })
}

/// Largest `k_max` usable by [`vectorized_er`] for a `T`-period series of
/// `N = p1·p2` entries: the demeaned panel has rank at most
/// `min(T, N) − 1`, and one further eigenvalue is needed for the last ratio.
pub fn vectorized_k_max(t: usize, n: usize, k_max: usize, strategy: Demean) -> usize {
    let rank = t.min(n) - usize::from(strategy != Demean::None);
    k_max.min(rank.saturating_sub(1))
}

/// Eigenvalue-ratio selection on the vectorized model: the total number of
/// factors `k1·k2` is estimated from the spectrum of the `N×N` sample
/// covariance (through its `T×T` dual when `T < N`), with `c = 0`.
/// `k_max` is capped by [`vectorized_k_max`].
pub fn vectorized_er<T: Scalar>(x: &MatrixSeries<T>, k_max: usize, strategy: Demean) -> Result<usize> {
    let (t, p1, p2) = x.dims();
    let n = p1 * p2;
    let effective = vectorized_k_max(t, n, k_max, strategy);
    if k_max == 0 || effective == 0 {
        return Err(Error::Dimension(format!("vectorized selection needs more periods or entries (T = {t}, N = {n})")));
    }
    let panel = demean(x, strategy)?.vectorized();
    let gram = if t < n { panel.dot(&panel.t()) } else { panel.t().dot(&panel) };
    let scale = T::from_usize_lossy(t) * T::from_usize_lossy(n);
    let gram = gram.mapv(|v| v / scale);
    let vals = leading_values(&gram, effective + 1)?;
    eigenvalue_ratio(&vals, effective, 0.0, 0.0)
}
