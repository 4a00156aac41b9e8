//! Loading-space estimators: the initial second-moment estimator, the
//! projected estimator and its recursive refinement, plus factor and common
//! component recovery.

use std::fmt;
use std::str::FromStr;

use log::warn;
use ndarray::{linalg::general_mat_mul, Array1, Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::space_distance;
use crate::linalg::{stacked_gram, stacked_outer, sym_eig_topk};
use crate::scalar::Scalar;
use crate::series::{scaling_deviation, FactorSeries, LoadingEstimate, MatrixSeries};

/// Which estimator produced a [`LoadingPair`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Initial,
    Projected,
    /// Recursive projection with the given number of steps (step 1 is the
    /// initial estimate).
    Recursive(usize),
}

/// Default number of steps when `recursive` is requested without a count.
pub const DEFAULT_RECURSIVE_STEPS: usize = 5;

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Initial => write!(f, "initial"),
            Method::Projected => write!(f, "projected"),
            Method::Recursive(n) => write!(f, "recursive:{n}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts `initial`, `projected` (or `pe`), `recursive` and `recursive:N`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "initial" | "pca" => Ok(Method::Initial),
            "projected" | "pe" => Ok(Method::Projected),
            "recursive" => Ok(Method::Recursive(DEFAULT_RECURSIVE_STEPS)),
            other => match other.strip_prefix("recursive:") {
                Some(n) => n
                    .parse::<usize>()
                    .ok()
                    .filter(|n| *n >= 1)
                    .map(Method::Recursive)
                    .ok_or_else(|| Error::Config(format!("invalid recursive step count in {s:?}"))),
                None => Err(Error::Config(format!("unknown method {s:?} (expected initial, projected or recursive)"))),
            },
        }
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

/// Estimated row and column loadings with the leading eigenvalues of the
/// matrices they were extracted from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingPair<T> {
    pub r: LoadingEstimate<T>,
    pub c: LoadingEstimate<T>,
    pub eigvals_row: Array1<T>,
    pub eigvals_col: Array1<T>,
    pub method: Method,
}

impl<T: Scalar> LoadingPair<T> {
    pub fn k1(&self) -> usize {
        self.r.k()
    }

    pub fn k2(&self) -> usize {
        self.c.k()
    }
}

/// How the recursive estimator feeds iterates back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RecursiveMode {
    /// Both sides are projected with the previous iterate.
    #[default]
    Simultaneous,
    /// The column side is re-estimated with the freshly updated row loading.
    Alternating,
}

/// Distances between consecutive iterates of the recursive estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepChange {
    pub row: f64,
    pub col: f64,
}

#[derive(Debug, Clone)]
pub struct RecursiveEstimate<T> {
    pub loadings: LoadingPair<T>,
    /// `trace[s]` compares step `s + 2` with step `s + 1`.
    pub trace: Vec<StepChange>,
    pub steps: usize,
    pub converged: bool,
}

fn check_factor_numbers(p1: usize, p2: usize, k1: usize, k2: usize) -> Result<()> {
    if k1 == 0 || k2 == 0 || k1 > p1 || k2 > p2 {
        return Err(Error::Dimension(format!("factor numbers ({k1}, {k2}) must lie in 1..=({p1}, {p2})")));
    }
    Ok(())
}

fn warn_single_period(t: usize) {
    if t == 1 {
        warn!("estimating loadings from a single observation");
    }
}

/// `Σ_t X_t X_tᵀ / (T p1 p2)`.
pub fn row_second_moment<T: Scalar>(x: &MatrixSeries<T>) -> Array2<T> {
    let (t, p1, p2) = x.dims();
    let g = stacked_outer(x.view());
    let scale = T::from_usize_lossy(t) * T::from_usize_lossy(p1) * T::from_usize_lossy(p2);
    g.mapv(|v| v / scale)
}

/// `Σ_t X_tᵀ X_t / (T p1 p2)`.
pub fn col_second_moment<T: Scalar>(x: &MatrixSeries<T>) -> Array2<T> {
    let (t, p1, p2) = x.dims();
    let g = stacked_gram(x.view());
    let scale = T::from_usize_lossy(t) * T::from_usize_lossy(p1) * T::from_usize_lossy(p2);
    g.mapv(|v| v / scale)
}

/// `X_t · m` for every `t`, as a `(T, p1, k)` array.
fn right_multiply_all<T: Scalar>(x: &MatrixSeries<T>, m: ArrayView2<T>) -> Array3<T> {
    let (t, p1, p2) = x.dims();
    let k = m.ncols();
    let flat = x.view().into_shape_with_order((t * p1, p2)).expect("series is stored in standard layout");
    let mut out = Array2::<T>::zeros((t * p1, k));
    general_mat_mul(T::one(), &flat, &m, T::zero(), &mut out);
    out.into_shape_with_order((t, p1, k)).expect("shape preserved")
}

/// Row-side projected matrix `Σ_t Y_t Y_tᵀ / (T p1)` with `Y_t = X_t C / p2`.
pub fn projected_row_matrix<T: Scalar>(x: &MatrixSeries<T>, c: ArrayView2<T>) -> Array2<T> {
    let (t, p1, p2) = x.dims();
    let y = right_multiply_all(x, c);
    let g = stacked_outer(y.view());
    let p2t = T::from_usize_lossy(p2);
    let scale = T::from_usize_lossy(t) * T::from_usize_lossy(p1) * p2t * p2t;
    g.mapv(|v| v / scale)
}

/// Column-side projected matrix `Σ_t Z_t Z_tᵀ / (T p2)` with `Z_t = X_tᵀ R / p1`.
pub fn projected_col_matrix<T: Scalar>(x: &MatrixSeries<T>, r: ArrayView2<T>) -> Array2<T> {
    let (t, p1, p2) = x.dims();
    let mut w = Array3::<T>::zeros((t, r.ncols(), p2));
    for (s, mut ws) in w.outer_iter_mut().enumerate() {
        general_mat_mul(T::one(), &r.t(), &x.slice(s), T::zero(), &mut ws);
    }
    let g = stacked_gram(w.view());
    let p1t = T::from_usize_lossy(p1);
    let scale = T::from_usize_lossy(t) * T::from_usize_lossy(p2) * p1t * p1t;
    g.mapv(|v| v / scale)
}

fn leading_loading<T: Scalar>(m: &Array2<T>, k: usize, side: &str) -> Result<(LoadingEstimate<T>, Array1<T>)> {
    let trace: T = m.diag().iter().copied().sum();
    if !(trace > T::zero()) {
        return Err(Error::Degenerate(format!("{side} second-moment matrix is zero")));
    }
    let eig = sym_eig_topk(m.view(), k)?;
    Ok((LoadingEstimate::from_orthonormal(eig.eigenvectors), eig.eigenvalues))
}

/// Initial estimator: `√p` times the leading eigenvectors of the row and
/// column second-moment matrices.
pub fn initial_estimate<T: Scalar>(x: &MatrixSeries<T>, k1: usize, k2: usize) -> Result<LoadingPair<T>> {
    let (t, p1, p2) = x.dims();
    check_factor_numbers(p1, p2, k1, k2)?;
    warn_single_period(t);
    let (r, eigvals_row) = leading_loading(&row_second_moment(x), k1, "row")?;
    let (c, eigvals_col) = leading_loading(&col_second_moment(x), k2, "column")?;
    Ok(LoadingPair { r, c, eigvals_row, eigvals_col, method: Method::Initial })
}

fn check_initializer<T: Scalar>(l: &LoadingEstimate<T>, p: usize, k: usize, side: &str) -> Result<()> {
    if l.p() != p || l.k() != k {
        return Err(Error::Dimension(format!("{side} initializer is {}x{}, expected {p}x{k}", l.p(), l.k())));
    }
    let dev = scaling_deviation(l.view());
    if !(dev <= T::SCALING_TOL) {
        return Err(Error::InvalidInitializer(format!("{side} initializer deviates from LᵀL/p = I by {dev:e}")));
    }
    Ok(())
}

/// One projection step in which both sides are projected with `init`.
pub fn projected_estimate<T: Scalar>(
    x: &MatrixSeries<T>,
    k1: usize,
    k2: usize,
    init: &LoadingPair<T>,
) -> Result<LoadingPair<T>> {
    let (t, p1, p2) = x.dims();
    check_factor_numbers(p1, p2, k1, k2)?;
    check_initializer(&init.r, p1, init.k1(), "row")?;
    check_initializer(&init.c, p2, init.k2(), "column")?;
    warn_single_period(t);
    let (r, eigvals_row) = leading_loading(&projected_row_matrix(x, init.c.view()), k1, "projected row")?;
    let (c, eigvals_col) = leading_loading(&projected_col_matrix(x, init.r.view()), k2, "projected column")?;
    Ok(LoadingPair { r, c, eigvals_row, eigvals_col, method: Method::Projected })
}

fn recursive_step<T: Scalar>(
    x: &MatrixSeries<T>,
    k1: usize,
    k2: usize,
    prev: &LoadingPair<T>,
    mode: RecursiveMode,
) -> Result<LoadingPair<T>> {
    match mode {
        RecursiveMode::Simultaneous => projected_estimate(x, k1, k2, prev),
        RecursiveMode::Alternating => {
            let (r, eigvals_row) = leading_loading(&projected_row_matrix(x, prev.c.view()), k1, "projected row")?;
            let (c, eigvals_col) = leading_loading(&projected_col_matrix(x, r.view()), k2, "projected column")?;
            Ok(LoadingPair { r, c, eigvals_row, eigvals_col, method: Method::Projected })
        }
    }
}

/// Every iterate of the recursive estimator for exactly `steps` steps.
/// Element 0 is the initial estimate.
pub fn recursive_path<T: Scalar>(
    x: &MatrixSeries<T>,
    k1: usize,
    k2: usize,
    steps: usize,
    mode: RecursiveMode,
) -> Result<Vec<LoadingPair<T>>> {
    if steps == 0 {
        return Err(Error::InvalidInput("recursive estimation needs at least one step".into()));
    }
    let mut path = vec![initial_estimate(x, k1, k2)?];
    for s in 2..=steps {
        let mut next = recursive_step(x, k1, k2, path.last().expect("non-empty"), mode)?;
        next.method = Method::Recursive(s);
        path.push(next);
    }
    Ok(path)
}

/// Recursive projection with early stopping once both sides move by less
/// than `tol` in loading-space distance.
pub fn recursive_estimate<T: Scalar>(
    x: &MatrixSeries<T>,
    k1: usize,
    k2: usize,
    max_steps: usize,
    tol: f64,
) -> Result<RecursiveEstimate<T>> {
    recursive_estimate_with(x, k1, k2, max_steps, tol, RecursiveMode::Simultaneous)
}

pub fn recursive_estimate_with<T: Scalar>(
    x: &MatrixSeries<T>,
    k1: usize,
    k2: usize,
    max_steps: usize,
    tol: f64,
    mode: RecursiveMode,
) -> Result<RecursiveEstimate<T>> {
    if max_steps == 0 {
        return Err(Error::InvalidInput("recursive estimation needs at least one step".into()));
    }
    let mut current = initial_estimate(x, k1, k2)?;
    current.method = Method::Recursive(1);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut steps = 1;
    while steps < max_steps {
        let mut next = recursive_step(x, k1, k2, &current, mode)?;
        steps += 1;
        next.method = Method::Recursive(steps);
        let change = StepChange {
            row: space_distance(next.r.view(), current.r.view())?,
            col: space_distance(next.c.view(), current.c.view())?,
        };
        trace.push(change);
        current = next;
        if change.row < tol && change.col < tol {
            converged = true;
            break;
        }
    }
    Ok(RecursiveEstimate { loadings: current, trace, steps, converged })
}

/// Dispatches on [`Method`]; `Recursive(n)` runs exactly `n` steps.
pub fn estimate_loadings<T: Scalar>(
    x: &MatrixSeries<T>,
    k1: usize,
    k2: usize,
    method: Method,
) -> Result<LoadingPair<T>> {
    match method {
        Method::Initial => initial_estimate(x, k1, k2),
        Method::Projected => {
            let init = initial_estimate(x, k1, k2)?;
            projected_estimate(x, k1, k2, &init)
        }
        Method::Recursive(n) => {
            let mut path = recursive_path(x, k1, k2, n, RecursiveMode::Simultaneous)?;
            Ok(path.pop().expect("at least one step"))
        }
    }
}

/// `F̃_t = Rᵀ X_t C / (p1 p2)` for every `t`.
pub fn estimate_factors<T: Scalar>(x: &MatrixSeries<T>, loadings: &LoadingPair<T>) -> Result<FactorSeries<T>> {
    factors_from(x, loadings.r.view(), loadings.c.view())
}

/// Factor recovery from arbitrary `p1×k1` and `p2×k2` loading matrices.
pub fn factors_from<T: Scalar>(x: &MatrixSeries<T>, r: ArrayView2<T>, c: ArrayView2<T>) -> Result<FactorSeries<T>> {
    let (t, p1, p2) = x.dims();
    if r.nrows() != p1 || c.nrows() != p2 {
        return Err(Error::Dimension(format!(
            "loadings {}x{} and {}x{} do not conform to {p1}x{p2} observations",
            r.nrows(),
            r.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let scale = T::from_usize_lossy(p1) * T::from_usize_lossy(p2);
    let xc = right_multiply_all(x, c);
    let mut factors = Array3::<T>::zeros((t, r.ncols(), c.ncols()));
    for (s, mut f) in factors.outer_iter_mut().enumerate() {
        general_mat_mul(T::one() / scale, &r.t(), &xc.index_axis(Axis(0), s), T::zero(), &mut f);
    }
    Ok(FactorSeries { factors })
}

/// `S̃_t = R F̃_t Cᵀ` for every `t`.
pub fn common_components<T: Scalar>(loadings: &LoadingPair<T>, factors: &FactorSeries<T>) -> Result<Array3<T>> {
    common_from(loadings.r.view(), loadings.c.view(), factors)
}

pub fn common_from<T: Scalar>(r: ArrayView2<T>, c: ArrayView2<T>, factors: &FactorSeries<T>) -> Result<Array3<T>> {
    let (t, k1, k2) = factors.dims();
    if r.ncols() != k1 || c.ncols() != k2 {
        return Err(Error::Dimension(format!(
            "factors are {k1}x{k2} but loadings have {} and {} columns",
            r.ncols(),
            c.ncols()
        )));
    }
    let (p1, p2) = (r.nrows(), c.nrows());
    let mut out = Array3::<T>::zeros((t, p1, p2));
    let mut rf = Array2::<T>::zeros((p1, k2));
    for (s, mut o) in out.outer_iter_mut().enumerate() {
        general_mat_mul(T::one(), &r, &factors.slice(s), T::zero(), &mut rf);
        general_mat_mul(T::one(), &rf, &c.t(), T::zero(), &mut o);
    }
    Ok(out)
}

/// `(R Rᵀ/p1) X_t (C Cᵀ/p2)` for every `t`: the projection of each
/// observation onto both loading spaces.
pub fn project_onto_spans<T: Scalar>(x: &MatrixSeries<T>, r: ArrayView2<T>, c: ArrayView2<T>) -> Result<Array3<T>> {
    let f = factors_from(x, r, c)?;
    common_from(r, c, &f)
}
