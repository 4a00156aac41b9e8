//! Containers for matrix-valued time series, factor series and loadings.

use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Axis};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An ordered sequence of `T` real matrices of identical shape `p1×p2`.
///
/// Stored as a `(T, p1, p2)` array in standard layout; every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSeries<T> {
    data: Array3<T>,
}

impl<T: Scalar> MatrixSeries<T> {
    pub fn new(data: Array3<T>) -> Result<Self> {
        let (t, p1, p2) = data.dim();
        if t == 0 || p1 == 0 || p2 == 0 {
            return Err(Error::Dimension(format!("matrix series needs positive dimensions, got ({t}, {p1}, {p2})")));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (a, rest) = (pos / (p1 * p2), pos % (p1 * p2));
            return Err(Error::InvalidInput(format!("non-finite entry at t={a}, i={}, j={}", rest / p2, rest % p2)));
        }
        let data = if data.is_standard_layout() { data } else { data.as_standard_layout().into_owned() };
        Ok(MatrixSeries { data })
    }

    pub fn from_matrices(slices: &[Array2<T>]) -> Result<Self> {
        let first = slices.first().ok_or_else(|| Error::Dimension("empty list of matrices".into()))?;
        let (p1, p2) = first.dim();
        let mut data = Array3::<T>::zeros((slices.len(), p1, p2));
        for (t, m) in slices.iter().enumerate() {
            if m.dim() != (p1, p2) {
                return Err(Error::Dimension(format!("slice {t} has shape {:?}, expected ({p1}, {p2})", m.dim())));
            }
            data.index_axis_mut(Axis(0), t).assign(m);
        }
        Self::new(data)
    }

    /// `(T, p1, p2)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn len(&self) -> usize {
        self.data.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> usize {
        self.data.dim().1
    }

    pub fn cols(&self) -> usize {
        self.data.dim().2
    }

    pub fn slice(&self, t: usize) -> ArrayView2<'_, T> {
        self.data.index_axis(Axis(0), t)
    }

    pub fn view(&self) -> ArrayView3<'_, T> {
        self.data.view()
    }

    pub fn into_inner(self) -> Array3<T> {
        self.data
    }

    /// The series of transposed matrices `X_tᵀ`, copied to standard layout.
    pub fn transposed(&self) -> MatrixSeries<T> {
        let data = self.data.view().permuted_axes([0, 2, 1]).as_standard_layout().into_owned();
        MatrixSeries { data }
    }

    /// Observations `start..end` as a new series.
    pub fn window(&self, start: usize, end: usize) -> Result<MatrixSeries<T>> {
        if start >= end || end > self.len() {
            return Err(Error::Dimension(format!("window {start}..{end} outside 0..{}", self.len())));
        }
        Ok(MatrixSeries { data: self.data.slice(ndarray::s![start..end, .., ..]).to_owned() })
    }

    /// Every entry multiplied by `c`.
    pub fn scaled(&self, c: T) -> MatrixSeries<T> {
        MatrixSeries { data: self.data.mapv(|v| v * c) }
    }

    /// `T × (p1·p2)` panel with each matrix vectorized column-major.
    pub fn vectorized(&self) -> Array2<T> {
        let (t, p1, p2) = self.dims();
        let mut out = Array2::<T>::zeros((t, p1 * p2));
        for (s, m) in self.data.outer_iter().enumerate() {
            for j in 0..p2 {
                for i in 0..p1 {
                    out[[s, j * p1 + i]] = m[[i, j]];
                }
            }
        }
        out
    }

    /// Inverse of [`MatrixSeries::vectorized`].
    pub fn from_vectorized(panel: ArrayView2<T>, p1: usize, p2: usize) -> Result<Self> {
        let (t, n) = panel.dim();
        if n != p1 * p2 {
            return Err(Error::Dimension(format!("panel has {n} columns, expected {p1}*{p2}")));
        }
        let mut data = Array3::<T>::zeros((t, p1, p2));
        for s in 0..t {
            for j in 0..p2 {
                for i in 0..p1 {
                    data[[s, i, j]] = panel[[s, j * p1 + i]];
                }
            }
        }
        Self::new(data)
    }
}

/// Factor matrices `F_t`, shape `(T, k1, k2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSeries<T> {
    pub factors: Array3<T>,
}

impl<T: Scalar> FactorSeries<T> {
    pub fn dims(&self) -> (usize, usize, usize) {
        self.factors.dim()
    }

    pub fn slice(&self, t: usize) -> ArrayView2<'_, T> {
        self.factors.index_axis(Axis(0), t)
    }

    /// Column-major vectorization of `F_t`.
    pub fn vec_at(&self, t: usize) -> Vec<T> {
        let f = self.slice(t);
        let (k1, k2) = f.dim();
        let mut out = Vec::with_capacity(k1 * k2);
        for j in 0..k2 {
            for i in 0..k1 {
                out.push(f[[i, j]]);
            }
        }
        out
    }
}

/// A `p×k` loading matrix scaled so that `LᵀL/p = I`, i.e. `√p` times an
/// orthonormal basis of the estimated loading space.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingEstimate<T> {
    matrix: Array2<T>,
}

impl<T: Scalar> LoadingEstimate<T> {
    /// Scales an orthonormal basis by `√p`.
    pub fn from_orthonormal(basis: Array2<T>) -> Self {
        let p = T::from_usize_lossy(basis.nrows());
        LoadingEstimate { matrix: basis.mapv(|v| v * p.sqrt()) }
    }

    /// Wraps a matrix that already follows the scaling convention, checking
    /// `‖LᵀL/p − I‖_max ≤ tol`.
    pub fn from_scaled(matrix: Array2<T>, tol: f64) -> Result<Self> {
        let dev = scaling_deviation(matrix.view());
        if !(dev <= tol) {
            return Err(Error::InvalidInitializer(format!(
                "loading deviates from LᵀL/p = I by {dev:e} (tolerance {tol:e})"
            )));
        }
        Ok(LoadingEstimate { matrix })
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.matrix.view()
    }

    pub fn into_matrix(self) -> Array2<T> {
        self.matrix
    }

    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn k(&self) -> usize {
        self.matrix.ncols()
    }

    /// Projection onto the loading space, `L Lᵀ / p`.
    pub fn projector(&self) -> Array2<T> {
        let p = T::from_usize_lossy(self.p());
        self.matrix.dot(&self.matrix.t()).mapv(|v| v / p)
    }
}

/// `max |LᵀL/p − I|` entrywise.
pub fn scaling_deviation<T: Scalar>(l: ArrayView2<T>) -> f64 {
    let p = T::from_usize_lossy(l.nrows());
    let g = l.t().dot(&l);
    let mut dev = 0.0f64;
    for ((i, j), v) in g.indexed_iter() {
        let target = if i == j { T::one() } else { T::zero() };
        let d = (*v / p - target).abs().as_f64();
        if d.is_nan() {
            return f64::INFINITY;
        }
        dev = dev.max(d);
    }
    dev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        let mut a = Array3::<f64>::zeros((2, 2, 2));
        a[[1, 0, 1]] = f64::INFINITY;
        assert!(matches!(MatrixSeries::new(a), Err(Error::InvalidInput(_))));
        assert!(MatrixSeries::new(Array3::<f64>::zeros((0, 2, 2))).is_err());
    }

    #[test]
    fn vectorize_roundtrip() {
        let a = Array3::from_shape_fn((3, 2, 4), |(t, i, j)| (t * 100 + i * 10 + j) as f64);
        let x = MatrixSeries::new(a).unwrap();
        let v = x.vectorized();
        assert_eq!(v[[1, 2]], 100.0 + 1.0 * 0.0 + 1.0);
        let back = MatrixSeries::from_vectorized(v.view(), 2, 4).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn transposed_swaps_axes() {
        let a = Array3::from_shape_fn((2, 2, 3), |(t, i, j)| (t + 2 * i + 5 * j) as f64);
        let x = MatrixSeries::new(a).unwrap();
        let xt = x.transposed();
        assert_eq!(xt.dims(), (2, 3, 2));
        assert_eq!(xt.slice(1), x.slice(1).t());
    }

    #[test]
    fn loading_scaling_convention() {
        let basis = Array2::<f64>::eye(4).slice(ndarray::s![.., 0..2]).to_owned();
        let l = LoadingEstimate::from_orthonormal(basis);
        assert!(scaling_deviation(l.view()) < 1e-14);
        assert!(LoadingEstimate::from_scaled(Array2::<f64>::ones((4, 1)), 1e-6).is_ok());
        assert!(LoadingEstimate::from_scaled(Array2::<f64>::ones((4, 2)), 1e-6).is_err());
    }
}
