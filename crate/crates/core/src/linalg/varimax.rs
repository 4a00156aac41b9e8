//! Kaiser-normalized varimax rotation.

use ndarray::{Array2, ArrayView2, Axis};

use super::svd::polar_orthogonal;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_ITER: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Rotated loadings `L·O` together with the orthogonal rotation `O`.
#[derive(Debug, Clone)]
pub struct VarimaxRotation<T> {
    pub rotated: Array2<T>,
    pub rotation: Array2<T>,
    pub iterations: usize,
}

/// Varimax rotation of `l` (rows normalized to unit length during the search).
pub fn varimax<T: Scalar>(l: ArrayView2<T>, max_iter: usize, tol: f64) -> Result<Array2<T>> {
    varimax_rotation(l, max_iter, tol).map(|r| r.rotated)
}

pub fn varimax_rotation<T: Scalar>(l: ArrayView2<T>, max_iter: usize, tol: f64) -> Result<VarimaxRotation<T>> {
    let (p, k) = l.dim();
    if k == 0 {
        return Err(Error::Dimension("varimax needs at least one column".into()));
    }
    if p < k {
        return Err(Error::Dimension(format!("varimax needs p >= k, got {p}x{k}")));
    }
    if k == 1 {
        return Ok(VarimaxRotation { rotated: l.to_owned(), rotation: Array2::eye(1), iterations: 0 });
    }
    let x = kaiser_normalize(l);
    let pf = T::from_usize_lossy(p);
    let mut rotation = Array2::<T>::eye(k);
    let mut d = T::zero();
    let mut iterations = 0;
    for it in 1..=max_iter.max(1) {
        iterations = it;
        let z = x.dot(&rotation);
        let col_ss = z.mapv(|v| v * v).sum_axis(Axis(0));
        let mut target = z.mapv(|v| v * v * v);
        for j in 0..k {
            let adj = col_ss[j] / pf;
            for i in 0..p {
                target[[i, j]] = target[[i, j]] - z[[i, j]] * adj;
            }
        }
        let b = x.t().dot(&target);
        let svd = super::svd::thin_svd(b.view())?;
        rotation = svd.u.dot(&svd.v.t());
        let d_past = d;
        d = svd.singular_values.sum();
        if d < d_past * (T::one() + T::lit(tol)) {
            break;
        }
    }
    // re-orthogonalize against accumulated rounding
    let rotation = polar_orthogonal(rotation.view())?;
    Ok(VarimaxRotation { rotated: l.dot(&rotation), rotation, iterations })
}

/// Raw varimax criterion on row-normalized loadings: sum over columns of the
/// variance of squared entries.
pub fn varimax_criterion<T: Scalar>(l: ArrayView2<T>) -> T {
    let x = kaiser_normalize(l);
    let pf = T::from_usize_lossy(x.nrows());
    let mut total = T::zero();
    for col in x.columns() {
        let sq: Vec<T> = col.iter().map(|v| *v * *v).collect();
        let mean = sq.iter().copied().sum::<T>() / pf;
        let m4 = sq.iter().map(|v| *v * *v).sum::<T>() / pf;
        total = total + m4 - mean * mean;
    }
    total
}

fn kaiser_normalize<T: Scalar>(l: ArrayView2<T>) -> Array2<T> {
    let mut x = l.to_owned();
    for mut row in x.rows_mut() {
        let n = row.iter().map(|v| *v * *v).sum::<T>().sqrt();
        if n > T::zero() {
            row.mapv_inplace(|v| v / n);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_column_is_unchanged() {
        let l = array![[1.0], [-2.0], [0.5]];
        assert_eq!(varimax(l.view(), 1000, 1e-8).unwrap(), l);
    }

    #[test]
    fn zero_columns_rejected() {
        let l = Array2::<f64>::zeros((3, 0));
        assert!(matches!(varimax(l.view(), 10, 1e-8), Err(Error::Dimension(_))));
    }

    #[test]
    fn simple_structure_is_a_fixed_point() {
        let l = array![[2.0f64, 0.0], [0.0, -1.0], [1.5, 0.0], [0.0, 3.0], [-1.0, 0.0]];
        let out = varimax(l.view(), 1000, 1e-8).unwrap();
        for j in 0..2 {
            let matched = (0..2).any(|c| {
                let same = (0..5).all(|i| (out[[i, j]] - l[[i, c]]).abs() < 1e-8);
                let flipped = (0..5).all(|i| (out[[i, j]] + l[[i, c]]).abs() < 1e-8);
                same || flipped
            });
            assert!(matched, "column {j} of {out:?}");
        }
    }
}
