//! Householder QR least squares and Cholesky factorization.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Least-squares solution of `design · β ≈ response` via Householder QR.
///
/// Fails with [`Error::Regression`] when the design is rank deficient; the
/// reported condition estimate is `max|r_jj| / min|r_jj|`.
pub fn lstsq<T: Scalar>(design: ArrayView2<T>, response: ArrayView1<T>) -> Result<Array1<T>> {
    let (n, q) = design.dim();
    if response.len() != n {
        return Err(Error::Dimension(format!("design has {n} rows but response has length {}", response.len())));
    }
    if q == 0 || n < q {
        return Err(Error::Regression {
            reason: format!("need at least as many observations as regressors ({n} < {q})"),
            condition: f64::INFINITY,
        });
    }
    if design.iter().chain(response.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("regression inputs must be finite".into()));
    }
    let mut a = design.to_owned();
    let mut b = response.to_owned();
    let mut rdiag = vec![T::zero(); q];
    for k in 0..q {
        let mut nrm = T::zero();
        for i in k..n {
            nrm = nrm.hypot(a[[i, k]]);
        }
        if nrm != T::zero() {
            if a[[k, k]] < T::zero() {
                nrm = -nrm;
            }
            for i in k..n {
                a[[i, k]] = a[[i, k]] / nrm;
            }
            a[[k, k]] = a[[k, k]] + T::one();
            for j in (k + 1)..q {
                let mut s = T::zero();
                for i in k..n {
                    s = s + a[[i, k]] * a[[i, j]];
                }
                s = -s / a[[k, k]];
                for i in k..n {
                    a[[i, j]] = a[[i, j]] + s * a[[i, k]];
                }
            }
            let mut s = T::zero();
            for i in k..n {
                s = s + a[[i, k]] * b[i];
            }
            s = -s / a[[k, k]];
            for i in k..n {
                b[i] = b[i] + s * a[[i, k]];
            }
        }
        rdiag[k] = -nrm;
    }
    let max_r = rdiag.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let min_r = rdiag.iter().fold(T::infinity(), |m, v| m.min(v.abs()));
    let condition = if min_r > T::zero() { (max_r / min_r).as_f64() } else { f64::INFINITY };
    let tol = max_r * T::epsilon() * T::from_usize_lossy(n.max(q)) * T::lit(10.0);
    if !(min_r > tol) {
        return Err(Error::Regression { reason: "design matrix is rank deficient".into(), condition });
    }
    let mut beta = Array1::<T>::zeros(q);
    for k in (0..q).rev() {
        let mut s = b[k];
        for j in (k + 1)..q {
            s = s - a[[k, j]] * beta[j];
        }
        beta[k] = s / rdiag[k];
    }
    Ok(beta)
}

/// Lower-triangular `L` with `L Lᵀ = a`.
pub fn cholesky<T: Scalar>(a: ArrayView2<T>) -> Result<Array2<T>> {
    let (n, m) = a.dim();
    if n != m {
        return Err(Error::Dimension(format!("cholesky of a {n}x{m} matrix")));
    }
    let mut l = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d = d - l[[j, k]] * l[[j, k]];
        }
        if !(d > T::zero()) {
            return Err(Error::Covariance(format!("matrix is not positive definite (pivot {j} = {d:e})")));
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s = s - l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_design_returns_response() {
        let x = Array2::<f64>::eye(3);
        let y = array![1.5, -2.0, 0.25];
        let b = lstsq(x.view(), y.view()).unwrap();
        assert!((b - y).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn rank_deficient_design_is_rejected() {
        let x = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let y = array![1.0, 2.0, 3.0];
        match lstsq(x.view(), y.view()) {
            Err(Error::Regression { condition, .. }) => assert!(condition > 1e10),
            other => panic!("expected regression error, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_roundtrip_and_failure() {
        let a = array![[4.0f64, 2.0], [2.0, 3.0]];
        let l = cholesky(a.view()).unwrap();
        assert!((l.dot(&l.t()) - &a).iter().all(|v| v.abs() < 1e-14));
        let bad = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(cholesky(bad.view()), Err(Error::Covariance(_))));
    }
}
