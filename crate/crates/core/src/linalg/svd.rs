//! Thin SVD of tall matrices by one-sided Jacobi rotations.
//!
//! Intended for the narrow matrices that show up here (loadings, `k×k`
//! alignment problems), where the column count is small.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `A = U diag(s) Vᵀ` with `U` of shape `m×n`, singular values non-increasing.
#[derive(Debug, Clone)]
pub struct ThinSvd<T> {
    pub u: Array2<T>,
    pub singular_values: Array1<T>,
    pub v: Array2<T>,
}

/// Thin SVD of an `m×n` matrix with `m ≥ n`.
///
/// Columns of `U` belonging to zero singular values are completed to an
/// orthonormal set. Each column of `U` has its largest-magnitude entry
/// positive (the matching column of `V` is flipped with it).
pub fn thin_svd<T: Scalar>(a: ArrayView2<T>) -> Result<ThinSvd<T>> {
    let (m, n) = a.dim();
    if n == 0 || m < n {
        return Err(Error::Dimension(format!("thin SVD needs rows >= cols >= 1, got {m}x{n}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut w = a.to_owned();
    let mut v = Array2::<T>::eye(n);
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for i in 0..m {
                    let wp = w[[i, p]];
                    let wq = w[[i, q]];
                    alpha = alpha + wp * wp;
                    beta = beta + wq * wq;
                    gamma = gamma + wp * wq;
                }
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wp = w[[i, p]];
                    let wq = w[[i, q]];
                    w[[i, p]] = c * wp - s * wq;
                    w[[i, q]] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[[i, p]];
                    let vq = v[[i, q]];
                    v[[i, p]] = c * vp - s * vq;
                    v[[i, q]] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<T> = (0..n).map(|j| w.column(j).iter().map(|x| *x * *x).sum::<T>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));
    let smax = norms[order[0]];
    let cutoff = smax * eps * T::from_usize_lossy(m.max(n));
    let mut u = Array2::<T>::zeros((m, n));
    let mut vv = Array2::<T>::zeros((n, n));
    let mut s = Array1::<T>::zeros(n);
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = norms[src];
        vv.column_mut(dst).assign(&v.column(src));
        if norms[src] > cutoff && norms[src] > T::zero() {
            let col = w.column(src).mapv(|x| x / norms[src]);
            u.column_mut(dst).assign(&col);
        } else {
            deficient.push(dst);
        }
    }
    for &j in &deficient {
        complete_column(&mut u, j);
    }
    for j in 0..n {
        let col = u.column(j);
        let mut best = 0;
        for i in 0..m {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < T::zero() {
            u.column_mut(j).mapv_inplace(|x| -x);
            vv.column_mut(j).mapv_inplace(|x| -x);
        }
    }
    Ok(ThinSvd { u, singular_values: s, v: vv })
}

/// Fills column `j` of `u` with a unit vector orthogonal to the others.
fn complete_column<T: Scalar>(u: &mut Array2<T>, j: usize) {
    let (m, n) = u.dim();
    for e in 0..m {
        let mut cand = Array1::<T>::zeros(m);
        cand[e] = T::one();
        for _ in 0..2 {
            for c in 0..n {
                if c == j {
                    continue;
                }
                let dot = cand.dot(&u.column(c));
                cand.scaled_add(-dot, &u.column(c));
            }
        }
        let nrm = cand.dot(&cand).sqrt();
        if nrm > T::lit(0.5) {
            u.column_mut(j).assign(&cand.mapv(|x| x / nrm));
            return;
        }
    }
}

/// Orthogonal polar factor `U Vᵀ` of a square matrix: the orthogonal matrix
/// closest to `b` in Frobenius norm.
pub fn polar_orthogonal<T: Scalar>(b: ArrayView2<T>) -> Result<Array2<T>> {
    let svd = thin_svd(b)?;
    Ok(svd.u.dot(&svd.v.t()))
}
