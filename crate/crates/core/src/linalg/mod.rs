//! Numerical primitives: symmetric eigensolver, thin SVD, least squares,
//! varimax rotation, Kronecker products and deterministic Gram accumulation.

mod eig;
mod qr;
mod svd;
mod varimax;

pub use eig::{sym_eig_topk, sym_eigenvalues, SymEigResult};
pub use qr::{cholesky, lstsq};
pub use svd::{polar_orthogonal, thin_svd, ThinSvd};
pub use varimax::{
    varimax, varimax_criterion, varimax_rotation, VarimaxRotation, DEFAULT_MAX_ITER as VARIMAX_MAX_ITER,
    DEFAULT_TOL as VARIMAX_TOL,
};

use ndarray::{linalg::general_mat_mul, s, Array2, ArrayView2, ArrayView3};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Kronecker product `A ⊗ B`.
pub fn kron<T: Scalar>(a: ArrayView2<T>, b: ArrayView2<T>) -> Array2<T> {
    let (m, n) = a.dim();
    let (p, q) = b.dim();
    let mut out = Array2::<T>::zeros((m * p, n * q));
    for i in 0..m {
        for j in 0..n {
            let aij = a[[i, j]];
            let mut block = out.slice_mut(s![i * p..(i + 1) * p, j * q..(j + 1) * q]);
            block.zip_mut_with(&b, |o, &bv| *o = aij * bv);
        }
    }
    out
}

/// Number of slices reduced directly before the pairwise combination step.
const GRAM_LEAF: usize = 16;
/// Block width for the lower-triangular Gram update.
const GRAM_BLOCK: usize = 64;

/// `Σ_t B_tᵀ B_t` over the slices of a `(T, a, b)` block array.
///
/// Slices are reduced in fixed-size leaves that are then combined by pairwise
/// summation, so the reduction order depends only on `T`.
pub fn stacked_gram<T: Scalar>(blocks: ArrayView3<T>) -> Array2<T> {
    let (t, _, b) = blocks.dim();
    let mut out = if t == 0 { Array2::zeros((b, b)) } else { pairwise_gram(blocks, 0, t, false) };
    mirror_lower(&mut out);
    out
}

/// `Σ_t B_t B_tᵀ` over the slices of a `(T, a, b)` block array.
pub fn stacked_outer<T: Scalar>(blocks: ArrayView3<T>) -> Array2<T> {
    let (t, a, _) = blocks.dim();
    let mut out = if t == 0 { Array2::zeros((a, a)) } else { pairwise_gram(blocks, 0, t, true) };
    mirror_lower(&mut out);
    out
}

fn pairwise_gram<T: Scalar>(blocks: ArrayView3<T>, lo: usize, hi: usize, outer: bool) -> Array2<T> {
    if hi - lo <= GRAM_LEAF {
        let (_, a, b) = blocks.dim();
        let n = if outer { a } else { b };
        let mut out = Array2::<T>::zeros((n, n));
        let chunk = blocks.slice(s![lo..hi, .., ..]);
        if outer {
            for slice in chunk.outer_iter() {
                lower_gram_update(slice.t(), &mut out);
            }
        } else if let Ok(stacked) = chunk.to_shape(((hi - lo) * a, b)) {
            lower_gram_update(stacked.view(), &mut out);
        } else {
            for slice in chunk.outer_iter() {
                lower_gram_update(slice, &mut out);
            }
        }
        return out;
    }
    let mid = lo + (hi - lo) / 2;
    let mut left = pairwise_gram(blocks, lo, mid, outer);
    let right = pairwise_gram(blocks, mid, hi, outer);
    left.zip_mut_with(&right, |l, &r| *l = *l + r);
    left
}

/// `out += sᵀ s`, touching only blocks on or below the diagonal.
fn lower_gram_update<T: Scalar>(s: ArrayView2<T>, out: &mut Array2<T>) {
    let b = s.ncols();
    let mut i0 = 0;
    while i0 < b {
        let i1 = (i0 + GRAM_BLOCK).min(b);
        let si = s.slice(s![.., i0..i1]);
        let mut j0 = 0;
        while j0 < i1 {
            let j1 = (j0 + GRAM_BLOCK).min(b);
            let sj = s.slice(s![.., j0..j1]);
            let mut dst = out.slice_mut(s![i0..i1, j0..j1]);
            general_mat_mul(T::one(), &si.t(), &sj, T::one(), &mut dst);
            j0 = j1;
        }
        i0 = i1;
    }
}

/// Copies the lower triangle onto the upper one.
fn mirror_lower<T: Scalar>(m: &mut Array2<T>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            m[[i, j]] = m[[j, i]];
        }
    }
}

/// Orthonormal basis of the column space of `a` (left singular vectors).
pub fn orthonormal_basis<T: Scalar>(a: ArrayView2<T>) -> Result<Array2<T>> {
    let (p, k) = a.dim();
    if k == 0 || p < k {
        return Err(Error::Dimension(format!("need a tall matrix with at least one column, got {p}x{k}")));
    }
    let svd = thin_svd(a)?;
    let smax = svd.singular_values[0];
    let smin = svd.singular_values[k - 1];
    let tol = T::lit(1e3) * T::epsilon() * T::from_usize_lossy(p);
    if !(smax > T::zero()) || smin <= tol * smax {
        return Err(Error::Rank(format!("matrix {p}x{k} is rank deficient (singular values {}..{})", smax, smin)));
    }
    Ok(svd.u)
}
