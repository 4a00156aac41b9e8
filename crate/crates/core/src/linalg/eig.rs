//! Dense symmetric eigendecomposition.
//!
//! Householder reduction to tridiagonal form followed by implicit QL with
//! Wilkinson-type shifts. When only a few leading eigenpairs of a large matrix
//! are needed, eigenvectors of the tridiagonal matrix are obtained by inverse
//! iteration and back-transformed through the stored reflectors; any pair that
//! fails the residual check triggers the full QL accumulation instead.
//!
//! Output conventions:
//! - eigenvalues in non-increasing order, ties kept in solver order;
//! - every eigenvector has its largest-magnitude entry positive (first such
//!   index on ties).

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Leading eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigResult<T> {
    /// Eigenvalues, non-increasing.
    pub eigenvalues: Array1<T>,
    /// `p×k` matrix with orthonormal columns.
    pub eigenvectors: Array2<T>,
}

/// Below this size the full QL accumulation is always used.
const SMALL_N: usize = 48;

/// Returns the `k` algebraically largest eigenpairs of the symmetric matrix `s`.
///
/// The input is checked for finiteness and symmetry (relative tolerance
/// [`Scalar::SYMMETRY_TOL`]) and symmetrized as `(S + Sᵀ)/2` before solving.
pub fn sym_eig_topk<T: Scalar>(s: ArrayView2<T>, k: usize) -> Result<SymEigResult<T>> {
    let a = checked_symmetric(s)?;
    let n = a.nrows();
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    let tri = Tridiagonal::reduce(&a);
    let (values, vectors) = if n <= SMALL_N || 3 * k > n {
        tri.top_pairs_full(k)
    } else {
        match tri.top_pairs_inverse_iteration(k) {
            Some(pairs) => pairs,
            None => tri.top_pairs_full(k),
        }
    };
    Ok(finish(values, vectors))
}

/// All eigenvalues of a symmetric matrix, non-increasing.
pub fn sym_eigenvalues<T: Scalar>(s: ArrayView2<T>) -> Result<Array1<T>> {
    let a = checked_symmetric(s)?;
    let tri = Tridiagonal::reduce(&a);
    let mut d = tri.diag.clone();
    let mut e = tri.off.clone();
    tql(&mut d, &mut e, None);
    d.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    Ok(Array1::from(d))
}

fn checked_symmetric<T: Scalar>(s: ArrayView2<T>) -> Result<Array2<T>> {
    let (n, m) = s.dim();
    if n != m {
        return Err(Error::Dimension(format!("matrix is {n}x{m}, expected square")));
    }
    if n == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    let mut scale = 1.0f64;
    for v in s.iter() {
        if !v.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        scale = scale.max(v.abs().as_f64());
    }
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((s[[i, j]] - s[[j, i]]).abs().as_f64());
        }
    }
    if asym > T::SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let half = T::lit(0.5);
    let mut a = s.to_owned();
    for i in 0..n {
        for j in 0..i {
            let v = (s[[i, j]] + s[[j, i]]) * half;
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    Ok(a)
}

/// Sorts descending (stable), applies the sign convention.
fn finish<T: Scalar>(values: Vec<T>, vectors: Array2<T>) -> SymEigResult<T> {
    let k = values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).expect("finite eigenvalues"));
    let n = vectors.nrows();
    let mut out = Array2::<T>::zeros((n, k));
    let mut vals = Array1::<T>::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = values[src];
        let col = vectors.column(src);
        let mut best = 0usize;
        let mut best_abs = T::zero();
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        let sign = if col[best] < T::zero() { -T::one() } else { T::one() };
        for i in 0..n {
            out[[i, dst]] = col[i] * sign;
        }
    }
    SymEigResult { eigenvalues: vals, eigenvectors: out }
}

/// Tridiagonal form `A = Q T Qᵀ` with `Q` kept as a product of reflectors.
struct Tridiagonal<T> {
    n: usize,
    diag: Vec<T>,
    /// `off[i]` couples rows `i-1` and `i`; `off[0] = 0`.
    off: Vec<T>,
    /// Column `i` (rows `< i`) stores the reflector vector of step `i`.
    reflectors: Vec<T>,
    /// Reflector normalizers; zero means identity.
    h: Vec<T>,
}

impl<T: Scalar> Tridiagonal<T> {
    /// Householder reduction (EISPACK `tred2` ordering, reflectors kept).
    fn reduce(a: &Array2<T>) -> Self {
        let n = a.nrows();
        let mut v: Vec<T> = a.iter().copied().collect();
        let at = |i: usize, j: usize| i * n + j;
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            d[j] = v[at(n - 1, j)];
        }
        for i in (1..n).rev() {
            let mut scale = T::zero();
            let mut h = T::zero();
            for dk in d.iter().take(i) {
                scale = scale + dk.abs();
            }
            if scale == T::zero() {
                e[i] = d[i - 1];
                for j in 0..i {
                    d[j] = v[at(i - 1, j)];
                    v[at(i, j)] = T::zero();
                    v[at(j, i)] = T::zero();
                }
            } else {
                for dk in d.iter_mut().take(i) {
                    *dk = *dk / scale;
                    h = h + *dk * *dk;
                }
                let f = d[i - 1];
                let mut g = h.sqrt();
                if f > T::zero() {
                    g = -g;
                }
                e[i] = scale * g;
                h = h - f * g;
                d[i - 1] = f - g;
                for ej in e.iter_mut().take(i) {
                    *ej = T::zero();
                }
                for j in 0..i {
                    let f = d[j];
                    v[at(j, i)] = f;
                    let mut g = e[j] + v[at(j, j)] * f;
                    for k in (j + 1)..i {
                        let vkj = v[at(k, j)];
                        g = g + vkj * d[k];
                        e[k] = e[k] + vkj * f;
                    }
                    e[j] = g;
                }
                let mut f = T::zero();
                for j in 0..i {
                    e[j] = e[j] / h;
                    f = f + e[j] * d[j];
                }
                let hh = f / (h + h);
                for j in 0..i {
                    e[j] = e[j] - hh * d[j];
                }
                for j in 0..i {
                    let f = d[j];
                    let g = e[j];
                    for k in j..i {
                        let idx = at(k, j);
                        v[idx] = v[idx] - (f * e[k] + g * d[k]);
                    }
                    d[j] = v[at(i - 1, j)];
                    v[at(i, j)] = T::zero();
                }
            }
            d[i] = h;
        }
        let diag: Vec<T> = (0..n).map(|i| v[at(i, i)]).collect();
        e[0] = T::zero();
        Tridiagonal { n, diag, off: e, reflectors: v, h: d }
    }

    /// Applies `Q` to a vector in place.
    fn apply_q(&self, z: &mut [T]) {
        let n = self.n;
        for i in 1..n {
            let h = self.h[i];
            if h == T::zero() {
                continue;
            }
            let mut g = T::zero();
            for (k, zk) in z.iter().enumerate().take(i) {
                g = g + self.reflectors[k * n + i] * *zk;
            }
            let g = g / h;
            for (k, zk) in z.iter_mut().enumerate().take(i) {
                *zk = *zk - g * self.reflectors[k * n + i];
            }
        }
    }

    fn top_pairs_full(&self, k: usize) -> (Vec<T>, Array2<T>) {
        let n = self.n;
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        let mut z = vec![T::zero(); n * n];
        for i in 0..n {
            z[i * n + i] = T::one();
        }
        tql(&mut d, &mut e, Some(&mut z));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).expect("finite eigenvalues"));
        let mut values = Vec::with_capacity(k);
        let mut vectors = Array2::<T>::zeros((n, k));
        let mut col = vec![T::zero(); n];
        for (dst, &src) in order.iter().take(k).enumerate() {
            values.push(d[src]);
            for (r, c) in col.iter_mut().enumerate() {
                *c = z[r * n + src];
            }
            self.apply_q(&mut col);
            for (r, c) in col.iter().enumerate() {
                vectors[[r, dst]] = *c;
            }
        }
        (values, vectors)
    }

    /// Leading eigenvectors by inverse iteration on the tridiagonal matrix.
    /// Returns `None` when any pair misses the residual or orthogonality check.
    fn top_pairs_inverse_iteration(&self, k: usize) -> Option<(Vec<T>, Array2<T>)> {
        let n = self.n;
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        tql(&mut d, &mut e, None);
        d.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
        let values: Vec<T> = d[..k].to_vec();

        let mut norm = T::zero();
        for i in 0..n {
            let row =
                self.diag[i].abs() + self.off[i].abs() + if i + 1 < n { self.off[i + 1].abs() } else { T::zero() };
            norm = norm.max(row);
        }
        if norm == T::zero() {
            return None;
        }
        let eps = T::epsilon();
        let cluster_gap = T::lit(1e-3) * norm;
        let mut tri_vecs: Vec<Vec<T>> = Vec::with_capacity(k);
        for (idx, &lambda) in values.iter().enumerate() {
            let cluster_start =
                (0..idx).rev().take_while(|&j| (values[j] - lambda).abs() <= cluster_gap).last().unwrap_or(idx);
            let shift = lambda + eps * norm * T::lit(4.0) * T::from_usize_lossy(idx - cluster_start + 1);
            let lu = ShiftedTridiagLu::factor(&self.diag, &self.off, shift, eps * norm);
            let mut x = start_vector::<T>(n, idx);
            for _ in 0..4 {
                lu.solve(&mut x);
                for prev in &tri_vecs[cluster_start..idx] {
                    let dot: T = x.iter().zip(prev.iter()).map(|(a, b)| *a * *b).sum();
                    for (xi, pi) in x.iter_mut().zip(prev.iter()) {
                        *xi = *xi - dot * *pi;
                    }
                }
                let nrm = x.iter().map(|v| *v * *v).sum::<T>().sqrt();
                if !(nrm > T::zero()) || !nrm.is_finite() {
                    return None;
                }
                for xi in x.iter_mut() {
                    *xi = *xi / nrm;
                }
            }
            // residual ‖Tx − λx‖ relative to ‖T‖
            let mut res = T::zero();
            for i in 0..n {
                let mut r = (self.diag[i] - lambda) * x[i];
                if i > 0 {
                    r = r + self.off[i] * x[i - 1];
                }
                if i + 1 < n {
                    r = r + self.off[i + 1] * x[i + 1];
                }
                res = res + r * r;
            }
            let tol = T::lit(1e3) * T::from_usize_lossy(n).sqrt() * eps * norm;
            if res.sqrt() > tol {
                return None;
            }
            for prev in &tri_vecs {
                let dot: T = x.iter().zip(prev.iter()).map(|(a, b)| *a * *b).sum();
                if dot.abs() > T::lit(1e3) * T::from_usize_lossy(n).sqrt() * eps {
                    return None;
                }
            }
            tri_vecs.push(x);
        }
        let mut vectors = Array2::<T>::zeros((n, k));
        for (j, mut x) in tri_vecs.into_iter().enumerate() {
            self.apply_q(&mut x);
            for (r, v) in x.iter().enumerate() {
                vectors[[r, j]] = *v;
            }
        }
        Some((values, vectors))
    }
}

fn start_vector<T: Scalar>(n: usize, idx: usize) -> Vec<T> {
    // fixed pseudo-random start, distinct per requested index
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15 ^ ((idx as u64 + 1).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    (0..n)
        .map(|_| {
            state ^= state >> 30;
            state = state.wrapping_mul(0xBF58_476D_1CE4_E5B9);
            state ^= state >> 27;
            state = state.wrapping_mul(0x94D0_49BB_1331_11EB);
            state ^= state >> 31;
            T::lit(0.5 + (state >> 11) as f64 / (1u64 << 53) as f64)
        })
        .collect()
}

/// LU factorization with partial pivoting of `T − σI` for a symmetric
/// tridiagonal `T`.
struct ShiftedTridiagLu<T> {
    diag: Vec<T>,
    sup1: Vec<T>,
    sup2: Vec<T>,
    mult: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Scalar> ShiftedTridiagLu<T> {
    fn factor(diag: &[T], off: &[T], shift: T, tiny: T) -> Self {
        let n = diag.len();
        let mut dd: Vec<T> = diag.iter().map(|&v| v - shift).collect();
        let mut ss: Vec<T> = (0..n).map(|i| if i + 1 < n { off[i + 1] } else { T::zero() }).collect();
        let mut s2 = vec![T::zero(); n];
        let mut mult = vec![T::zero(); n];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            let sub = off[i + 1];
            if dd[i].abs() >= sub.abs() {
                if dd[i] == T::zero() {
                    dd[i] = tiny;
                }
                let m = sub / dd[i];
                mult[i] = m;
                dd[i + 1] = dd[i + 1] - m * ss[i];
            } else {
                let m = dd[i] / sub;
                mult[i] = m;
                swapped[i] = true;
                let old_sup = ss[i];
                let next_diag = dd[i + 1];
                let next_sup = ss[i + 1];
                dd[i] = sub;
                ss[i] = next_diag;
                s2[i] = next_sup;
                dd[i + 1] = old_sup - m * next_diag;
                ss[i + 1] = -m * next_sup;
            }
        }
        if n > 0 && dd[n - 1] == T::zero() {
            dd[n - 1] = tiny;
        }
        ShiftedTridiagLu { diag: dd, sup1: ss, sup2: s2, mult, swapped }
    }

    fn solve(&self, x: &mut [T]) {
        let n = x.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] = x[i + 1] - self.mult[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            if i + 1 < n {
                v = v - self.sup1[i] * x[i + 1];
            }
            if i + 2 < n {
                v = v - self.sup2[i] * x[i + 2];
            }
            x[i] = v / self.diag[i];
        }
    }
}

/// Implicit QL on a symmetric tridiagonal matrix (EISPACK `tql2`).
///
/// `d` holds the diagonal and receives the (unsorted) eigenvalues; `e[i]`
/// couples `i-1` and `i`. When `z` is given (row-major `n×n`), the rotations
/// are accumulated into its columns.
fn tql<T: Scalar>(d: &mut [T], e: &mut [T], mut z: Option<&mut [T]>) {
    let n = d.len();
    if n == 0 {
        return;
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = T::lit(2.0);
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        for k in 0..n {
                            let row = k * n;
                            let zh = z[row + i + 1];
                            let zi = z[row + i];
                            z[row + i + 1] = s * zi + c * zh;
                            z[row + i] = c * zi - s * zh;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = T::zero();
    }
}
