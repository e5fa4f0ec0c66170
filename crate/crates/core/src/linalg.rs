//! Small dense linear algebra: fixed-capacity `n x n` real matrices
//! (`n <= 8`) for per-site metric work, a heap-backed symmetric
//! eigensolver for principal-symbol quadratic forms, and a few generic
//! helpers shared by the spinor modules.
//!
//! Everything here is deterministic: the Jacobi sweeps visit pivots in a
//! fixed cyclic order, so eigendecompositions are bit-reproducible across
//! runs and platforms with IEEE-754 `f64`.

use crate::error::Error;
use crate::fm;
use crate::scalar::Scalar;
use crate::{Result, MAX_N};
use alloc::vec;
use alloc::vec::Vec;

/// Number of independent entries of a symmetric `n x n` matrix.
#[inline(always)]
pub const fn sym_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Packed index of the `(i, j)` entry, `i <= j`, of a symmetric matrix
/// stored as its upper triangle in row-major order.
#[inline(always)]
pub const fn sym_idx(n: usize, i: usize, j: usize) -> usize {
    // callers guarantee i <= j < n
    i * n - (i * i - i) / 2 + (j - i)
}

/// Packed index for unordered `(i, j)`.
#[inline(always)]
pub const fn sym_idx_any(n: usize, i: usize, j: usize) -> usize {
    if i <= j {
        sym_idx(n, i, j)
    } else {
        sym_idx(n, j, i)
    }
}

/// Number of strictly increasing index pairs `c < d` in `0..n`.
#[inline(always)]
pub const fn pair_len(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Packed index of the pair `(c, d)` with `c < d`.
#[inline(always)]
pub const fn pair_idx(n: usize, c: usize, d: usize) -> usize {
    c * n - c * (c + 1) / 2 + (d - c - 1)
}

/// Fixed-capacity square matrix of side `n <= MAX_N`.
#[derive(Clone, Copy, Debug)]
pub struct MatN {
    pub n: usize,
    pub a: [[f64; MAX_N]; MAX_N],
}

impl MatN {
    #[inline]
    pub fn zeros(n: usize) -> Self {
        MatN {
            n,
            a: [[0.0; MAX_N]; MAX_N],
        }
    }

    #[inline]
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    /// Reads a packed symmetric upper triangle.
    #[inline]
    pub fn from_sym_slice(n: usize, s: &[f64]) -> Self {
        debug_assert_eq!(s.len(), sym_len(n));
        let mut m = Self::zeros(n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                m.a[i][j] = s[k];
                m.a[j][i] = s[k];
                k += 1;
            }
        }
        m
    }

    /// Writes the upper triangle into a packed slice.
    #[inline]
    pub fn to_sym_slice(&self, s: &mut [f64]) {
        debug_assert_eq!(s.len(), sym_len(self.n));
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                s[k] = 0.5 * (self.a[i][j] + self.a[j][i]);
                k += 1;
            }
        }
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] = self.a[j][i];
            }
        }
        m
    }

    #[inline]
    pub fn add(&self, other: &Self) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] += other.a[i][j];
            }
        }
        m
    }

    #[inline]
    pub fn sub(&self, other: &Self) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] -= other.a[i][j];
            }
        }
        m
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] *= s;
            }
        }
        m
    }

    #[inline]
    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i][k];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    m.a[i][j] += aik * other.a[k][j];
                }
            }
        }
        m
    }

    /// `self * v` for a dense vector.
    #[inline]
    pub fn apply(&self, v: &[f64; MAX_N]) -> [f64; MAX_N] {
        let n = self.n;
        let mut out = [0.0; MAX_N];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.a[i][j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    #[inline]
    pub fn symmetrize(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] = 0.5 * (self.a[i][j] + self.a[j][i]);
            }
        }
        m
    }

    #[inline]
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = fm::max(m, fm::abs(self.a[i][j]));
            }
        }
        m
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        let mut t = 0.0;
        for i in 0..self.n {
            t += self.a[i][i];
        }
        t
    }

    /// Frobenius inner product `sum_ij A_ij B_ij` (the tensor metric on
    /// bilinear forms over an orthonormal basis).
    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        let mut t = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                t += self.a[i][j] * other.a[i][j];
            }
        }
        t
    }

    /// Cholesky factorization `self = L L^T`; fails on non-SPD input.
    pub fn cholesky(&self) -> Result<MatN> {
        let n = self.n;
        let mut l = MatN::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.a[i][j];
                for k in 0..j {
                    sum -= l.a[i][k] * l.a[j][k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::NotPositiveDefinite {
                            what: "cholesky",
                            min_eigenvalue: sum,
                        });
                    }
                    l.a[i][i] = fm::sqrt(sum);
                } else {
                    l.a[i][j] = sum / l.a[j][j];
                }
            }
        }
        Ok(l)
    }

    /// Inverse of a symmetric positive definite matrix via Cholesky.
    pub fn spd_inverse(&self) -> Result<MatN> {
        let n = self.n;
        let l = self.cholesky()?;
        // Invert the lower-triangular factor, then inv = L^{-T} L^{-1}.
        let mut li = MatN::zeros(n);
        for i in 0..n {
            li.a[i][i] = 1.0 / l.a[i][i];
            for j in 0..i {
                let mut sum = 0.0;
                for k in j..i {
                    sum += l.a[i][k] * li.a[k][j];
                }
                li.a[i][j] = -sum / l.a[i][i];
            }
        }
        let mut inv = MatN::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = 0.0;
                for k in i..n {
                    sum += li.a[k][i] * li.a[k][j];
                }
                inv.a[i][j] = sum;
                inv.a[j][i] = sum;
            }
        }
        Ok(inv)
    }

    /// Determinant of an SPD matrix via Cholesky.
    pub fn spd_det(&self) -> Result<f64> {
        let l = self.cholesky()?;
        let mut d = 1.0;
        for i in 0..self.n {
            d *= l.a[i][i];
        }
        Ok(d * d)
    }

    /// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order and the orthonormal
    /// eigenvectors as matching columns. The input is symmetrized first;
    /// callers must not rely on results for significantly non-symmetric
    /// input.
    pub fn sym_eigen(&self) -> ([f64; MAX_N], MatN) {
        let n = self.n;
        let mut a = self.symmetrize();
        let mut v = MatN::identity(n);
        const MAX_SWEEPS: usize = 64;
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a.a[i][j] * a.a[i][j];
                }
            }
            if off <= 1e-30 * (1.0 + a.max_abs() * a.max_abs()) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.a[p][q];
                    if fm::abs(apq) <= 1e-300 {
                        continue;
                    }
                    let theta = (a.a[q][q] - a.a[p][p]) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + fm::hypot(1.0, theta))
                    } else {
                        1.0 / (theta - fm::hypot(1.0, theta))
                    };
                    let c = 1.0 / fm::hypot(1.0, t);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.a[k][p];
                        let akq = a.a[k][q];
                        a.a[k][p] = c * akp - s * akq;
                        a.a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a.a[p][k];
                        let aqk = a.a[q][k];
                        a.a[p][k] = c * apk - s * aqk;
                        a.a[q][k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v.a[k][p];
                        let vkq = v.a[k][q];
                        v.a[k][p] = c * vkp - s * vkq;
                        v.a[k][q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        // Sort ascending with matching columns (insertion sort: n <= 8).
        let mut vals = [0.0; MAX_N];
        for i in 0..n {
            vals[i] = a.a[i][i];
        }
        for i in 1..n {
            let mut j = i;
            while j > 0 && vals[j - 1] > vals[j] {
                vals.swap(j - 1, j);
                for k in 0..n {
                    v.a[k].swap(j - 1, j);
                }
                j -= 1;
            }
        }
        (vals, v)
    }

    /// Smallest eigenvalue of a symmetric matrix.
    pub fn sym_min_eigenvalue(&self) -> f64 {
        self.sym_eigen().0[0]
    }

    /// `f(self)` for a symmetric matrix through its eigendecomposition.
    fn sym_map(&self, f: impl Fn(f64) -> f64) -> MatN {
        let n = self.n;
        let (vals, v) = self.sym_eigen();
        let mut out = MatN::zeros(n);
        for k in 0..n {
            let fk = f(vals[k]);
            for i in 0..n {
                for j in 0..n {
                    out.a[i][j] += fk * v.a[i][k] * v.a[j][k];
                }
            }
        }
        out
    }

    /// Symmetric square root of an SPD matrix.
    pub fn spd_sqrt(&self) -> Result<MatN> {
        let min = self.sym_min_eigenvalue();
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                what: "spd_sqrt",
                min_eigenvalue: min,
            });
        }
        Ok(self.sym_map(fm::sqrt))
    }

    /// Symmetric inverse square root of an SPD matrix.
    pub fn spd_inv_sqrt(&self) -> Result<MatN> {
        let min = self.sym_min_eigenvalue();
        if min <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                what: "spd_inv_sqrt",
                min_eigenvalue: min,
            });
        }
        Ok(self.sym_map(|x| 1.0 / fm::sqrt(x)))
    }

    /// Solves the Sylvester equation `B X + X B = C` for symmetric `C`
    /// and SPD `B` (eigenvalue sums are then bounded away from zero).
    pub fn sylvester_spd(b: &MatN, c: &MatN) -> Result<MatN> {
        let n = b.n;
        let (vals, v) = b.sym_eigen();
        if vals[0] <= 0.0 {
            return Err(Error::NotPositiveDefinite {
                what: "sylvester_spd",
                min_eigenvalue: vals[0],
            });
        }
        // Rotate C into the eigenbasis, divide entrywise, rotate back.
        let ct = v.transpose().matmul(c).matmul(&v);
        let mut x = MatN::zeros(n);
        for i in 0..n {
            for j in 0..n {
                x.a[i][j] = ct.a[i][j] / (vals[i] + vals[j]);
            }
        }
        Ok(v.matmul(&x).matmul(&v.transpose()))
    }
}

/// Heap-backed square matrix used by the principal-symbol laboratory,
/// where quadratic forms reach side `n(n+1)/2 + 2 dim - 1 <= 67`.
#[derive(Clone, Debug)]
pub struct DMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl DMat {
    pub fn zeros(n: usize) -> Self {
        DMat {
            n,
            a: vec![0.0; n * n],
        }
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline(always)]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut m = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                m = fm::max(m, fm::abs(self.get(i, j) - self.get(j, i)));
            }
        }
        m
    }

    /// Jacobi eigendecomposition of a symmetric matrix; eigenvalues
    /// ascending, orthonormal eigenvectors as columns of the returned
    /// matrix.
    pub fn sym_eigen(&self) -> (Vec<f64>, DMat) {
        let n = self.n;
        let mut a = self.clone();
        // Symmetrize defensively.
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (a.get(i, j) + a.get(j, i));
                a.set(i, j, m);
                a.set(j, i, m);
            }
        }
        let mut v = DMat::zeros(n);
        for i in 0..n {
            v.set(i, i, 1.0);
        }
        let mut scale = 0.0f64;
        for i in 0..n {
            scale = fm::max(scale, fm::abs(a.get(i, i)));
            for j in (i + 1)..n {
                scale = fm::max(scale, fm::abs(a.get(i, j)));
            }
        }
        let tol = 1e-15 * (1.0 + scale);
        const MAX_SWEEPS: usize = 128;
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off = fm::max(off, fm::abs(a.get(i, j)));
                }
            }
            if off <= tol * 1e-3 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if fm::abs(apq) <= 1e-300 {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + fm::hypot(1.0, theta))
                    } else {
                        1.0 / (theta - fm::hypot(1.0, theta))
                    };
                    let c = 1.0 / fm::hypot(1.0, t);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
        let mut vals: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
        // Stable insertion sort carrying columns.
        for i in 1..n {
            let mut j = i;
            while j > 0 && vals[j - 1] > vals[j] {
                vals.swap(j - 1, j);
                for k in 0..n {
                    let tmp = v.get(k, j - 1);
                    let t2 = v.get(k, j);
                    v.set(k, j - 1, t2);
                    v.set(k, j, tmp);
                }
                j -= 1;
            }
        }
        (vals, v)
    }
}

/// In-place modified Gram-Schmidt; returns the retained rank. Vectors with
/// residual norm below `tol` are dropped. Deterministic (input order kept).
pub fn orthonormalize(vecs: &mut Vec<Vec<f64>>, tol: f64) -> usize {
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(vecs.len());
    for v in vecs.iter() {
        let mut w = v.clone();
        for _ in 0..2 {
            // two passes for numerical orthogonality
            for u in &kept {
                let d: f64 = u.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
                for (wi, ui) in w.iter_mut().zip(u.iter()) {
                    *wi -= d * ui;
                }
            }
        }
        let norm = fm::sqrt(w.iter().map(|x| x * x).sum::<f64>());
        if norm > tol {
            for wi in w.iter_mut() {
                *wi /= norm;
            }
            kept.push(w);
        }
    }
    let rank = kept.len();
    *vecs = kept;
    rank
}

/// Dense `dim x dim` matrix-vector product over spinor scalars.
#[inline]
pub fn matvec<S: Scalar>(dim: usize, m: &[S], v: &[S], out: &mut [S]) {
    debug_assert_eq!(m.len(), dim * dim);
    debug_assert_eq!(v.len(), dim);
    debug_assert_eq!(out.len(), dim);
    for i in 0..dim {
        let row = &m[i * dim..(i + 1) * dim];
        let mut acc = S::ZERO;
        for j in 0..dim {
            acc += row[j] * v[j];
        }
        out[i] = acc;
    }
}

/// Dense matrix product over spinor scalars.
pub fn matmul<S: Scalar>(dim: usize, a: &[S], b: &[S]) -> Vec<S> {
    debug_assert_eq!(a.len(), dim * dim);
    debug_assert_eq!(b.len(), dim * dim);
    let mut out = vec![S::ZERO; dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == S::ZERO {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    out
}

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
/// Adequate for the well-conditioned skew matrices exercised in tests.
pub fn mat_exp<S: Scalar>(dim: usize, m: &[S]) -> Vec<S> {
    debug_assert_eq!(m.len(), dim * dim);
    let norm: f64 = m.iter().map(|x| x.abs2()).sum::<f64>();
    let norm = fm::sqrt(norm);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled: Vec<S> = m.iter().map(|x| x.scale(scale)).collect();
    // exp(A) = sum A^k / k!
    let mut result = vec![S::ZERO; dim * dim];
    for i in 0..dim {
        result[i * dim + i] = S::ONE;
    }
    let mut term = result.clone();
    for k in 1..=16usize {
        term = matmul(dim, &term, &scaled);
        let inv = 1.0 / (k as f64);
        for t in term.iter_mut() {
            *t = t.scale(inv);
        }
        for (r, t) in result.iter_mut().zip(term.iter()) {
            *r += *t;
        }
    }
    for _ in 0..squarings {
        result = matmul(dim, &result, &result);
    }
    result
}
