//! Irreducible Clifford representations with skew-adjoint generators.
//!
//! Conventions: generators satisfy
//! `gamma_a gamma_b + gamma_b gamma_a = -2 delta_ab`,
//! are skew-adjoint for the real inner product `<.,.> = Re h(.,.)`,
//! and a `p`-form acts by
//! `alpha . psi = sum_{i1<...<ip} alpha(E_i1,..,E_ip) gamma_i1 ... gamma_ip psi`,
//! which for decomposables gives `(X ^ Y).psi = X.(Y.psi) + g(X,Y) psi`.
//!
//! Two constructions are provided:
//!
//! * [`CliffordRep::complex`] — the standard tensor-product (Pauli ladder)
//!   representation on `C^{2^{n/2}}` for `2 <= n <= 8`;
//! * [`CliffordRep::real_seven`] — the real representation on `R^8` in
//!   dimension seven built from octonion left multiplication, normalized
//!   so that `gamma_1 ... gamma_7 = +Id` (the volume form acts as `+1`).
//!
//! Every generator in both constructions is a signed permutation matrix;
//! the representation caches that monomial structure and the pairwise
//! products `gamma_c gamma_d`, which the lattice kernels use heavily.

use crate::error::Error;
use crate::linalg::{matmul, pair_idx, pair_len};
use crate::scalar::{inner_herm, inner_re, Scalar};
use crate::{Result, MAX_DIM};
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

/// Coefficient kind of a representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReprKind {
    Complex,
    Real,
}

/// A signed-permutation ("monomial") matrix in column form: column `j`
/// has its unique nonzero entry `val[j]` in row `row[j]`.
#[derive(Clone, Debug)]
pub struct Monomial<S: Scalar> {
    pub row: [u8; MAX_DIM],
    pub val: [S; MAX_DIM],
}

impl<S: Scalar> Monomial<S> {
    fn identity(dim: usize) -> Self {
        let mut m = Monomial {
            row: [0; MAX_DIM],
            val: [S::ZERO; MAX_DIM],
        };
        for j in 0..dim {
            m.row[j] = j as u8;
            m.val[j] = S::ONE;
        }
        m
    }

    /// Extracts the monomial structure of a dense matrix; fails if any
    /// column does not have exactly one nonzero entry or the rows do not
    /// form a permutation.
    fn from_dense(dim: usize, dense: &[S]) -> Option<Self> {
        let mut m = Monomial {
            row: [0; MAX_DIM],
            val: [S::ZERO; MAX_DIM],
        };
        let mut seen = [false; MAX_DIM];
        for j in 0..dim {
            let mut hits = 0;
            for i in 0..dim {
                let v = dense[i * dim + j];
                if v != S::ZERO {
                    hits += 1;
                    m.row[j] = i as u8;
                    m.val[j] = v;
                }
            }
            if hits != 1 {
                return None;
            }
            let r = m.row[j] as usize;
            if seen[r] {
                return None;
            }
            seen[r] = true;
        }
        Some(m)
    }

    /// Monomial product `self * other` (composition of the linear maps).
    fn compose(&self, other: &Self, dim: usize) -> Self {
        let mut m = Monomial {
            row: [0; MAX_DIM],
            val: [S::ZERO; MAX_DIM],
        };
        for j in 0..dim {
            let mid = other.row[j] as usize;
            m.row[j] = self.row[mid];
            m.val[j] = self.val[mid] * other.val[j];
        }
        m
    }

    /// `out = M psi`.
    #[inline(always)]
    pub fn apply(&self, dim: usize, psi: &[S], out: &mut [S]) {
        for j in 0..dim {
            out[self.row[j] as usize] = self.val[j] * psi[j];
        }
    }

    /// `out += c * (M psi)` for a real coefficient.
    #[inline(always)]
    pub fn apply_add_scaled(&self, dim: usize, c: f64, psi: &[S], out: &mut [S]) {
        for j in 0..dim {
            out[self.row[j] as usize] += (self.val[j] * psi[j]).scale(c);
        }
    }

    /// Real inner product `<phi, M psi>` without materializing `M psi`.
    #[inline(always)]
    pub fn inner_re(&self, dim: usize, phi: &[S], psi: &[S]) -> f64 {
        let mut acc = 0.0;
        for j in 0..dim {
            acc += (phi[self.row[j] as usize].conj() * self.val[j] * psi[j]).re();
        }
        acc
    }

    fn to_dense(&self, dim: usize) -> Vec<S> {
        let mut d = vec![S::ZERO; dim * dim];
        for j in 0..dim {
            d[self.row[j] as usize * dim + j] = self.val[j];
        }
        d
    }
}

/// An irreducible Clifford representation in dimension `n`.
#[derive(Clone, Debug)]
pub struct CliffordRep<S: Scalar> {
    n: usize,
    dim: usize,
    dense: Vec<Vec<S>>,
    mono: Vec<Monomial<S>>,
    /// `gamma_c gamma_d` for `c < d`, indexed by [`pair_idx`].
    pairs: Vec<Monomial<S>>,
}

impl CliffordRep<Complex64> {
    /// The tensor-product representation on `C^{2^{floor(n/2)}}`.
    pub fn complex(n: usize) -> Result<Self> {
        if !(2..=8).contains(&n) {
            return Err(Error::UnsupportedDimension {
                n,
                what: "complex Clifford representation",
            });
        }
        let m = n / 2;
        let dim = 1usize << m;
        let i = Complex64::new(0.0, 1.0);
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let s1 = [o, l, l, o];
        let s2 = [o, -i, i, o];
        let s3 = [l, o, o, -l];
        let id2 = [l, o, o, l];
        let factor = |slot: usize, which: &[Complex64; 4]| -> Vec<Complex64> {
            // sigma3 on slots below `slot`, `which` at `slot`, identity above.
            let mut acc = vec![l];
            let mut acc_dim = 1usize;
            for pos in 0..m {
                let f: &[Complex64; 4] = if pos < slot {
                    &s3
                } else if pos == slot {
                    which
                } else {
                    &id2
                };
                acc = kron(acc_dim, &acc, 2, f);
                acc_dim *= 2;
            }
            acc
        };
        let mut dense: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        for j in 0..m {
            dense.push(scale_matrix(&factor(j, &s1), i));
            dense.push(scale_matrix(&factor(j, &s2), i));
        }
        if n % 2 == 1 {
            // sigma3 on every slot.
            let mut acc = vec![l];
            let mut acc_dim = 1usize;
            for _ in 0..m {
                acc = kron(acc_dim, &acc, 2, &s3);
                acc_dim *= 2;
            }
            dense.push(scale_matrix(&acc, i));
        }
        Self::from_dense(n, dim, dense)
    }
}

impl CliffordRep<f64> {
    /// The real representation on `R^8` in dimension seven, with
    /// generators given by octonion left multiplication and the sign of
    /// one generator fixed so that `gamma_1 ... gamma_7 = +Id`.
    pub fn real_seven() -> Self {
        // Octonions as Cayley-Dickson pairs of quaternions:
        // basis 0..3 = (1,i,j,k | 0), basis 4..7 = (0 | 1,i,j,k),
        // (a,b)(c,d) = (ac - conj(d) b, d a + b conj(c)).
        fn qmul(a: usize, b: usize) -> (usize, i32) {
            // quaternion basis products, indices 0=1, 1=i, 2=j, 3=k
            const TBL: [[(usize, i32); 4]; 4] = [
                [(0, 1), (1, 1), (2, 1), (3, 1)],
                [(1, 1), (0, -1), (3, 1), (2, -1)],
                [(2, 1), (3, -1), (0, -1), (1, 1)],
                [(3, 1), (2, 1), (1, -1), (0, -1)],
            ];
            TBL[a][b]
        }
        fn qconj(a: usize) -> i32 {
            if a == 0 {
                1
            } else {
                -1
            }
        }
        // e_x * e_y for octonion basis indices.
        fn omul(x: usize, y: usize) -> (usize, i32) {
            match (x < 4, y < 4) {
                (true, true) => qmul(x, y),
                (true, false) => {
                    // (a,0)(0,d) = (0, d a)
                    let (idx, s) = qmul(y - 4, x);
                    (idx + 4, s)
                }
                (false, true) => {
                    // (0,b)(c,0) = (0, b conj(c))
                    let (idx, s) = qmul(x - 4, y);
                    (idx + 4, s * qconj(y))
                }
                (false, false) => {
                    // (0,b)(0,d) = (-conj(d) b, 0)
                    let (idx, s) = qmul(y - 4, x - 4);
                    (idx, -s * qconj(y - 4))
                }
            }
        }
        let dim = 8usize;
        let mut dense: Vec<Vec<f64>> = Vec::with_capacity(7);
        for a in 1..=7usize {
            let mut g = vec![0.0f64; dim * dim];
            for j in 0..dim {
                let (idx, s) = omul(a, j);
                g[idx * dim + j] = s as f64;
            }
            dense.push(g);
        }
        // Orient the representation: flip one generator if the full
        // product is -Id so that the volume form acts as +1.
        let mut prod = vec![0.0f64; dim * dim];
        for k in 0..dim {
            prod[k * dim + k] = 1.0;
        }
        for g in &dense {
            prod = matmul(dim, &prod, g);
        }
        if prod[0] < 0.0 {
            for v in dense[6].iter_mut() {
                *v = -*v;
            }
        }
        Self::from_dense(7, dim, dense).expect("octonion construction is monomial")
    }
}

impl<S: Scalar> CliffordRep<S> {
    fn from_dense(n: usize, dim: usize, dense: Vec<Vec<S>>) -> Result<Self> {
        let mut mono = Vec::with_capacity(n);
        for g in &dense {
            let m = Monomial::from_dense(dim, g).ok_or(Error::Shape {
                what: "Clifford generator is not a signed permutation matrix",
            })?;
            mono.push(m);
        }
        let mut pairs = Vec::with_capacity(pair_len(n));
        for c in 0..n {
            for d in (c + 1)..n {
                pairs.push(mono[c].compose(&mono[d], dim));
            }
        }
        Ok(CliffordRep {
            n,
            dim,
            dense,
            mono,
            pairs,
        })
    }

    /// Dimension of the underlying torus.
    #[inline(always)]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Spinor dimension over the coefficient scalar
    /// (`2^{floor(n/2)}` in both shipped constructions).
    #[inline(always)]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficient kind.
    pub fn kind(&self) -> ReprKind {
        if S::IS_COMPLEX {
            ReprKind::Complex
        } else {
            ReprKind::Real
        }
    }

    /// Real dimension of the tangent space `phi_perp` to the unit-spinor
    /// sphere at a point.
    pub fn tangent_dim(&self) -> usize {
        S::LANES * self.dim - 1
    }

    /// Dense generator matrix (row-major `dim x dim`).
    #[inline(always)]
    pub fn gamma(&self, a: usize) -> &[S] {
        &self.dense[a]
    }

    /// Monomial form of `gamma_a`.
    #[inline(always)]
    pub fn gamma_mono(&self, a: usize) -> &Monomial<S> {
        &self.mono[a]
    }

    /// Monomial form of `gamma_c gamma_d`, `c < d`.
    #[inline(always)]
    pub fn gamma_pair(&self, c: usize, d: usize) -> &Monomial<S> {
        debug_assert!(c < d);
        &self.pairs[pair_idx(self.n, c, d)]
    }

    /// `out = gamma_a psi`.
    #[inline(always)]
    pub fn apply_gamma(&self, a: usize, psi: &[S], out: &mut [S]) {
        self.mono[a].apply(self.dim, psi, out);
    }

    /// Clifford multiplication `out = X . psi` by a vector in orthonormal
    /// frame components.
    pub fn mul_vector(&self, x: &[f64], psi: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.n);
        for o in out.iter_mut().take(self.dim) {
            *o = S::ZERO;
        }
        for a in 0..self.n {
            if x[a] != 0.0 {
                self.mono[a].apply_add_scaled(self.dim, x[a], psi, out);
            }
        }
    }

    /// Monomial of the ordered product `gamma_{i_1} ... gamma_{i_p}`.
    pub fn monomial_product(&self, indices: &[usize]) -> Monomial<S> {
        let mut m = Monomial::identity(self.dim);
        for &i in indices.iter().rev() {
            m = self.mono[i].compose(&m, self.dim);
        }
        m
    }

    /// Form action `out = alpha . psi`
    /// (sum of `alpha_{i1..ip} gamma_{i1} .. gamma_{ip} psi` over
    /// strictly increasing tuples). Validates antisymmetry of `alpha`.
    pub fn mul_form(&self, alpha: &AntisymForm, psi: &[S], out: &mut [S]) -> Result<()> {
        if alpha.n != self.n {
            return Err(Error::Shape {
                what: "form dimension does not match representation",
            });
        }
        alpha.validate(1e-12)?;
        for o in out.iter_mut().take(self.dim) {
            *o = S::ZERO;
        }
        if alpha.p == 0 {
            for (o, p) in out.iter_mut().zip(psi.iter()) {
                *o = p.scale(alpha.data[0]);
            }
            return Ok(());
        }
        if alpha.p > self.n {
            return Ok(());
        }
        let mut idx: Vec<usize> = (0..alpha.p).collect();
        loop {
            let c = alpha.get(&idx);
            if c != 0.0 {
                let m = self.monomial_product(&idx);
                m.apply_add_scaled(self.dim, c, psi, out);
            }
            if !next_increasing(&mut idx, self.n) {
                break;
            }
        }
        Ok(())
    }

    /// Real inner product.
    #[inline(always)]
    pub fn inner(&self, psi: &[S], chi: &[S]) -> f64 {
        inner_re(psi, chi)
    }

    /// Hermitian inner product.
    #[inline(always)]
    pub fn inner_herm(&self, psi: &[S], chi: &[S]) -> S {
        inner_herm(psi, chi)
    }

    /// Ordered product `gamma_1 gamma_2 ... gamma_n` as a dense matrix.
    pub fn volume_product(&self) -> Vec<S> {
        let indices: Vec<usize> = (0..self.n).collect();
        self.monomial_product(&indices).to_dense(self.dim)
    }

    /// The complex volume form `i^{n(n+1)/2} gamma_1 ... gamma_n`.
    ///
    /// For real coefficient types this exists only when the phase is
    /// real, i.e. `n(n+1)/2` even (true for `n = 7`).
    pub fn complex_volume(&self) -> Result<Vec<S>> {
        let k = (self.n * (self.n + 1) / 2) % 4;
        let prod = self.volume_product();
        let phased = match k {
            0 => prod,
            2 => prod.iter().map(|v| -*v).collect(),
            _ => {
                // phase is +-i
                let mut out = Vec::with_capacity(prod.len());
                for v in prod {
                    let vi = v.try_mul_i().ok_or(Error::InvalidParameter {
                        what: "complex volume phase is imaginary; a complex representation is required",
                    })?;
                    out.push(if k == 1 { vi } else { -vi });
                }
                out
            }
        };
        Ok(phased)
    }

    /// Finds an antilinear structure `J(psi) = C conj(psi)` with
    /// `J^2 = +Id`, commuting with all even products `gamma_a gamma_b`
    /// and isometric, by exhaustive search over ordered generator
    /// products `C = gamma_{s_1} ... gamma_{s_k}`.
    ///
    /// Exists for `n mod 8` in `{0, 1, 2, 6, 7}`; errors otherwise.
    pub fn real_structure(&self) -> Result<RealStructure<S>> {
        let n = self.n;
        let dim = self.dim;
        if !S::IS_COMPLEX {
            // Real coefficients: conjugation itself is the structure.
            return Ok(RealStructure {
                matrix: Monomial::identity(dim).to_dense(dim),
                subset: Vec::new(),
                vector_sign: 1.0,
            });
        }
        let tol = 1e-12;
        for mask in 0u32..(1u32 << n) {
            let subset: Vec<usize> = (0..n).filter(|a| mask >> a & 1 == 1).collect();
            let c = self.monomial_product(&subset).to_dense(dim);
            // J^2 = C conj(C) must be the identity.
            let cc = matmul(dim, &c, &conj_matrix(&c));
            if !is_identity(dim, &cc, tol) {
                continue;
            }
            // Equivariance with the even Clifford algebra:
            // C conj(gamma_a gamma_b) = gamma_a gamma_b C.
            let mut ok = true;
            'pairs: for a in 0..n {
                for b in (a + 1)..n {
                    let gab = self.gamma_pair(a, b).to_dense(dim);
                    let lhs = matmul(dim, &c, &conj_matrix(&gab));
                    let rhs = matmul(dim, &gab, &c);
                    if max_abs_diff(&lhs, &rhs) > tol {
                        ok = false;
                        break 'pairs;
                    }
                }
            }
            if !ok {
                continue;
            }
            // Isometry: C^dagger C = Id.
            let cd = adjoint_matrix(dim, &c);
            if !is_identity(dim, &matmul(dim, &cd, &c), tol) {
                continue;
            }
            // Commutation sign with single vectors
            // (J gamma_a = sign * gamma_a J, constant across a).
            let mut sign = 0.0f64;
            let mut consistent = true;
            for a in 0..n {
                let ga = self.mono[a].to_dense(dim);
                let lhs = matmul(dim, &c, &conj_matrix(&ga));
                let rhs = matmul(dim, &ga, &c);
                let s = if max_abs_diff(&lhs, &rhs) <= tol {
                    1.0
                } else {
                    let neg: Vec<S> = rhs.iter().map(|v| -*v).collect();
                    if max_abs_diff(&lhs, &neg) <= tol {
                        -1.0
                    } else {
                        consistent = false;
                        break;
                    }
                };
                if sign == 0.0 {
                    sign = s;
                } else if sign != s {
                    consistent = false;
                    break;
                }
            }
            if !consistent {
                continue;
            }
            return Ok(RealStructure {
                matrix: c,
                subset,
                vector_sign: sign,
            });
        }
        Err(Error::NoRealStructure { n })
    }
}

/// Antilinear structure `J(psi) = C conj(psi)` on a complex
/// representation (or plain conjugation on a real one).
#[derive(Clone, Debug)]
pub struct RealStructure<S: Scalar> {
    /// The matrix `C`, row-major `dim x dim`.
    pub matrix: Vec<S>,
    /// Generator indices whose ordered product forms `C`.
    pub subset: Vec<usize>,
    /// `J gamma_X = vector_sign * gamma_X J` for single vectors
    /// (`+1` for `n = 0, 6, 7 mod 8`, `-1` for `n = 1, 2 mod 8`).
    pub vector_sign: f64,
}

impl<S: Scalar> RealStructure<S> {
    /// Applies `J`.
    pub fn apply(&self, psi: &[S], out: &mut [S]) {
        let dim = psi.len();
        for i in 0..dim {
            let mut acc = S::ZERO;
            for j in 0..dim {
                acc += self.matrix[i * dim + j] * psi[j].conj();
            }
            out[i] = acc;
        }
    }
}

/// Sign `(-1)^{p(p+1)/2}` relating a `p`-form action to its adjoint:
/// `<alpha . phi, psi> = form_adjoint_sign(p) <phi, alpha . psi>`.
pub const fn form_adjoint_sign(p: usize) -> f64 {
    if (p * (p + 1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Fully antisymmetric `p`-form coefficient array over `R^n`,
/// stored dense (`n^p` entries, row-major in the index tuple).
#[derive(Clone, Debug)]
pub struct AntisymForm {
    pub n: usize,
    pub p: usize,
    pub data: Vec<f64>,
}

impl AntisymForm {
    /// Zero form of the given degree.
    pub fn zero(n: usize, p: usize) -> Self {
        let len = n.pow(p as u32);
        AntisymForm {
            n,
            p,
            data: vec![0.0; len],
        }
    }

    /// Wraps a dense coefficient array, validating its length and
    /// antisymmetry to `1e-12`.
    pub fn from_data(n: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n.pow(p as u32) {
            return Err(Error::Shape {
                what: "antisymmetric form data length must be n^p",
            });
        }
        let f = AntisymForm { n, p, data };
        f.validate(1e-12)?;
        Ok(f)
    }

    /// Builds the full array from values on strictly increasing tuples.
    pub fn from_increasing(n: usize, p: usize, mut value: impl FnMut(&[usize]) -> f64) -> Self {
        let mut f = Self::zero(n, p);
        if p == 0 {
            f.data[0] = value(&[]);
            return f;
        }
        if p > n {
            return f;
        }
        let mut idx: Vec<usize> = (0..p).collect();
        loop {
            let v = value(&idx);
            if v != 0.0 {
                f.set_antisym(&idx, v);
            }
            if !next_increasing(&mut idx, n) {
                break;
            }
        }
        f
    }

    /// The 2-form `X ^ Y` with components `X_i Y_j - X_j Y_i`.
    pub fn wedge(x: &[f64], y: &[f64]) -> Self {
        let n = x.len();
        debug_assert_eq!(y.len(), n);
        let mut f = Self::zero(n, 2);
        for i in 0..n {
            for j in 0..n {
                f.data[i * n + j] = x[i] * y[j] - x[j] * y[i];
            }
        }
        f
    }

    #[inline]
    fn flat(&self, idx: &[usize]) -> usize {
        let mut k = 0usize;
        for &i in idx {
            k = k * self.n + i;
        }
        k
    }

    /// Coefficient at an index tuple.
    #[inline]
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat(idx)]
    }

    /// Sets the value on an increasing tuple and propagates it with signs
    /// to all permutations.
    pub fn set_antisym(&mut self, idx: &[usize], v: f64) {
        debug_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        let mut perm: Vec<usize> = idx.to_vec();
        let mut sign = 1.0;
        // Heap's algorithm, tracking parity.
        let p = perm.len();
        let mut c = vec![0usize; p];
        let k = self.flat(&perm);
        self.data[k] = v;
        let mut i = 0;
        while i < p {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                sign = -sign;
                let k = self.flat(&perm);
                self.data[k] = sign * v;
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
    }

    /// Checks antisymmetry; returns the worst violation as an error if it
    /// exceeds `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.p < 2 {
            return Ok(());
        }
        let mut worst = 0.0f64;
        let mut idx = vec![0usize; self.p];
        loop {
            let v = self.get(&idx);
            // compare against the sign-sorted representative
            let mut sorted: Vec<usize> = idx.clone();
            let mut sign = 1.0;
            let mut repeated = false;
            for i in 1..sorted.len() {
                let mut j = i;
                while j > 0 && sorted[j - 1] >= sorted[j] {
                    if sorted[j - 1] == sorted[j] {
                        repeated = true;
                        break;
                    }
                    sorted.swap(j - 1, j);
                    sign = -sign;
                    j -= 1;
                }
                if repeated {
                    break;
                }
            }
            let want = if repeated {
                0.0
            } else {
                sign * self.get(&sorted)
            };
            let d = (v - want).abs();
            if d > worst {
                worst = d;
            }
            if !next_tuple(&mut idx, self.n) {
                break;
            }
        }
        if worst > tol {
            Err(Error::NotAntisymmetric {
                max_violation: worst,
                tol,
            })
        } else {
            Ok(())
        }
    }

    /// Squared norm in the exterior metric (orthonormal increasing
    /// tuples): sum of squared coefficients over `i1 < ... < ip`.
    pub fn norm2(&self) -> f64 {
        if self.p == 0 {
            return self.data[0] * self.data[0];
        }
        if self.p > self.n {
            return 0.0;
        }
        let mut idx: Vec<usize> = (0..self.p).collect();
        let mut acc = 0.0;
        loop {
            let v = self.get(&idx);
            acc += v * v;
            if !next_increasing(&mut idx, self.n) {
                break;
            }
        }
        acc
    }
}

/// Advances a strictly increasing tuple over `0..n`; returns `false` after
/// the last tuple.
pub fn next_increasing(idx: &mut [usize], n: usize) -> bool {
    let p = idx.len();
    let mut k = p;
    while k > 0 {
        k -= 1;
        if idx[k] < n - (p - k) {
            idx[k] += 1;
            for j in (k + 1)..p {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn next_tuple(idx: &mut [usize], n: usize) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < n {
            return true;
        }
        idx[k] = 0;
    }
    false
}

fn kron(da: usize, a: &[Complex64], db: usize, b: &[Complex64]) -> Vec<Complex64> {
    let dim = da * db;
    let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
    for ia in 0..da {
        for ja in 0..da {
            let va = a[ia * da + ja];
            if va == Complex64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..db {
                for jb in 0..db {
                    out[(ia * db + ib) * dim + (ja * db + jb)] = va * b[ib * db + jb];
                }
            }
        }
    }
    out
}

fn scale_matrix(m: &[Complex64], s: Complex64) -> Vec<Complex64> {
    m.iter().map(|v| v * s).collect()
}

fn conj_matrix<S: Scalar>(m: &[S]) -> Vec<S> {
    m.iter().map(|v| v.conj()).collect()
}

fn adjoint_matrix<S: Scalar>(dim: usize, m: &[S]) -> Vec<S> {
    let mut out = vec![S::ZERO; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            out[j * dim + i] = m[i * dim + j].conj();
        }
    }
    out
}

fn is_identity<S: Scalar>(dim: usize, m: &[S], tol: f64) -> bool {
    for i in 0..dim {
        for j in 0..dim {
            let want = if i == j { 1.0 } else { 0.0 };
            let v = m[i * dim + j];
            if (v.re() - want).abs() > tol || v.im().abs() > tol {
                return false;
            }
        }
    }
    true
}

fn max_abs_diff<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = (*x - *y).abs2().sqrt();
        if d > worst {
            worst = d;
        }
    }
    worst
}
