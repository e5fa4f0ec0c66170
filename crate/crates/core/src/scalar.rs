//! Scalar abstraction for spinor coefficients.
//!
//! Complex irreducible representations run on [`Complex64`]; the real
//! eight-dimensional representation in dimension seven runs on `f64`.
//! Every spinor routine in the crate is generic over [`Scalar`], and the
//! real inner product `<.,.> = Re h(.,.)` is the only pairing the theory
//! ever uses, so both instantiations share all code.

use core::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
pub use num_complex::Complex64;

/// Coefficient field for spinor components.
pub trait Scalar:
    Copy
    + PartialEq
    + core::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    const ZERO: Self;
    const ONE: Self;

    /// Embeds a real number.
    fn from_re(x: f64) -> Self;
    /// Complex conjugate (identity on `f64`).
    fn conj(self) -> Self;
    /// Real part.
    fn re(self) -> f64;
    /// Imaginary part (zero on `f64`).
    fn im(self) -> f64;
    /// Multiplication by a real scalar.
    fn scale(self, s: f64) -> Self;
    /// Squared modulus.
    fn abs2(self) -> f64;
    /// Multiplication by `i` where representable; `None` on `f64`.
    fn try_mul_i(self) -> Option<Self>;
    /// Whether this scalar type carries an imaginary unit.
    const IS_COMPLEX: bool;
    /// Number of `f64` lanes per scalar (1 or 2); fixes file layouts.
    const LANES: usize;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    #[inline(always)]
    fn from_re(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn conj(self) -> Self {
        self
    }
    #[inline(always)]
    fn re(self) -> f64 {
        self
    }
    #[inline(always)]
    fn im(self) -> f64 {
        0.0
    }
    #[inline(always)]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline(always)]
    fn abs2(self) -> f64 {
        self * self
    }
    #[inline(always)]
    fn try_mul_i(self) -> Option<Self> {
        None
    }
    const IS_COMPLEX: bool = false;
    const LANES: usize = 1;
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);

    #[inline(always)]
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline(always)]
    fn conj(self) -> Self {
        Complex64::new(self.re, -self.im)
    }
    #[inline(always)]
    fn re(self) -> f64 {
        self.re
    }
    #[inline(always)]
    fn im(self) -> f64 {
        self.im
    }
    #[inline(always)]
    fn scale(self, s: f64) -> Self {
        Complex64::new(self.re * s, self.im * s)
    }
    #[inline(always)]
    fn abs2(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
    #[inline(always)]
    fn try_mul_i(self) -> Option<Self> {
        Some(Complex64::new(-self.im, self.re))
    }
    const IS_COMPLEX: bool = true;
    const LANES: usize = 2;
}

/// Real inner product `Re h(psi, chi)` of two coefficient slices.
#[inline]
pub fn inner_re<S: Scalar>(psi: &[S], chi: &[S]) -> f64 {
    debug_assert_eq!(psi.len(), chi.len());
    let mut acc = 0.0;
    for (a, b) in psi.iter().zip(chi.iter()) {
        acc += (a.conj() * *b).re();
    }
    acc
}

/// Hermitian inner product `h(psi, chi) = sum conj(psi_i) chi_i`.
#[inline]
pub fn inner_herm<S: Scalar>(psi: &[S], chi: &[S]) -> S {
    debug_assert_eq!(psi.len(), chi.len());
    let mut acc = S::ZERO;
    for (a, b) in psi.iter().zip(chi.iter()) {
        acc += a.conj() * *b;
    }
    acc
}

/// Squared norm `|psi|^2` under the real inner product.
#[inline]
pub fn norm2<S: Scalar>(psi: &[S]) -> f64 {
    let mut acc = 0.0;
    for a in psi {
        acc += a.abs2();
    }
    acc
}
