//! Site-blocked fields on a torus lattice.
//!
//! A [`Field<T>`] stores `per_site` values of type `T` per lattice site,
//! blocked contiguously in site storage order. Layout conventions used
//! throughout the crate:
//!
//! * metric `g` / symmetric 2-tensors: `sym_len(n)` entries per site,
//!   packed upper-triangle order (see [`crate::linalg::sym_idx`]);
//! * spinors: `dim` entries per site;
//! * square-root frames `b = g^{-1/2}`: symmetric, packed like the
//!   metric (`sym_len(n)` entries per site);
//! * spinor one-forms (covariant derivatives): `n * dim` entries per
//!   site, derivative index outermost;
//! * connection coefficients `omega_{mu,cd}`: `n * pair_len(n)` entries
//!   per site (`c < d`, see [`crate::linalg::pair_idx`]);
//! * Christoffel symbols and 3-index energy-momentum components:
//!   `n * sym_len(n)` per site, first index outermost.

use crate::lattice::TorusLattice;
use crate::linalg::{sym_idx, sym_len};
use crate::scalar::Scalar;
use alloc::vec;
use alloc::vec::Vec;

/// A lattice field with `per_site` components of type `T` per site.
#[derive(Clone, Debug)]
pub struct Field<T> {
    per_site: usize,
    data: Vec<T>,
}

impl<T: Copy> Field<T> {
    pub fn new(lat: &TorusLattice, per_site: usize, fill: T) -> Self {
        Field {
            per_site,
            data: vec![fill; per_site * lat.num_sites()],
        }
    }

    #[inline(always)]
    pub fn per_site(&self) -> usize {
        self.per_site
    }

    #[inline(always)]
    pub fn at(&self, site: usize) -> &[T] {
        &self.data[site * self.per_site..(site + 1) * self.per_site]
    }

    #[inline(always)]
    pub fn at_mut(&mut self, site: usize) -> &mut [T] {
        &mut self.data[site * self.per_site..(site + 1) * self.per_site]
    }

    #[inline(always)]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline(always)]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn num_sites(&self) -> usize {
        self.data.len() / self.per_site
    }

    pub fn copy_from(&mut self, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.copy_from_slice(&other.data);
    }
}

impl<T: Scalar> Field<T> {
    /// `self += c * other`, elementwise.
    pub fn axpy(&mut self, c: f64, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x += y.scale(c);
        }
    }

    pub fn scale(&mut self, c: f64) {
        for x in self.data.iter_mut() {
            *x = x.scale(c);
        }
    }

    pub fn fill(&mut self, v: T) {
        for x in self.data.iter_mut() {
            *x = v;
        }
    }

    /// Largest componentwise modulus.
    pub fn max_abs(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in &self.data {
            let a = crate::fm::sqrt(x.abs2());
            if a > worst {
                worst = a;
            }
        }
        worst
    }
}

/// The flat metric: identity matrix (packed) at every site.
pub fn flat_metric(lat: &TorusLattice) -> Field<f64> {
    let n = lat.n();
    let mut f = Field::new(lat, sym_len(n), 0.0);
    for s in 0..lat.num_sites() {
        let g = f.at_mut(s);
        for i in 0..n {
            g[sym_idx(n, i, i)] = 1.0;
        }
    }
    f
}

/// A field holding the same spinor at every site.
pub fn constant_spinor<S: Scalar>(lat: &TorusLattice, value: &[S]) -> Field<S> {
    let mut f = Field::new(lat, value.len(), S::ZERO);
    for s in 0..lat.num_sites() {
        f.at_mut(s).copy_from_slice(value);
    }
    f
}

/// A metric/spinor pair; used both for flow states and for tangents
/// (variations) of such states.
#[derive(Clone, Debug)]
pub struct Pair<S: Scalar> {
    pub g: Field<f64>,
    pub phi: Field<S>,
}

impl<S: Scalar> Pair<S> {
    pub fn zeros_like(other: &Pair<S>) -> Self {
        let mut p = other.clone();
        p.g.fill(0.0);
        p.phi.fill(S::ZERO);
        p
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Pair<S>) {
        self.g.axpy(c, &other.g);
        self.phi.axpy(c, &other.phi);
    }

    pub fn scale(&mut self, c: f64) {
        self.g.scale(c);
        self.phi.scale(c);
    }

    /// Rescales the spinor to unit length at every site; returns the
    /// largest deviation `| |phi| - 1 |` found before rescaling.
    pub fn renormalize_spinor(&mut self) -> f64 {
        let per = self.phi.per_site();
        let mut worst = 0.0f64;
        for s in 0..self.phi.num_sites() {
            let psi = self.phi.at_mut(s);
            let norm = crate::fm::sqrt(crate::scalar::norm2(psi));
            let dev = (norm - 1.0).abs();
            if dev > worst {
                worst = dev;
            }
            if norm > 0.0 {
                let inv = 1.0 / norm;
                for v in psi.iter_mut().take(per) {
                    *v = v.scale(inv);
                }
            }
        }
        worst
    }

    /// Largest deviation of the pointwise spinor norm from one.
    pub fn max_norm_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..self.phi.num_sites() {
            let norm = crate::fm::sqrt(crate::scalar::norm2(self.phi.at(s)));
            let dev = (norm - 1.0).abs();
            if dev > worst {
                worst = dev;
            }
        }
        worst
    }
}

/// Removes the real-orthogonal projection of `dot` onto `phi` in place
/// (pointwise tangency to the unit-spinor constraint).
pub fn project_spinor_tangent<S: Scalar>(phi: &[S], dot: &mut [S]) {
    let n2 = crate::scalar::norm2(phi);
    if n2 == 0.0 {
        return;
    }
    let c = crate::scalar::inner_re(dot, phi) / n2;
    for (d, p) in dot.iter_mut().zip(phi.iter()) {
        *d -= p.scale(c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FdOrder;

    #[test]
    fn pair_axpy_and_renormalize() {
        let lat = TorusLattice::new(2, 4, 1.0, FdOrder::Two).unwrap();
        let g = flat_metric(&lat);
        let phi = constant_spinor(&lat, &[0.6f64, 0.8]);
        let mut p = Pair { g, phi };
        let mut q = Pair::zeros_like(&p);
        q.phi.fill(0.1);
        p.axpy(2.0, &q);
        // each component gained 0.2
        assert!((p.phi.at(0)[0] - 0.8).abs() < 1e-15);
        let dev = p.renormalize_spinor();
        assert!(dev > 0.0);
        assert!(p.max_norm_deviation() < 1e-15);
    }

    #[test]
    fn tangent_projection_is_orthogonal() {
        let phi = [0.6f64, 0.8];
        let mut dot = [1.0f64, -0.5];
        project_spinor_tangent(&phi, &mut dot);
        let ip = crate::scalar::inner_re(&dot, &phi);
        assert!(ip.abs() < 1e-15);
    }
}
