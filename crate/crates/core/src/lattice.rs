//! Periodic lattice discretization of a flat torus `R^n / L Z^n`.
//!
//! Sites are laid out row-major with axis `0` slowest, so the hyperplane
//! `x_0 = s` is a contiguous block (used by the streaming drivers).
//! Spatial derivatives are periodic central differences of order two
//! (default) or four; the stencil weights returned by [`TorusLattice::stencil`]
//! already include the `1/h` factor.

use crate::error::Error;
use crate::scalar::Scalar;
use crate::{Result, MAX_N};

/// Finite-difference order for all spatial derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdOrder {
    Two,
    Four,
}

/// A lattice site: flat storage index plus its multi-index.
#[derive(Clone, Copy, Debug)]
pub struct Site {
    pub index: usize,
    pub coords: [usize; MAX_N],
}

/// An `n`-torus of side `L` sampled at `size` points per axis.
#[derive(Clone, Debug)]
pub struct TorusLattice {
    n: usize,
    size: usize,
    length: f64,
    h: f64,
    order: FdOrder,
    strides: [usize; MAX_N],
    num_sites: usize,
    stencil: [(i32, f64); 4],
    stencil_len: usize,
}

impl TorusLattice {
    pub fn new(n: usize, size: usize, length: f64, order: FdOrder) -> Result<Self> {
        if !(2..=8).contains(&n) {
            return Err(Error::UnsupportedDimension {
                n,
                what: "torus lattice",
            });
        }
        if size < 4 || (order == FdOrder::Four && size < 5) {
            return Err(Error::InvalidParameter {
                what: "lattice size must be >= 4 (>= 5 for fourth-order stencils)",
            });
        }
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "torus side length must be positive and finite",
            });
        }
        let h = length / size as f64;
        let mut strides = [0usize; MAX_N];
        let mut s = 1usize;
        for mu in (0..n).rev() {
            strides[mu] = s;
            s = s.checked_mul(size).ok_or(Error::InvalidParameter {
                what: "lattice too large for the address space",
            })?;
        }
        let num_sites = s;
        let inv_h = 1.0 / h;
        let (stencil, stencil_len) = match order {
            FdOrder::Two => (
                [(1, 0.5 * inv_h), (-1, -0.5 * inv_h), (0, 0.0), (0, 0.0)],
                2,
            ),
            FdOrder::Four => (
                [
                    (1, 8.0 / 12.0 * inv_h),
                    (-1, -8.0 / 12.0 * inv_h),
                    (2, -1.0 / 12.0 * inv_h),
                    (-2, 1.0 / 12.0 * inv_h),
                ],
                4,
            ),
        };
        Ok(TorusLattice {
            n,
            size,
            length,
            h,
            order,
            strides,
            num_sites,
            stencil,
            stencil_len,
        })
    }

    #[inline(always)]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline(always)]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline(always)]
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Mesh width `L / size`.
    #[inline(always)]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline(always)]
    pub fn order(&self) -> FdOrder {
        self.order
    }

    #[inline(always)]
    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Cell volume `h^n`, the quadrature weight of every site.
    pub fn cell_volume(&self) -> f64 {
        crate::fm::powi(self.h, self.n as i32)
    }

    /// Stencil `(offset, weight)` pairs for a first derivative along any
    /// axis; weights include the `1/h` factor.
    #[inline(always)]
    pub fn stencil(&self) -> &[(i32, f64)] {
        &self.stencil[..self.stencil_len]
    }

    /// Physical coordinates of a site.
    pub fn point(&self, site: &Site) -> [f64; MAX_N] {
        let mut x = [0.0; MAX_N];
        for mu in 0..self.n {
            x[mu] = site.coords[mu] as f64 * self.h;
        }
        x
    }

    /// Site for a multi-index (coordinates must be in range).
    pub fn site_at(&self, coords: &[usize]) -> Site {
        debug_assert_eq!(coords.len(), self.n);
        let mut c = [0usize; MAX_N];
        let mut index = 0usize;
        for mu in 0..self.n {
            debug_assert!(coords[mu] < self.size);
            c[mu] = coords[mu];
            index += coords[mu] * self.strides[mu];
        }
        Site { index, coords: c }
    }

    /// Flat index of the periodic neighbor `site + off * e_mu`.
    ///
    /// Requires `|off| <= size`.
    #[inline(always)]
    pub fn neighbor(&self, site: &Site, mu: usize, off: i32) -> usize {
        let mut x = site.coords[mu] as i64 + off as i64;
        let n = self.size as i64;
        if x < 0 {
            x += n;
        } else if x >= n {
            x -= n;
        }
        let delta = x - site.coords[mu] as i64;
        (site.index as i64 + delta * self.strides[mu] as i64) as usize
    }

    /// The neighbor as a full `Site` (used by kernels that take
    /// derivatives at shifted positions).
    pub fn neighbor_site(&self, site: &Site, mu: usize, off: i32) -> Site {
        let index = self.neighbor(site, mu, off);
        let mut coords = site.coords;
        let mut x = coords[mu] as i64 + off as i64;
        let n = self.size as i64;
        if x < 0 {
            x += n;
        } else if x >= n {
            x -= n;
        }
        coords[mu] = x as usize;
        Site { index, coords }
    }

    /// Central difference along axis `mu` of a site-blocked array:
    /// `out[k] = (D_mu data)[site*per_site + k]`.
    #[inline(always)]
    pub fn diff_slice<S: Scalar>(
        &self,
        site: &Site,
        mu: usize,
        per_site: usize,
        data: &[S],
        out: &mut [S],
    ) {
        for o in out.iter_mut().take(per_site) {
            *o = S::ZERO;
        }
        for &(off, w) in self.stencil() {
            let base = self.neighbor(site, mu, off) * per_site;
            for k in 0..per_site {
                out[k] += data[base + k].scale(w);
            }
        }
    }

    /// Iterator over all sites in storage order.
    pub fn sites(&self) -> SiteIter<'_> {
        SiteIter {
            lat: self,
            next_index: 0,
            coords: [0; MAX_N],
        }
    }

    /// Number of sites in one hyperplane `x_0 = const`.
    pub fn slab_sites(&self) -> usize {
        self.num_sites / self.size
    }

    /// Iterator over the contiguous hyperplane `x_0 = s`.
    pub fn slab(&self, s: usize) -> SlabIter<'_> {
        debug_assert!(s < self.size);
        let mut coords = [0; MAX_N];
        coords[0] = s;
        SlabIter {
            lat: self,
            next_index: s * self.strides[0],
            end: (s + 1) * self.strides[0],
            coords,
        }
    }
}

/// Storage-order iterator over all sites.
pub struct SiteIter<'a> {
    lat: &'a TorusLattice,
    next_index: usize,
    coords: [usize; MAX_N],
}

impl Iterator for SiteIter<'_> {
    type Item = Site;

    #[inline]
    fn next(&mut self) -> Option<Site> {
        if self.next_index >= self.lat.num_sites {
            return None;
        }
        let site = Site {
            index: self.next_index,
            coords: self.coords,
        };
        self.next_index += 1;
        // odometer: fastest axis is the last one
        let n = self.lat.n;
        for mu in (0..n).rev() {
            self.coords[mu] += 1;
            if self.coords[mu] < self.lat.size {
                break;
            }
            self.coords[mu] = 0;
        }
        Some(site)
    }
}

/// Storage-order iterator over one `x_0 = s` hyperplane.
pub struct SlabIter<'a> {
    lat: &'a TorusLattice,
    next_index: usize,
    end: usize,
    coords: [usize; MAX_N],
}

impl Iterator for SlabIter<'_> {
    type Item = Site;

    #[inline]
    fn next(&mut self) -> Option<Site> {
        if self.next_index >= self.end {
            return None;
        }
        let site = Site {
            index: self.next_index,
            coords: self.coords,
        };
        self.next_index += 1;
        let n = self.lat.n;
        for mu in (1..n).rev() {
            self.coords[mu] += 1;
            if self.coords[mu] < self.lat.size {
                break;
            }
            self.coords[mu] = 0;
        }
        Some(site)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_iteration_covers_lattice_in_order() {
        let lat = TorusLattice::new(3, 4, 1.0, FdOrder::Two).unwrap();
        let mut count = 0usize;
        for (k, site) in lat.sites().enumerate() {
            assert_eq!(site.index, k);
            assert_eq!(site.index, lat.site_at(&site.coords[..3]).index);
            count += 1;
        }
        assert_eq!(count, 64);
    }

    #[test]
    fn neighbors_wrap_periodically() {
        let lat = TorusLattice::new(2, 4, 2.0, FdOrder::Two).unwrap();
        let s = lat.site_at(&[0, 3]);
        assert_eq!(lat.neighbor(&s, 0, -1), lat.site_at(&[3, 3]).index);
        assert_eq!(lat.neighbor(&s, 1, 1), lat.site_at(&[0, 0]).index);
        assert_eq!(lat.neighbor(&s, 1, 2), lat.site_at(&[0, 1]).index);
        let t = lat.neighbor_site(&s, 0, -2);
        assert_eq!(t.coords[0], 2);
        assert_eq!(t.index, lat.site_at(&[2, 3]).index);
    }

    #[test]
    fn stencils_differentiate_trig_modes() {
        // order two: error O(h^2), order four: O(h^4), on sin(2 pi x / L)
        for (order, expect) in [(FdOrder::Two, 2.0), (FdOrder::Four, 4.0)] {
            let mut errs = alloc::vec::Vec::new();
            for size in [16usize, 32] {
                let lat = TorusLattice::new(2, size, 1.0, order).unwrap();
                let tau = core::f64::consts::TAU;
                let f: alloc::vec::Vec<f64> = lat
                    .sites()
                    .map(|s| (tau * lat.point(&s)[0]).sin())
                    .collect();
                let mut worst = 0.0f64;
                for site in lat.sites() {
                    let mut d = [0.0f64];
                    lat.diff_slice(&site, 0, 1, &f, &mut d);
                    let exact = tau * (tau * lat.point(&site)[0]).cos();
                    worst = worst.max((d[0] - exact).abs());
                }
                errs.push(crate::util::RefinementSample {
                    h: lat.h(),
                    error: worst,
                });
            }
            let slope = crate::util::measured_order(&errs);
            assert!(
                (slope - expect).abs() < 0.2,
                "order {slope} vs expected {expect}"
            );
        }
    }

    #[test]
    fn slab_iteration_matches_full_iteration() {
        let lat = TorusLattice::new(3, 4, 1.0, FdOrder::Two).unwrap();
        let mut indices = alloc::vec::Vec::new();
        for s in 0..lat.size() {
            for site in lat.slab(s) {
                assert_eq!(site.coords[0], s);
                assert_eq!(site.index, lat.site_at(&site.coords[..3]).index);
                indices.push(site.index);
            }
        }
        let all: alloc::vec::Vec<usize> = (0..lat.num_sites()).collect();
        assert_eq!(indices, all);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TorusLattice::new(1, 8, 1.0, FdOrder::Two).is_err());
        assert!(TorusLattice::new(9, 8, 1.0, FdOrder::Two).is_err());
        assert!(TorusLattice::new(3, 3, 1.0, FdOrder::Two).is_err());
        assert!(TorusLattice::new(3, 4, 1.0, FdOrder::Four).is_err());
        assert!(TorusLattice::new(3, 8, 0.0, FdOrder::Two).is_err());
    }
}
