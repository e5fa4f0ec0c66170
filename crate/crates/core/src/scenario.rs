//! Ready-made initial data and perturbation directions for tests,
//! gradient checks, and flow experiments.

use crate::clifford::CliffordRep;
use crate::field::{constant_spinor, flat_metric, project_spinor_tangent, Field, Pair};
use crate::fm;
use crate::gradient::ensure_spd;
use crate::jet::{FourierMetric, FourierScalar, MetricFamily, UnitSpinorField};
use crate::lattice::TorusLattice;
use crate::linalg::sym_len;
use crate::rng::CounterRng;
use crate::scalar::{norm2, Scalar};
use crate::{Error, Result};
use alloc::vec;
use alloc::vec::Vec;

/// A random constant unit spinor.
pub fn random_unit_spinor<S: Scalar>(rep: &CliffordRep<S>, rng: &mut CounterRng) -> Vec<S> {
    let dim = rep.dim();
    let mut psi = vec![S::ZERO; dim];
    loop {
        for v in psi.iter_mut() {
            *v = S::from_re(rng.next_range(-1.0, 1.0));
            if S::IS_COMPLEX {
                if let Some(iv) = S::from_re(rng.next_range(-1.0, 1.0)).try_mul_i() {
                    *v += iv;
                }
            }
        }
        let nn = norm2(&psi);
        if nn > 1e-3 {
            let inv = 1.0 / fm::sqrt(nn);
            for v in psi.iter_mut() {
                *v = v.scale(inv);
            }
            return psi;
        }
    }
}

/// Flat metric with a parallel (constant) unit spinor: the absolute
/// minimizer, a critical pair.
pub fn flat_critical<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    rng: &mut CounterRng,
) -> Pair<S> {
    Pair {
        g: flat_metric(lat),
        phi: constant_spinor(lat, &random_unit_spinor(rep, rng)),
    }
}

/// Band-limited perturbation of the flat critical pair: near-flat
/// metric waves and a smoothly rotated unit spinor field, both with
/// Fourier modes capped at `max_k`. The metric is verified positive
/// definite.
pub fn perturbed_flat<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    amp: f64,
    max_k: i64,
    rng: &mut CounterRng,
) -> Result<Pair<S>> {
    if !(amp.is_finite() && amp >= 0.0) {
        return Err(Error::InvalidParameter {
            what: "perturbation amplitude must be finite and non-negative",
        });
    }
    let fm_metric = FourierMetric::random_near_flat(lat.n(), lat.length(), rng, 2, max_k, amp);
    let g = fm_metric.sample(lat);
    ensure_spd(lat, &g)?;
    let sf = UnitSpinorField::random(rep, lat.length(), rng, 2, 2, max_k, amp);
    let mut pair = Pair {
        g,
        phi: sf.sample(lat),
    };
    pair.renormalize_spinor();
    Ok(pair)
}

/// Unit spinor field rotating in the plane of two constant orthonormal
/// spinors with linear phase `2 pi k . x`, over the flat metric. Its
/// discrete energy has the closed form
/// `E = (V/2) * sum_mu (sin(2 pi k_mu h) / h)^2`
/// for second-order stencils.
pub fn rotating_wave<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    k: &[i64],
) -> Result<Pair<S>> {
    let n = lat.n();
    if k.len() != n {
        return Err(Error::Shape {
            what: "wave vector length must equal the lattice dimension",
        });
    }
    let dim = rep.dim();
    if dim < 2 {
        return Err(Error::UnsupportedDimension {
            n,
            what: "rotating wave needs a spinor space of dimension at least 2",
        });
    }
    let mut phi = Field::new(lat, dim, S::ZERO);
    let two_pi = 2.0 * core::f64::consts::PI;
    for site in lat.sites() {
        let x = lat.point(&site);
        let mut theta = 0.0;
        for mu in 0..n {
            theta += two_pi * k[mu] as f64 / lat.length() * x[mu];
        }
        let v = phi.at_mut(site.index);
        v[0] = S::from_re(fm::cos(theta));
        v[1] = S::from_re(fm::sin(theta));
    }
    Ok(Pair {
        g: flat_metric(lat),
        phi,
    })
}

/// The closed-form discrete energy of [`rotating_wave`] data.
pub fn rotating_wave_energy(lat: &TorusLattice, k: &[i64]) -> f64 {
    let two_pi = 2.0 * core::f64::consts::PI;
    let h = lat.h();
    let mut sum = 0.0;
    for &km in k {
        let s = fm::sin(two_pi * km as f64 / lat.length() * h) / h;
        sum += s * s;
    }
    let vol = fm::powi(lat.length(), lat.n() as i32);
    0.5 * vol * sum
}

/// Random band-limited variation direction `(g_dot, phi_dot)` with the
/// spinor leg projected pointwise into the tangent space of the unit
/// sphere at `phi`.
pub fn tangent_direction<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    phi: &Field<S>,
    max_k: i64,
    amp: f64,
    rng: &mut CounterRng,
) -> Pair<S> {
    let n = lat.n();
    let dim = rep.dim();
    let mut waves = Vec::with_capacity(sym_len(n));
    for _ in 0..sym_len(n) {
        let mut f = FourierScalar::random(n, lat.length(), rng, 2, max_k, amp);
        f.base = 0.0;
        waves.push(f);
    }
    let re_waves: Vec<FourierScalar> = (0..dim)
        .map(|_| {
            let mut f = FourierScalar::random(n, lat.length(), rng, 2, max_k, amp);
            f.base = 0.0;
            f
        })
        .collect();
    let im_waves: Vec<FourierScalar> = (0..dim)
        .map(|_| {
            let mut f = FourierScalar::random(n, lat.length(), rng, 2, max_k, amp);
            f.base = 0.0;
            f
        })
        .collect();
    let mut gdot = Field::new(lat, sym_len(n), 0.0);
    let mut phidot = Field::new(lat, dim, S::ZERO);
    for site in lat.sites() {
        let x = lat.point(&site);
        let gs = gdot.at_mut(site.index);
        for (slot, w) in gs.iter_mut().zip(waves.iter()) {
            *slot = w.value(&x[..n]);
        }
        let ps = phidot.at_mut(site.index);
        for c in 0..dim {
            ps[c] = S::from_re(re_waves[c].value(&x[..n]));
            if S::IS_COMPLEX {
                if let Some(iv) = S::from_re(im_waves[c].value(&x[..n])).try_mul_i() {
                    ps[c] += iv;
                }
            }
        }
        project_spinor_tangent(phi.at(site.index), ps);
    }
    Pair { g: gdot, phi: phidot }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::energy;
    use crate::lattice::FdOrder;
    use crate::scalar::inner_re;
    use num_complex::Complex64;

    #[test]
    fn rotating_wave_energy_matches_closed_form() {
        let lat = TorusLattice::new(2, 12, 1.0, FdOrder::Two).unwrap();
        let rep = CliffordRep::<Complex64>::complex(2).unwrap();
        let k = [1i64, 3];
        let pair = rotating_wave(&lat, &rep, &k).unwrap();
        let e = energy(&lat, &rep, &pair.g, &pair.phi).unwrap();
        let want = rotating_wave_energy(&lat, &k);
        assert!((e - want).abs() < 1e-12 * (1.0 + want));

        let rep7 = CliffordRep::<f64>::real_seven();
        let lat7 = TorusLattice::new(7, 4, 1.0, FdOrder::Two).unwrap();
        let k7 = [1i64, 0, 1, 0, 0, 1, 0];
        let pair7 = rotating_wave(&lat7, &rep7, &k7).unwrap();
        let e7 = energy(&lat7, &rep7, &pair7.g, &pair7.phi).unwrap();
        let want7 = rotating_wave_energy(&lat7, &k7);
        assert!((e7 - want7).abs() < 1e-12 * (1.0 + want7));
    }

    #[test]
    fn perturbed_flat_is_unit_norm_and_spd() {
        let lat = TorusLattice::new(3, 8, 1.0, FdOrder::Two).unwrap();
        let rep = CliffordRep::<Complex64>::complex(3).unwrap();
        let mut rng = CounterRng::new(3);
        let pair = perturbed_flat(&lat, &rep, 0.05, 2, &mut rng).unwrap();
        assert!(pair.max_norm_deviation() < 1e-12);
        assert!(crate::gradient::min_metric_eigenvalue(&lat, &pair.g) > 0.5);
    }

    #[test]
    fn tangent_directions_are_pointwise_orthogonal_to_phi() {
        let lat = TorusLattice::new(3, 6, 1.0, FdOrder::Two).unwrap();
        let rep = CliffordRep::<Complex64>::complex(3).unwrap();
        let mut rng = CounterRng::new(5);
        let pair = perturbed_flat(&lat, &rep, 0.05, 1, &mut rng).unwrap();
        let dir = tangent_direction(&lat, &rep, &pair.phi, 2, 1.0, &mut rng);
        let mut worst: f64 = 0.0;
        for s in 0..lat.num_sites() {
            let ip = inner_re(pair.phi.at(s), dir.phi.at(s));
            worst = worst.max(ip.abs());
        }
        assert!(worst < 1e-13);
    }
}
