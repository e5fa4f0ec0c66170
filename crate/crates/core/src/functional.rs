//! Global functionals: spinor energy, total scalar curvature, their
//! weighted combinations, Dirac energy, and volume.
//!
//! All integrals are lattice quadratures `h^n * sum over sites` of a
//! pointwise density times `sqrt(det g)`, accumulated with the crate's
//! single pairwise summation scheme so results are reproducible across
//! evaluation orders that stream the same site sequence.

use crate::clifford::CliffordRep;
use crate::field::Field;
use crate::geometry::{
    covariant_derivative_at, dirac_at, frame_at, frame_data, gradient_norm2_at, metric_at,
    scalar_curvature_at, spin_connection_at, FrameData, MAX_PAIR, MAX_SPIN1,
};
use crate::lattice::TorusLattice;
use crate::scalar::Scalar;
use crate::util::PairwiseAccumulator;
use crate::{Result, MAX_DIM, MAX_N};

/// Spinor energy `E(g, phi) = (1/2) integral |nabla phi|^2 dv`.
pub fn energy<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    g: &Field<f64>,
    phi: &Field<S>,
) -> Result<f64> {
    let frame = frame_data(lat, g)?;
    Ok(energy_with(lat, rep, g, &frame, phi))
}

/// Spinor energy with a precomputed frame; streams one site at a time
/// and never materializes derivative fields.
pub fn energy_with<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    g: &Field<f64>,
    frame: &FrameData,
    phi: &Field<S>,
) -> f64 {
    let n = lat.n();
    let dim = rep.dim();
    let mut acc = PairwiseAccumulator::new();
    let mut omega = [0.0f64; MAX_N * MAX_PAIR];
    let mut nabla = [S::ZERO; MAX_SPIN1];
    for site in lat.sites() {
        spin_connection_at(lat, g, frame, &site, &mut omega);
        covariant_derivative_at(lat, rep, &omega, phi, &site, &mut nabla[..n * dim]);
        let b = frame_at(n, frame, site.index);
        let ginv = b.matmul(&b);
        let dens = gradient_norm2_at(n, dim, &ginv, &nabla[..n * dim]);
        acc.add(0.5 * dens * frame.sqrt_det.at(site.index)[0]);
    }
    acc.total() * lat.cell_volume()
}

/// Riemannian volume `integral dv`.
pub fn volume(lat: &TorusLattice, g: &Field<f64>) -> Result<f64> {
    let n = lat.n();
    let mut acc = PairwiseAccumulator::new();
    for s in 0..lat.num_sites() {
        acc.add(crate::fm::sqrt(metric_at(n, g, s).spd_det()?));
    }
    Ok(acc.total() * lat.cell_volume())
}

/// Volume from a precomputed frame.
pub fn volume_with(lat: &TorusLattice, frame: &FrameData) -> f64 {
    let mut acc = PairwiseAccumulator::new();
    for s in 0..frame.sqrt_det.num_sites() {
        acc.add(frame.sqrt_det.at(s)[0]);
    }
    acc.total() * lat.cell_volume()
}

/// Total scalar curvature `S(g) = integral scal dv`.
pub fn total_scalar(lat: &TorusLattice, g: &Field<f64>) -> Result<f64> {
    let n = lat.n();
    let mut acc = PairwiseAccumulator::new();
    for site in lat.sites() {
        let gm = metric_at(n, g, site.index);
        let ginv = gm.spd_inverse()?;
        let scal = scalar_curvature_at(lat, g, &ginv, &site)?;
        acc.add(scal * crate::fm::sqrt(gm.spd_det()?));
    }
    Ok(acc.total() * lat.cell_volume())
}

/// Weighted functional `E_s = E + s S`.
pub fn s_energy<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    g: &Field<f64>,
    phi: &Field<S>,
    s: f64,
) -> Result<f64> {
    let e = energy(lat, rep, g, phi)?;
    if s == 0.0 {
        return Ok(e);
    }
    Ok(e + s * total_scalar(lat, g)?)
}

/// Dirac energy `(1/2) integral |D phi|^2 dv`.
pub fn dirac_energy<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    g: &Field<f64>,
    phi: &Field<S>,
) -> Result<f64> {
    let n = lat.n();
    let dim = rep.dim();
    let frame = frame_data(lat, g)?;
    let mut acc = PairwiseAccumulator::new();
    let mut omega = [0.0f64; MAX_N * MAX_PAIR];
    let mut nabla = [S::ZERO; MAX_SPIN1];
    let mut dphi = [S::ZERO; MAX_DIM];
    for site in lat.sites() {
        spin_connection_at(lat, g, &frame, &site, &mut omega);
        covariant_derivative_at(lat, rep, &omega, phi, &site, &mut nabla[..n * dim]);
        let b = frame_at(n, &frame, site.index);
        dirac_at(rep, &b, &nabla[..n * dim], &mut dphi[..dim]);
        acc.add(0.5 * crate::scalar::norm2(&dphi[..dim]) * frame.sqrt_det.at(site.index)[0]);
    }
    Ok(acc.total() * lat.cell_volume())
}

/// For a Killing pair candidate: the constrained critical constant
/// `c = ((n-2)/n) * ||nabla phi||^2_{L^2} / vol` and the larger of the
/// two residuals `||Q1 + c g||`, `||Q2||` is left to callers; this just
/// returns `c`.
pub fn constrained_constant(n: usize, energy: f64, volume: f64) -> f64 {
    (n as f64 - 2.0) / n as f64 * (2.0 * energy) / volume
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{constant_spinor, flat_metric};
    use crate::jet::MetricFamily;
    use crate::lattice::FdOrder;
    use num_complex::Complex64;

    #[test]
    fn flat_constant_state_has_zero_energies() {
        let lat = TorusLattice::new(3, 8, 2.0, FdOrder::Two).unwrap();
        let rep = CliffordRep::complex(3).unwrap();
        let g = flat_metric(&lat);
        let phi = constant_spinor(
            &lat,
            &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
        );
        assert_eq!(energy(&lat, &rep, &g, &phi).unwrap(), 0.0);
        assert_eq!(dirac_energy(&lat, &rep, &g, &phi).unwrap(), 0.0);
        let vol = volume(&lat, &g).unwrap();
        assert!((vol - 8.0).abs() < 1e-12);
        let s = total_scalar(&lat, &g).unwrap();
        assert!(s.abs() < 1e-13);
    }

    #[test]
    fn plane_wave_energy_matches_closed_form() {
        // phi = exp(i theta(x)) psi0 with theta = 2 pi k . x on the flat
        // torus: D_mu phi has |D_mu phi| = |sin(2 pi k_mu h)| / h exactly,
        // so E = (L^n / 2) sum_mu (sin(2 pi k_mu h)/h)^2.
        let lat = TorusLattice::new(2, 16, 1.0, FdOrder::Two).unwrap();
        let rep = CliffordRep::complex(2).unwrap();
        let g = flat_metric(&lat);
        let k = [1i32, 2];
        let mut phi = Field::new(&lat, 2, Complex64::new(0.0, 0.0));
        for site in lat.sites() {
            let x = lat.point(&site);
            let theta = core::f64::consts::TAU * (k[0] as f64 * x[0] + k[1] as f64 * x[1]);
            let v = Complex64::new(0.0, theta).exp();
            phi.at_mut(site.index)[0] = v * Complex64::new(0.8, 0.0);
            phi.at_mut(site.index)[1] = v * Complex64::new(0.0, 0.6);
        }
        let e = energy(&lat, &rep, &g, &phi).unwrap();
        let h = lat.h();
        let mut want = 0.0;
        for kv in k {
            let s = crate::fm::sin(core::f64::consts::TAU * kv as f64 * h) / h;
            want += s * s;
        }
        want *= 0.5;
        assert!(
            (e - want).abs() < 1e-12 * (1.0 + want),
            "{e} vs {want}"
        );
    }

    #[test]
    fn energy_scales_exactly_under_constant_conformal_change() {
        // E(c^2 g, phi) = c^{n-2} E(g, phi), exactly for power-of-two c.
        let lat = TorusLattice::new(3, 8, 1.0, FdOrder::Two).unwrap();
        let rep = CliffordRep::complex(3).unwrap();
        let mut rng = crate::rng::CounterRng::new(77);
        let fm = crate::jet::FourierMetric::random_near_flat(3, 1.0, &mut rng, 2, 1, 0.05);
        let fld = crate::jet::UnitSpinorField::random(&rep, 1.0, &mut rng, 2, 2, 1, 0.3);
        let g = fm.sample(&lat);
        let phi = fld.sample(&lat);
        let e1 = energy(&lat, &rep, &g, &phi).unwrap();
        for c in [0.5f64, 2.0] {
            let mut g2 = g.clone();
            g2.scale(c * c);
            let e2 = energy(&lat, &rep, &g2, &phi).unwrap();
            let want = crate::fm::powi(c, 1) * e1; // c^{n-2}, n = 3
            assert!(
                (e2 - want).abs() <= 1e-13 * (1.0 + want.abs()),
                "c={c}: {e2} vs {want}"
            );
        }
    }
}
