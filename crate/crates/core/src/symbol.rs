//! Exact pointwise principal-symbol algebra for the linearized
//! gradient, the gauge operator, the scalar-curvature part, and the
//! `s`-family, together with eigen-analysis of the associated
//! quadratic forms.
//!
//! Everything happens at a single point with the metric frozen to the
//! identity (frame convention), a covector `xi`, and a unit spinor
//! `phi`. The symbol of the linearization `D Q` acts on pairs
//! `(gdot, phidot)` in `Sym^2(R^n) (+) phi^perp`:
//!
//! ```text
//! sigma_xi(DQ)(gdot, phidot) = ( (1/16)(-|xi|^2 gdot + xi . gdot(xi,.))
//!                                 - (1/4) xi . beta_xi,
//!                                -(1/4) xi ^ gdot(xi,.) . phi - |xi|^2 phidot )
//! beta_xi = sum_j <xi ^ e_j . phi, phidot> e_j
//! ```
//!
//! (`.` between covectors is the symmetrized product `x . y =
//! (x (x) y + y (x) x)/2`.) The gauge adds `-4 xi . zeta` to the metric
//! slot and `+(1/2) xi ^ gdot(xi,.) . phi` to the spinor slot, with
//! `zeta = gdot(xi,.)`; the `s`-family adds `s` times the negative
//! scalar-curvature-gradient symbol
//! `(1/2)|xi|^2 gdot - xi . zeta + (1/2)(tr gdot) xi (x) xi
//!  - (1/2)|xi|^2 (tr gdot) g + (1/2) gdot(xi,xi) g`.

use crate::clifford::CliffordRep;
use crate::geometry::two_form_action_add;
use crate::linalg::{orthonormalize, sym_len, DMat, MatN};
use crate::rng::CounterRng;
use crate::scalar::{inner_re, norm2, Scalar};
use crate::{Error, Result, MAX_N};
use alloc::vec;
use alloc::vec::Vec;

/// Point data for symbol computations.
pub struct SymbolPoint<S: Scalar> {
    pub n: usize,
    pub xi: [f64; MAX_N],
    pub phi: Vec<S>,
}

impl<S: Scalar> SymbolPoint<S> {
    /// Builds a point after normalizing the spinor; the covector is
    /// kept as given (symbol homogeneity is a tested property).
    pub fn new(rep: &CliffordRep<S>, xi: &[f64], phi: &[S]) -> Result<Self> {
        let n = rep.n();
        if xi.len() != n || phi.len() != rep.dim() {
            return Err(Error::Shape {
                what: "symbol point data",
            });
        }
        let nrm = crate::fm::sqrt(norm2(phi));
        if nrm == 0.0 {
            return Err(Error::InvalidParameter {
                what: "symbol point spinor must be nonzero",
            });
        }
        let mut p = phi.to_vec();
        for v in p.iter_mut() {
            *v = v.scale(1.0 / nrm);
        }
        let mut x = [0.0; MAX_N];
        x[..n].copy_from_slice(xi);
        Ok(SymbolPoint { n, xi: x, phi: p })
    }

    /// Random unit covector and unit spinor.
    pub fn random(rep: &CliffordRep<S>, rng: &mut CounterRng) -> Self {
        let n = rep.n();
        let dim = rep.dim();
        let mut xi = [0.0f64; MAX_N];
        loop {
            let mut s = 0.0;
            for x in xi.iter_mut().take(n) {
                *x = rng.next_range(-1.0, 1.0);
                s += *x * *x;
            }
            if s > 1e-2 {
                let inv = 1.0 / crate::fm::sqrt(s);
                for x in xi.iter_mut().take(n) {
                    *x *= inv;
                }
                break;
            }
        }
        let mut phi = vec![S::ZERO; dim];
        loop {
            for v in phi.iter_mut() {
                *v = S::from_re(rng.next_range(-1.0, 1.0));
                if let Some(iv) = S::from_re(rng.next_range(-1.0, 1.0)).try_mul_i() {
                    *v += iv;
                }
            }
            let nrm = norm2(&phi);
            if nrm > 1e-2 {
                let inv = 1.0 / crate::fm::sqrt(nrm);
                for v in phi.iter_mut() {
                    *v = v.scale(inv);
                }
                break;
            }
        }
        SymbolPoint { n, xi, phi }
    }

    fn xi_norm2(&self) -> f64 {
        let mut s = 0.0;
        for mu in 0..self.n {
            s += self.xi[mu] * self.xi[mu];
        }
        s
    }
}

/// Antisymmetric matrix of the wedge `x ^ y` of two covectors:
/// `(x ^ y)_{ab} = x_a y_b - x_b y_a`.
pub fn wedge_form(n: usize, x: &[f64], y: &[f64]) -> MatN {
    let mut f = MatN::zeros(n);
    for a in 0..n {
        for b in 0..n {
            f.a[a][b] = x[a] * y[b] - x[b] * y[a];
        }
    }
    f
}

fn sym_outer(n: usize, x: &[f64], y: &[f64]) -> MatN {
    let mut m = MatN::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.a[i][j] = 0.5 * (x[i] * y[j] + y[i] * x[j]);
        }
    }
    m
}

/// Evaluates the principal symbol of `D Q_s` (optionally with the
/// DeTurck gauge terms) on one tangent pair. The spinor slot must be
/// (real-)orthogonal to `phi`; the output spinor slot then is too.
pub fn symbol_q<S: Scalar>(
    rep: &CliffordRep<S>,
    pt: &SymbolPoint<S>,
    gdot: &MatN,
    phidot: &[S],
    s: f64,
    gauged: bool,
) -> (MatN, Vec<S>) {
    let n = pt.n;
    let dim = rep.dim();
    let xi2 = pt.xi_norm2();
    // zeta = gdot(xi, .)
    let mut zeta = [0.0f64; MAX_N];
    for mu in 0..n {
        let mut acc = 0.0;
        for nu in 0..n {
            acc += gdot.a[mu][nu] * pt.xi[nu];
        }
        zeta[mu] = acc;
    }
    // beta_xi = sum_j <xi ^ e_j . phi, phidot> e_j
    let mut beta = [0.0f64; MAX_N];
    let mut buf = vec![S::ZERO; dim];
    for j in 0..n {
        let mut ej = [0.0f64; MAX_N];
        ej[j] = 1.0;
        let f = wedge_form(n, &pt.xi[..n], &ej[..n]);
        for v in buf.iter_mut() {
            *v = S::ZERO;
        }
        two_form_action_add(rep, &f, 1.0, &pt.phi, &mut buf);
        beta[j] = inner_re(&buf, phidot);
    }

    // metric slot
    let mut out_g = MatN::zeros(n);
    let xz = sym_outer(n, &pt.xi[..n], &zeta[..n]);
    let xb = sym_outer(n, &pt.xi[..n], &beta[..n]);
    for i in 0..n {
        for j in 0..n {
            out_g.a[i][j] =
                (-xi2 * gdot.a[i][j] + xz.a[i][j]) / 16.0 - 0.25 * xb.a[i][j];
        }
    }
    if gauged {
        for i in 0..n {
            for j in 0..n {
                out_g.a[i][j] -= 4.0 * xz.a[i][j];
            }
        }
    }
    if s != 0.0 {
        let tr = gdot.trace();
        let gxx = {
            let mut acc = 0.0;
            for mu in 0..n {
                acc += zeta[mu] * pt.xi[mu];
            }
            acc
        };
        for i in 0..n {
            for j in 0..n {
                let idd = if i == j { 1.0 } else { 0.0 };
                out_g.a[i][j] += s
                    * (0.5 * xi2 * gdot.a[i][j] - xz.a[i][j]
                        + 0.5 * tr * pt.xi[i] * pt.xi[j]
                        - 0.5 * xi2 * tr * idd
                        + 0.5 * gxx * idd);
            }
        }
    }

    // spinor slot
    let mut out_phi = vec![S::ZERO; dim];
    let fz = wedge_form(n, &pt.xi[..n], &zeta[..n]);
    let coeff = if gauged { -0.25 + 0.5 } else { -0.25 };
    two_form_action_add(rep, &fz, coeff, &pt.phi, &mut out_phi);
    for (o, p) in out_phi.iter_mut().zip(phidot.iter()) {
        *o -= p.scale(xi2);
    }
    (out_g, out_phi)
}

/// Symbol of the gauge adjoint,
/// `sigma(lambda*) v = (2 xi . v, -(1/4) xi ^ v . phi)` (real pair
/// representation; the overall factor `i` is dropped).
pub fn symbol_lambda_star<S: Scalar>(
    rep: &CliffordRep<S>,
    pt: &SymbolPoint<S>,
    v: &[f64],
) -> (MatN, Vec<S>) {
    let n = pt.n;
    let g = sym_outer(n, &pt.xi[..n], v).scale(2.0);
    let mut phi = vec![S::ZERO; rep.dim()];
    let f = wedge_form(n, &pt.xi[..n], v);
    two_form_action_add(rep, &f, -0.25, &pt.phi, &mut phi);
    (g, phi)
}

/// Orthonormal basis of the tangent space `Sym^2(R^n) (+) phi^perp` at
/// the point, with `phi^perp` treated as a real vector space. The
/// metric slots use the full tensor inner product (so off-diagonal
/// basis elements carry a `1/sqrt(2)`).
pub fn tangent_basis<S: Scalar>(rep: &CliffordRep<S>, phi: &[S]) -> Vec<(MatN, Vec<S>)> {
    let n = rep.n();
    let dim = rep.dim();
    let mut basis = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut m = MatN::zeros(n);
            if i == j {
                m.a[i][i] = 1.0;
            } else {
                let v = 1.0 / crate::fm::sqrt(2.0);
                m.a[i][j] = v;
                m.a[j][i] = v;
            }
            basis.push((m, vec![S::ZERO; dim]));
        }
    }
    // real orthonormal basis of phi^perp via Gram-Schmidt over the
    // real coordinate candidates, in a fixed deterministic order
    let mut kept: Vec<Vec<S>> = Vec::new();
    for k in 0..dim {
        for lane in 0..S::LANES {
            let unit = if lane == 0 {
                S::ONE
            } else {
                match S::ONE.try_mul_i() {
                    Some(v) => v,
                    None => continue,
                }
            };
            let mut v = vec![S::ZERO; dim];
            v[k] = unit;
            // project out phi and everything already kept (two passes)
            for _ in 0..2 {
                let d = inner_re(&v, phi);
                for (vi, pi) in v.iter_mut().zip(phi.iter()) {
                    *vi -= pi.scale(d);
                }
                for u in &kept {
                    let d = inner_re(&v, u);
                    for (vi, ui) in v.iter_mut().zip(u.iter()) {
                        *vi -= ui.scale(d);
                    }
                }
            }
            let nrm = norm2(&v);
            if nrm > 1e-12 {
                let inv = 1.0 / crate::fm::sqrt(nrm);
                for vi in v.iter_mut() {
                    *vi = vi.scale(inv);
                }
                kept.push(v);
            }
        }
    }
    debug_assert_eq!(kept.len(), S::LANES * dim - 1);
    for v in kept {
        basis.push((MatN::zeros(n), v));
    }
    basis
}

/// Inner product on `Sym^2 (+) Sigma`: full tensor contraction plus
/// the real spinor inner product.
pub fn pair_dot<S: Scalar>(a: &(MatN, Vec<S>), b: &(MatN, Vec<S>)) -> f64 {
    a.0.dot(&b.0) + inner_re(&a.1, &b.1)
}

/// The symbol quadratic form on an orthonormal tangent basis, with its
/// eigen-decomposition.
pub struct SymbolForm {
    /// Total real dimension `sym_len(n) + (LANES * dim - 1)`.
    pub dim: usize,
    /// Symmetrized form matrix over the orthonormal basis.
    pub matrix: DMat,
    /// Eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors (columns, in basis coordinates).
    pub vectors: DMat,
    /// Number of eigenvalues with `|ev| <= kernel_tol`.
    pub kernel_dim: usize,
    /// Tolerance used for the kernel count.
    pub kernel_tol: f64,
    /// Asymmetry of the raw assembled matrix (invariant check).
    pub max_asymmetry: f64,
}

impl SymbolForm {
    /// Largest eigenvalue.
    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    /// Basis-coordinate vectors spanning the kernel.
    pub fn kernel_basis(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for (k, ev) in self.eigenvalues.iter().enumerate() {
            if crate::fm::abs(*ev) <= self.kernel_tol {
                let mut v = vec![0.0; self.dim];
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi = self.vectors.get(i, k);
                }
                out.push(v);
            }
        }
        out
    }
}

/// Assembles the quadratic form
/// `(gdot, phidot) -> (sigma(...)(gdot, phidot), (gdot, phidot))`
/// over the orthonormal tangent basis and diagonalizes it.
pub fn symbol_quadratic_form<S: Scalar>(
    rep: &CliffordRep<S>,
    pt: &SymbolPoint<S>,
    s: f64,
    gauged: bool,
) -> SymbolForm {
    let basis = tangent_basis(rep, &pt.phi);
    let dim = basis.len();
    debug_assert_eq!(
        dim,
        sym_len(pt.n) + (S::LANES * rep.dim() - 1)
    );
    let mut m = DMat::zeros(dim);
    for (k, bk) in basis.iter().enumerate() {
        let image = symbol_q(rep, pt, &bk.0, &bk.1, s, gauged);
        for (l, bl) in basis.iter().enumerate() {
            m.set(k, l, pair_dot(&image, bl));
        }
    }
    let max_asymmetry = m.max_abs_asymmetry();
    let (eigenvalues, vectors) = m.sym_eigen();
    let mut scale = 1.0f64;
    for ev in &eigenvalues {
        scale = crate::fm::max(scale, crate::fm::abs(*ev));
    }
    let kernel_tol = 1e-11 * scale;
    let kernel_dim = eigenvalues
        .iter()
        .filter(|ev| crate::fm::abs(**ev) <= kernel_tol)
        .count();
    SymbolForm {
        dim,
        matrix: m,
        eigenvalues,
        vectors,
        kernel_dim,
        kernel_tol,
        max_asymmetry,
    }
}

/// Coordinates of the images `sigma(lambda*) e_mu` in the orthonormal
/// tangent basis (one vector per coordinate direction).
pub fn lambda_star_image_coords<S: Scalar>(
    rep: &CliffordRep<S>,
    pt: &SymbolPoint<S>,
) -> Vec<Vec<f64>> {
    let basis = tangent_basis(rep, &pt.phi);
    let mut out = Vec::new();
    for mu in 0..pt.n {
        let mut v = [0.0f64; MAX_N];
        v[mu] = 1.0;
        let image = symbol_lambda_star(rep, pt, &v[..pt.n]);
        let coords: Vec<f64> = basis.iter().map(|b| pair_dot(&image, b)).collect();
        out.push(coords);
    }
    out
}

/// Symmetric subspace distance: the largest residual of a unit vector
/// of either span against the other span. Returns `(distance, rank_a,
/// rank_b)`.
pub fn subspace_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, usize, usize) {
    let mut oa: Vec<Vec<f64>> = a.to_vec();
    let mut ob: Vec<Vec<f64>> = b.to_vec();
    let ra = orthonormalize(&mut oa, 1e-10);
    let rb = orthonormalize(&mut ob, 1e-10);
    let resid = |from: &[Vec<f64>], against: &[Vec<f64>]| -> f64 {
        let mut worst = 0.0f64;
        for u in from {
            let mut r = u.clone();
            for w in against {
                let d: f64 = w.iter().zip(r.iter()).map(|(x, y)| x * y).sum();
                for (ri, wi) in r.iter_mut().zip(w.iter()) {
                    *ri -= d * wi;
                }
            }
            let nrm = crate::fm::sqrt(r.iter().map(|x| x * x).sum::<f64>());
            worst = crate::fm::max(worst, nrm);
        }
        worst
    };
    (
        crate::fm::max(resid(&oa, &ob), resid(&ob, &oa)),
        ra,
        rb,
    )
}

/// Locates the weak-ellipticity window in `s` by bisection on the sign
/// of the largest eigenvalue of the ungauged form. Requires `n >= 3`
/// (for `n = 2` the scalar-curvature term has a vanishing symbol and
/// there is no finite window).
pub fn ellipticity_window<S: Scalar>(
    rep: &CliffordRep<S>,
    pt: &SymbolPoint<S>,
) -> Result<(f64, f64)> {
    if pt.n < 3 {
        return Err(Error::UnsupportedDimension {
            n: pt.n,
            what: "ellipticity window needs n >= 3",
        });
    }
    let positive = |s: f64| -> bool {
        symbol_quadratic_form(rep, pt, s, false).max_eigenvalue() > 1e-10
    };
    // bisect the boundary of { t in [0, 1] : positive(f(t)) }, where
    // positivity holds at t = 1 but not at t = 0
    let bisect = |f: &dyn Fn(f64) -> f64| -> f64 {
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if positive(f(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        f(0.5 * (lo + hi))
    };
    debug_assert!(!positive(0.0) && positive(1.0) && positive(-1.0));
    let s_hi = bisect(&|t| t);
    let s_lo = bisect(&|t| -t);
    Ok((s_lo, s_hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn point(n: usize, seed: u64) -> (CliffordRep<Complex64>, SymbolPoint<Complex64>) {
        let rep = CliffordRep::complex(n).unwrap();
        let mut rng = CounterRng::new(seed);
        let pt = SymbolPoint::random(&rep, &mut rng);
        (rep, pt)
    }

    fn form_value(
        rep: &CliffordRep<Complex64>,
        pt: &SymbolPoint<Complex64>,
        gdot: &MatN,
        phidot: &[Complex64],
        s: f64,
        gauged: bool,
    ) -> f64 {
        let image = symbol_q(rep, pt, gdot, phidot, s, gauged);
        pair_dot(&image, &(*gdot, phidot.to_vec()))
    }

    #[test]
    fn pure_xi_squared_direction_is_null_ungauged_and_minus_four_gauged() {
        for n in [3usize, 4, 7] {
            let (rep, pt) = point(n, 100 + n as u64);
            let gdot = sym_outer(n, &pt.xi[..n], &pt.xi[..n]);
            let zero = vec![Complex64::new(0.0, 0.0); rep.dim()];
            let v0 = form_value(&rep, &pt, &gdot, &zero, 0.0, false);
            assert!(v0.abs() < 1e-12, "n={n}: ungauged {v0}");
            // the gauge term contributes -4 a^2 (from -4 xi . zeta);
            // with a = 1 the gauged form value is -4
            let v1 = form_value(&rep, &pt, &gdot, &zero, 0.0, true);
            assert!((v1 + 4.0).abs() < 1e-12, "n={n}: gauged {v1}");
        }
    }

    #[test]
    fn kernel_directions_annihilate_the_form() {
        for n in [3usize, 4, 7] {
            let (rep, pt) = point(n, 200 + n as u64);
            let mut rng = CounterRng::new(5 + n as u64);
            // v orthogonal to xi
            let mut v = [0.0f64; MAX_N];
            for x in v.iter_mut().take(n) {
                *x = rng.next_range(-1.0, 1.0);
            }
            let d: f64 = (0..n).map(|i| v[i] * pt.xi[i]).sum();
            for i in 0..n {
                v[i] -= d * pt.xi[i];
            }
            let gdot = sym_outer(n, &pt.xi[..n], &v[..n]);
            // phidot = -(1/4) xi ^ gdot(xi,.) . phi
            let mut zeta = [0.0f64; MAX_N];
            for mu in 0..n {
                zeta[mu] = (0..n).map(|nu| gdot.a[mu][nu] * pt.xi[nu]).sum();
            }
            let f = wedge_form(n, &pt.xi[..n], &zeta[..n]);
            let mut phidot = vec![Complex64::new(0.0, 0.0); rep.dim()];
            two_form_action_add(&rep, &f, -0.25, &pt.phi, &mut phidot);
            let val = form_value(&rep, &pt, &gdot, &phidot, 0.0, false);
            let scale = gdot.dot(&gdot) + norm2(&phidot);
            assert!(val.abs() <= 1e-12 * (1.0 + scale), "n={n}: {val}");
        }
    }

    #[test]
    fn ungauged_form_is_negative_semidefinite_with_kernel_dim_n() {
        for n in [3usize, 4, 7] {
            let (rep, pt) = point(n, 300 + n as u64);
            let form = symbol_quadratic_form(&rep, &pt, 0.0, false);
            assert!(form.max_asymmetry < 1e-13);
            assert!(form.max_eigenvalue() <= 1e-12, "{}", form.max_eigenvalue());
            assert_eq!(form.kernel_dim, n, "eigs: {:?}", form.eigenvalues);
        }
    }

    #[test]
    fn lambda_star_image_equals_symbol_kernel() {
        for n in [3usize, 4, 7] {
            let (rep, pt) = point(n, 400 + n as u64);
            let form = symbol_quadratic_form(&rep, &pt, 0.0, false);
            let ker = form.kernel_basis();
            let img = lambda_star_image_coords(&rep, &pt);
            let (dist, ra, rb) = subspace_distance(&img, &ker);
            assert_eq!(ra, n, "lambda* not injective");
            assert_eq!(rb, n);
            assert!(dist <= 1e-8, "n={n}: subspace distance {dist}");
        }
    }

    #[test]
    fn gauged_form_has_the_required_negative_bound() {
        for n in [3usize, 4, 7] {
            let (rep, pt) = point(n, 500 + n as u64);
            let basis = tangent_basis(&rep, &pt.phi);
            let form = symbol_quadratic_form(&rep, &pt, 0.0, true);
            // compare the form to the bound matrix
            // -(1/16)|gdot|^2 - |phidot|^2 on the same basis
            for (k, bk) in basis.iter().enumerate() {
                let bound = -(1.0 / 16.0) * bk.0.dot(&bk.0) - norm2(&bk.1);
                assert!(
                    form.matrix.get(k, k) <= bound + 1e-12,
                    "n={n}: diag {} vs bound {bound}",
                    form.matrix.get(k, k)
                );
            }
            // and globally: max eigenvalue of (form - bound-diagonal)
            let dim = form.dim;
            let mut shifted = DMat::zeros(dim);
            for k in 0..dim {
                for l in 0..dim {
                    shifted.set(k, l, form.matrix.get(k, l));
                }
                let bound = -(1.0 / 16.0) * basis[k].0.dot(&basis[k].0) - norm2(&basis[k].1);
                shifted.set(k, k, form.matrix.get(k, k) - bound);
            }
            let (evs, _) = shifted.sym_eigen();
            assert!(
                *evs.last().unwrap() <= 1e-12,
                "n={n}: gauged bound violated by {}",
                evs.last().unwrap()
            );
        }
    }

    #[test]
    fn form_is_quadratically_homogeneous_in_xi() {
        let (rep, pt) = point(3, 600);
        let mut rng = CounterRng::new(77);
        let mut gdot = MatN::zeros(3);
        for i in 0..3 {
            for j in i..3 {
                let v = rng.next_range(-1.0, 1.0);
                gdot.a[i][j] = v;
                gdot.a[j][i] = v;
            }
        }
        let mut phidot = vec![Complex64::new(0.0, 0.0); rep.dim()];
        for v in phidot.iter_mut() {
            *v = Complex64::new(rng.next_range(-1.0, 1.0), rng.next_range(-1.0, 1.0));
        }
        let d = inner_re(&phidot, &pt.phi);
        for (v, p) in phidot.iter_mut().zip(pt.phi.iter()) {
            *v -= p.scale(d);
        }
        let v1 = form_value(&rep, &pt, &gdot, &phidot, 0.03, false);
        let c = 1.7;
        let mut scaled = pt.xi;
        for x in scaled.iter_mut().take(3) {
            *x *= c;
        }
        let pt2 = SymbolPoint {
            n: 3,
            xi: scaled,
            phi: pt.phi.clone(),
        };
        let v2 = form_value(&rep, &pt2, &gdot, &phidot, 0.03, false);
        assert!(
            (v2 - c * c * v1).abs() <= 1e-12 * (1.0 + v1.abs() * c * c),
            "{v2} vs {}",
            c * c * v1
        );
    }

    #[test]
    fn window_endpoints_match_the_analytic_values() {
        for n in [3usize, 5, 7] {
            let (rep, pt) = point(n, 700 + n as u64);
            let (lo, hi) = ellipticity_window(&rep, &pt).unwrap();
            let want_lo = -1.0 / (8.0 * (n as f64 - 2.0));
            assert!((hi - 0.125).abs() < 1e-6, "n={n}: hi {hi}");
            assert!((lo - want_lo).abs() < 1e-6, "n={n}: lo {lo} want {want_lo}");
        }
    }
}
