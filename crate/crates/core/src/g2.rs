//! Dimension-7 bridge between real unit spinors and 3-forms.
//!
//! A real unit spinor on a 7-dimensional space determines a stable
//! 3-form through the bispinor expansion
//! `phi (x) phi = 1 + Omega + *Omega + vol`
//! (degrees 1, 2, 5, 6 vanish identically). This module computes the
//! expansion, the covariant derivative of `Omega`, and the two
//! Dirichlet functionals
//! `C = 1/2 int |nabla Omega|^2` and
//! `D = 1/2 int (|d Omega|^2 + |d *Omega|^2)`,
//! which match `16 E_0` and `16 E_{1/16}` up to discretization error.
//!
//! Conventions: form components are over increasing index tuples in an
//! orthonormal frame (the Lambda-metric), enumerated by ascending
//! 7-bit masks; the representation must satisfy
//! `gamma_1 ... gamma_7 = +Id`.

use crate::clifford::{CliffordRep, Monomial};
use crate::field::{Field, Pair};
use crate::fm;
use crate::functional::{energy_with, total_scalar};
use crate::geometry::{
    frame_at, frame_data, metric_at, omega_get, spin_connection_at, FrameData, MAX_PAIR,
};
use crate::jet::{PointGeometry, SpinorJet};
use crate::lattice::TorusLattice;
use crate::linalg::MatN;
use crate::rng::CounterRng;
use crate::scalar::inner_re;
use crate::{Error, Result, MAX_N};
use alloc::vec;
use alloc::vec::Vec;

const N7: usize = 7;
const DIM8: usize = 8;
/// Component count of a degree-3 (or 4) form in dimension 7.
pub const LEN3: usize = 35;
/// Component count of a degree-5 form in dimension 7.
pub const LEN5: usize = 21;
const FULL4: usize = 2401;

fn mask_tuple(mask: u8) -> ([usize; N7], usize) {
    let mut t = [0usize; N7];
    let mut len = 0;
    for i in 0..N7 {
        if mask & (1 << i) != 0 {
            t[len] = i;
            len += 1;
        }
    }
    (t, len)
}

/// Sign of the permutation sorting the concatenation of two disjoint
/// ascending index sets: `(-1)^{#{(a,b) in I x J : a > b}}`.
fn concat_sign(i_mask: u8, j_mask: u8) -> f64 {
    let mut inversions = 0u32;
    for b in 0..N7 {
        if j_mask & (1 << b) != 0 {
            inversions += (i_mask >> (b + 1)).count_ones();
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sign picked up when one index of a sorted tuple is replaced by a new
/// value and the tuple is re-sorted: `(-1)^{#others strictly between}`.
fn slide_sign(others: u8, from: usize, to: usize) -> f64 {
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    let cnt = if hi > lo + 1 {
        ((others >> (lo + 1)) & ((1u8 << (hi - lo - 1)) - 1)).count_ones()
    } else {
        0
    };
    if cnt % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn for_each_permutation(len: usize, f: &mut dyn FnMut(&[usize; N7], f64)) {
    // Heap's algorithm with parity tracking.
    let mut idx = [0usize; N7];
    for (k, v) in idx.iter_mut().enumerate() {
        *v = k;
    }
    let mut c = [0usize; N7];
    let mut sign = 1.0;
    f(&idx, sign);
    let mut i = 0;
    while i < len {
        if c[i] < i {
            if i % 2 == 0 {
                idx.swap(0, i);
            } else {
                idx.swap(c[i], i);
            }
            sign = -sign;
            f(&idx, sign);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// One term of a tabulated exterior-derivative assembly:
/// `(axis, source component rank, sign)`.
#[derive(Clone, Copy, Debug)]
struct DTerm {
    axis: usize,
    src: usize,
    sign: f64,
}

/// Precomputed combinatorial tables and Clifford monomials for the
/// 7-dimensional form calculus.
pub struct FormCalculus {
    /// Ascending masks per degree.
    masks: [Vec<u8>; 8],
    /// Mask -> component rank, per degree.
    rank: [[u8; 128]; 8],
    /// Clifford monomials `gamma_I` per degree, in component order.
    monos: [Vec<Monomial<f64>>; 8],
    /// Degree-3 rank -> (degree-4 dual rank, sign).
    hodge3: Vec<(usize, f64)>,
    /// Exterior derivative tables: 3-form -> 4-form and 4-form -> 5-form.
    d3: Vec<Vec<DTerm>>,
    d4: Vec<Vec<DTerm>>,
}

impl FormCalculus {
    pub fn new(rep: &CliffordRep<f64>) -> Result<Self> {
        if rep.n() != N7 || rep.dim() != DIM8 {
            return Err(Error::UnsupportedDimension {
                n: rep.n(),
                what: "the form calculus requires the real 7-dimensional representation",
            });
        }
        let volume = rep.volume_product();
        for r in 0..DIM8 {
            for c in 0..DIM8 {
                let want = if r == c { 1.0 } else { 0.0 };
                if (volume[r * DIM8 + c] - want).abs() > 1e-12 {
                    return Err(Error::InvalidParameter {
                        what: "the volume element must act as +Id",
                    });
                }
            }
        }
        let mut masks: [Vec<u8>; 8] = Default::default();
        let mut rank = [[0u8; 128]; 8];
        for mask in 0u8..128 {
            let p = mask.count_ones() as usize;
            rank[p][mask as usize] = masks[p].len() as u8;
            masks[p].push(mask);
        }
        let mut monos: [Vec<Monomial<f64>>; 8] = Default::default();
        for p in 0..=N7 {
            for &mask in &masks[p] {
                let (t, len) = mask_tuple(mask);
                monos[p].push(rep.monomial_product(&t[..len]));
            }
        }
        let mut hodge3 = Vec::with_capacity(LEN3);
        for &mask in &masks[3] {
            let dual = !mask & 0x7f;
            hodge3.push((rank[4][dual as usize] as usize, concat_sign(mask, dual)));
        }
        let build_d = |p: usize| -> Vec<Vec<DTerm>> {
            masks[p + 1]
                .iter()
                .map(|&out_mask| {
                    let (t, len) = mask_tuple(out_mask);
                    (0..len)
                        .map(|k| DTerm {
                            axis: t[k],
                            src: rank[p][(out_mask & !(1u8 << t[k])) as usize] as usize,
                            sign: if k % 2 == 0 { 1.0 } else { -1.0 },
                        })
                        .collect()
                })
                .collect()
        };
        let d3 = build_d(3);
        let d4 = build_d(4);
        Ok(FormCalculus {
            masks,
            rank,
            monos,
            hodge3,
            d3,
            d4,
        })
    }

    /// Number of components of a degree-`p` form.
    pub fn degree_len(&self, p: usize) -> usize {
        self.masks[p].len()
    }

    fn rank_of(&self, p: usize, mask: u8) -> usize {
        self.rank[p][mask as usize] as usize
    }

    /// All bispinor coefficients `c_I = <phi, gamma_I psi>`, grouped by
    /// degree 0..=7, components over ascending masks.
    pub fn bispinor_parts(&self, phi: &[f64], psi: &[f64]) -> Vec<Vec<f64>> {
        (0..=N7)
            .map(|p| {
                self.monos[p]
                    .iter()
                    .map(|m| m.inner_re(DIM8, phi, psi))
                    .collect()
            })
            .collect()
    }

    /// Degree-3 coefficients of `phi (x) phi`: the 3-form `Omega`.
    pub fn omega_coefficients(&self, phi: &[f64], out: &mut [f64]) {
        for (o, m) in out.iter_mut().zip(self.monos[3].iter()) {
            *o = m.inner_re(DIM8, phi, phi);
        }
    }

    /// Flat-frame Hodge dual of a 3-form: `sigma_J = eps(I, J) omega_I`.
    pub fn hodge_dual3(&self, omega: &[f64], out: &mut [f64]) {
        for (i, &(j, s)) in self.hodge3.iter().enumerate() {
            out[j] = s * omega[i];
        }
    }

    /// Frame-rotation part of the covariant derivative of a degree-`p`
    /// form: subtracts
    /// `sum_k sum_d omega_{mu a_k d} T_{a_0 .. d .. a_{p-1}}`
    /// from `out` for every component.
    pub fn rotate_form(
        &self,
        p: usize,
        conn: &[f64],
        mu: usize,
        comps: &[f64],
        out: &mut [f64],
    ) {
        for (r, &mask) in self.masks[p].iter().enumerate() {
            let (t, len) = mask_tuple(mask);
            let mut acc = 0.0;
            for &a in &t[..len] {
                let others = mask & !(1u8 << a);
                for d in 0..N7 {
                    if d == a || others & (1u8 << d) != 0 {
                        continue;
                    }
                    let w = omega_get(N7, conn, mu, a, d);
                    if w != 0.0 {
                        let target = others | (1u8 << d);
                        acc += w
                            * slide_sign(others, a, d)
                            * comps[self.rank_of(p, target)];
                    }
                }
            }
            out[r] -= acc;
        }
    }

    /// Assembles the coordinate exterior derivative from tabulated
    /// per-axis stencil derivatives `dcomps[axis * len + r]`.
    fn assemble_d(&self, table: &[Vec<DTerm>], len: usize, dcomps: &[f64], out: &mut [f64]) {
        for (o, terms) in out.iter_mut().zip(table.iter()) {
            let mut acc = 0.0;
            for t in terms {
                acc += t.sign * dcomps[t.axis * len + t.src];
            }
            *o = acc;
        }
    }

    /// Converts increasing frame components to increasing coordinate
    /// components by contracting every leg with `binv = g^{1/2}`
    /// (coframe `E^a = sum_mu binv_{a mu} dx^mu`).
    fn frame_to_coords(
        &self,
        p: usize,
        binv: &MatN,
        input: &[f64],
        out: &mut [f64],
        full_a: &mut [f64],
        full_b: &mut [f64],
    ) {
        let size = N7.pow(p as u32);
        for v in full_a[..size].iter_mut() {
            *v = 0.0;
        }
        for (r, &mask) in self.masks[p].iter().enumerate() {
            let val = input[r];
            if val == 0.0 {
                continue;
            }
            let (t, len) = mask_tuple(mask);
            for_each_permutation(len, &mut |perm, sign| {
                let mut idx = 0usize;
                for slot in 0..len {
                    idx = idx * N7 + t[perm[slot]];
                }
                full_a[idx] = sign * val;
            });
        }
        let mut src = full_a;
        let mut dst = full_b;
        for leg in 0..p {
            let stride = N7.pow((p - 1 - leg) as u32);
            for v in dst[..size].iter_mut() {
                *v = 0.0;
            }
            for i in 0..size {
                let x = src[i];
                if x == 0.0 {
                    continue;
                }
                let digit = (i / stride) % N7;
                let base = i - digit * stride;
                for nd in 0..N7 {
                    dst[base + nd * stride] += binv.a[digit][nd] * x;
                }
            }
            core::mem::swap(&mut src, &mut dst);
        }
        for (r, &mask) in self.masks[p].iter().enumerate() {
            let (t, len) = mask_tuple(mask);
            let mut idx = 0usize;
            for slot in 0..len {
                idx = idx * N7 + t[slot];
            }
            out[r] = src[idx];
        }
    }

    /// Lambda inner product of degree-`p` coordinate components under a
    /// general inverse metric, via Gram minor determinants.
    fn lambda_inner(&self, p: usize, a: &[f64], b: &[f64], ginv: &MatN) -> f64 {
        let masks = &self.masks[p];
        let mut acc = 0.0;
        for (i, &mi) in masks.iter().enumerate() {
            if a[i] == 0.0 {
                continue;
            }
            let (ti, leni) = mask_tuple(mi);
            for (j, &mj) in masks.iter().enumerate() {
                if b[j] == 0.0 {
                    continue;
                }
                let (tj, _) = mask_tuple(mj);
                acc += a[i] * b[j] * gram_minor(ginv, &ti[..leni], &tj[..leni]);
            }
        }
        acc
    }
}

/// Determinant of the minor `ginv[rows, cols]` (k <= 7), by Gaussian
/// elimination with partial pivoting.
fn gram_minor(ginv: &MatN, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    let mut m = [[0.0f64; N7]; N7];
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            m[i][j] = ginv.a[r][c];
        }
    }
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in (col + 1)..k {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in (col + 1)..k {
            let f = m[r][col] / m[col][col];
            for c in col..k {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    det
}

/// `Some(gamma)` when the metric at a site is exactly `gamma * Id`.
fn isotropy_factor(n: usize, gs: &[f64]) -> Option<f64> {
    let gamma = gs[0];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let want = if i == j { gamma } else { 0.0 };
            if gs[k] != want {
                return None;
            }
            k += 1;
        }
    }
    Some(gamma)
}

/// The bispinor expansion of a unit spinor field: degree 0, 3, 4, 7
/// coefficient fields in the orthonormal frame, plus the largest
/// coefficient found in the identically-vanishing degrees 1, 2, 5, 6.
pub struct FormBundle7 {
    pub scalar: Field<f64>,
    pub omega: Field<f64>,
    pub sigma: Field<f64>,
    pub vol: Field<f64>,
    pub max_spurious: f64,
}

/// Builds the full bispinor bundle of `phi (x) phi` over the lattice.
/// Fails if the spinor is not pointwise unit to `1e-6`.
pub fn form_bundle(
    lat: &TorusLattice,
    fc: &FormCalculus,
    phi: &Field<f64>,
) -> Result<FormBundle7> {
    let mut scalar = Field::new(lat, 1, 0.0);
    let mut omega = Field::new(lat, LEN3, 0.0);
    let mut sigma = Field::new(lat, LEN3, 0.0);
    let mut vol = Field::new(lat, 1, 0.0);
    let mut max_spurious = 0.0f64;
    for s in 0..lat.num_sites() {
        let psi = phi.at(s);
        let n2 = crate::scalar::norm2(psi);
        if fm::abs(n2 - 1.0) > 2e-6 {
            return Err(Error::InvalidParameter {
                what: "the bispinor expansion requires a pointwise unit spinor",
            });
        }
        let parts = fc.bispinor_parts(psi, psi);
        scalar.at_mut(s)[0] = parts[0][0];
        vol.at_mut(s)[0] = parts[7][0];
        omega.at_mut(s).copy_from_slice(&parts[3]);
        sigma.at_mut(s).copy_from_slice(&parts[4]);
        for &p in &[1usize, 2, 5, 6] {
            for &c in &parts[p] {
                max_spurious = fm::max(max_spurious, fm::abs(c));
            }
        }
    }
    Ok(FormBundle7 {
        scalar,
        omega,
        sigma,
        vol,
        max_spurious,
    })
}

/// The degree-3 coefficient field of the bispinor (frame components).
pub fn omega_frame_field(lat: &TorusLattice, fc: &FormCalculus, phi: &Field<f64>) -> Field<f64> {
    let mut omega = Field::new(lat, LEN3, 0.0);
    for s in 0..lat.num_sites() {
        fc.omega_coefficients(phi.at(s), omega.at_mut(s));
    }
    omega
}

/// Exact covariant derivative `(nabla_mu Omega)_I` at a point, from
/// 2-jets: the stencil-free reference used by the oracle tests. Layout
/// `out[mu * 35 + rank]`.
pub fn nabla_omega_point(
    fc: &FormCalculus,
    pg: &PointGeometry<f64>,
    sj: &SpinorJet<f64>,
) -> Vec<f64> {
    let mut out = vec![0.0; N7 * LEN3];
    let base: Vec<f64> = fc.monos[3]
        .iter()
        .map(|m| m.inner_re(DIM8, &sj.value, &sj.value))
        .collect();
    for mu in 0..N7 {
        let dphi = &sj.d1[mu * DIM8..(mu + 1) * DIM8];
        let block = &mut out[mu * LEN3..(mu + 1) * LEN3];
        for (r, m) in fc.monos[3].iter().enumerate() {
            block[r] = m.inner_re(DIM8, dphi, &sj.value) + m.inner_re(DIM8, &sj.value, dphi);
        }
        fc.rotate_form(3, &pg.omega, mu, &base, block);
    }
    out
}

/// Report of the pointwise norm correspondence between `nabla phi` and
/// `nabla Omega` at an oracle jet.
#[derive(Clone, Copy, Debug)]
pub struct NormReport {
    /// `16 |nabla phi|^2`.
    pub lhs16: f64,
    /// `|nabla Omega|^2`.
    pub rhs_omega: f64,
    /// `|nabla (*Omega)|^2`.
    pub rhs_sigma: f64,
    /// Largest deviation of `16 <nabla_mu phi, nabla_nu phi>` from the
    /// Omega-side bilinear form, over all coordinate pairs.
    pub max_pair_err: f64,
    /// Largest deviation between the Omega and *Omega bilinear forms.
    pub split_max_err: f64,
    /// Largest deviation of `(nabla_mu Omega)_I` from
    /// `2 <gamma_I phi, nabla_mu phi>` (the Clifford Leibniz rule).
    pub algebraic_max_err: f64,
}

/// Verifies `16 |nabla phi|^2 = |nabla Omega|^2` (and the split
/// `32 |nabla phi|^2 = |nabla Omega|^2 + |nabla *Omega|^2`) at a point,
/// differentiating the bispinor through exact jets.
pub fn norm_correspondence(
    fc: &FormCalculus,
    pg: &PointGeometry<f64>,
    sj: &SpinorJet<f64>,
) -> NormReport {
    let nab_om = nabla_omega_point(fc, pg, sj);
    // sigma coefficients dualize pointwise with constant signs, so the
    // partial-derivative part dualizes too; rotations act on 4 legs.
    let mut nab_sig = vec![0.0; N7 * LEN3];
    let base_om: Vec<f64> = fc.monos[3]
        .iter()
        .map(|m| m.inner_re(DIM8, &sj.value, &sj.value))
        .collect();
    let mut base_sig = vec![0.0; LEN3];
    fc.hodge_dual3(&base_om, &mut base_sig);
    for mu in 0..N7 {
        let dphi = &sj.d1[mu * DIM8..(mu + 1) * DIM8];
        let d_om: Vec<f64> = fc.monos[3]
            .iter()
            .map(|m| m.inner_re(DIM8, dphi, &sj.value) + m.inner_re(DIM8, &sj.value, dphi))
            .collect();
        let block = &mut nab_sig[mu * LEN3..(mu + 1) * LEN3];
        fc.hodge_dual3(&d_om, block);
        fc.rotate_form(4, &pg.omega, mu, &base_sig, block);
    }

    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let mut m_phi = [[0.0f64; N7]; N7];
    let mut m_om = [[0.0f64; N7]; N7];
    let mut m_sig = [[0.0f64; N7]; N7];
    for mu in 0..N7 {
        for nu in 0..N7 {
            m_phi[mu][nu] = inner_re(
                &pg.nabla[mu * DIM8..(mu + 1) * DIM8],
                &pg.nabla[nu * DIM8..(nu + 1) * DIM8],
            );
            m_om[mu][nu] = dot(
                &nab_om[mu * LEN3..(mu + 1) * LEN3],
                &nab_om[nu * LEN3..(nu + 1) * LEN3],
            );
            m_sig[mu][nu] = dot(
                &nab_sig[mu * LEN3..(mu + 1) * LEN3],
                &nab_sig[nu * LEN3..(nu + 1) * LEN3],
            );
        }
    }
    let mut lhs16 = 0.0;
    let mut rhs_omega = 0.0;
    let mut rhs_sigma = 0.0;
    let mut max_pair_err = 0.0f64;
    let mut split_max_err = 0.0f64;
    for mu in 0..N7 {
        for nu in 0..N7 {
            let w = pg.ginv.a[mu][nu];
            lhs16 += 16.0 * w * m_phi[mu][nu];
            rhs_omega += w * m_om[mu][nu];
            rhs_sigma += w * m_sig[mu][nu];
            max_pair_err = fm::max(max_pair_err, fm::abs(16.0 * m_phi[mu][nu] - m_om[mu][nu]));
            split_max_err = fm::max(split_max_err, fm::abs(m_om[mu][nu] - m_sig[mu][nu]));
        }
    }
    let mut algebraic_max_err = 0.0f64;
    for mu in 0..N7 {
        let nab_mu = &pg.nabla[mu * DIM8..(mu + 1) * DIM8];
        for (r, m) in fc.monos[3].iter().enumerate() {
            let alg = 2.0 * m.inner_re(DIM8, nab_mu, &sj.value);
            algebraic_max_err =
                fm::max(algebraic_max_err, fm::abs(nab_om[mu * LEN3 + r] - alg));
        }
    }
    NormReport {
        lhs16,
        rhs_omega,
        rhs_sigma,
        max_pair_err,
        split_max_err,
        algebraic_max_err,
    }
}

/// Both sides of the two Dirichlet identities.
#[derive(Clone, Copy, Debug)]
pub struct DirichletReport {
    /// `C = 1/2 int |nabla Omega|^2 dv`.
    pub c: f64,
    /// `16 E_0`.
    pub sixteen_e0: f64,
    /// `D = 1/2 int (|d Omega|^2 + |d *Omega|^2) dv`.
    pub d: f64,
    /// `16 E_{1/16} = 16 E_0 + int scal dv`.
    pub sixteen_es: f64,
}

impl DirichletReport {
    pub fn c_rel_err(&self) -> f64 {
        fm::abs(self.c - self.sixteen_e0) / (1e-300 + fm::abs(self.sixteen_e0))
    }

    pub fn d_rel_err(&self) -> f64 {
        fm::abs(self.d - self.sixteen_es) / (1e-300 + fm::abs(self.sixteen_es))
    }
}

/// `C = 1/2 int |nabla Omega|^2 dv` with `nabla Omega` from central
/// stencils on the frame coefficient field plus connection rotations.
fn dirichlet_c(
    lat: &TorusLattice,
    fc: &FormCalculus,
    g: &Field<f64>,
    frame: &FrameData,
    omf: &Field<f64>,
) -> f64 {
    let n = lat.n();
    let mut acc = 0.0;
    let mut conn = [0.0f64; MAX_N * MAX_PAIR];
    let mut nab = [[0.0f64; LEN3]; N7];
    for site in lat.sites() {
        spin_connection_at(lat, g, frame, &site, &mut conn);
        let base = omf.at(site.index);
        for mu in 0..n {
            lat.diff_slice(&site, mu, LEN3, omf.data(), &mut nab[mu]);
            fc.rotate_form(3, &conn, mu, base, &mut nab[mu]);
        }
        let b = frame_at(n, frame, site.index);
        let ginv = b.matmul(&b);
        let mut dens = 0.0;
        for mu in 0..n {
            for nu in mu..n {
                let w = ginv.a[mu][nu];
                if w != 0.0 {
                    let mut d = 0.0;
                    for r in 0..LEN3 {
                        d += nab[mu][r] * nab[nu][r];
                    }
                    dens += if mu == nu { w * d } else { 2.0 * w * d };
                }
            }
        }
        acc += 0.5 * dens * frame.sqrt_det.at(site.index)[0];
    }
    acc * lat.cell_volume()
}

/// Converts the frame coefficient field of `Omega` into coordinate
/// component fields of `Omega` (reusing the input's storage) and
/// `sigma = *Omega`.
fn forms_to_coordinates(
    lat: &TorusLattice,
    fc: &FormCalculus,
    g: &Field<f64>,
    frame: &FrameData,
    mut omf: Field<f64>,
    allow_fast: bool,
) -> (Field<f64>, Field<f64>) {
    let n = lat.n();
    let mut sigma = Field::new(lat, LEN3, 0.0);
    let mut full_a = vec![0.0f64; FULL4];
    let mut full_b = vec![0.0f64; FULL4];
    let mut sig_frame = [0.0f64; LEN3];
    let mut om_frame = [0.0f64; LEN3];
    for s in 0..lat.num_sites() {
        om_frame.copy_from_slice(omf.at(s));
        fc.hodge_dual3(&om_frame, &mut sig_frame);
        let fast = if allow_fast {
            isotropy_factor(n, g.at(s))
        } else {
            None
        };
        match fast {
            Some(gamma) => {
                // binv = sqrt(gamma) Id: pure scaling per leg.
                let s3 = gamma * fm::sqrt(gamma);
                let s4 = gamma * gamma;
                for (o, v) in omf.at_mut(s).iter_mut().zip(om_frame.iter()) {
                    *o = s3 * v;
                }
                for (o, v) in sigma.at_mut(s).iter_mut().zip(sig_frame.iter()) {
                    *o = s4 * v;
                }
            }
            None => {
                let b = frame_at(n, frame, s);
                let binv = metric_at(n, g, s).matmul(&b);
                fc.frame_to_coords(3, &binv, &om_frame, omf.at_mut(s), &mut full_a, &mut full_b);
                fc.frame_to_coords(
                    4,
                    &binv,
                    &sig_frame,
                    sigma.at_mut(s),
                    &mut full_a,
                    &mut full_b,
                );
            }
        }
    }
    (omf, sigma)
}

/// `D = 1/2 int (|d Omega|^2 + |d sigma|^2) dv` with exterior
/// derivatives from central stencils on the coordinate component
/// fields and norms from the pointwise metric.
fn dirichlet_d(
    lat: &TorusLattice,
    fc: &FormCalculus,
    g: &Field<f64>,
    frame: &FrameData,
    om_coords: &Field<f64>,
    sig_coords: &Field<f64>,
    allow_fast: bool,
) -> f64 {
    let n = lat.n();
    let mut acc = 0.0;
    let mut d_om = [0.0f64; N7 * LEN3];
    let mut d_sig = [0.0f64; N7 * LEN3];
    let mut dom = [0.0f64; LEN3];
    let mut dsig = [0.0f64; LEN5];
    for site in lat.sites() {
        for mu in 0..n {
            lat.diff_slice(
                &site,
                mu,
                LEN3,
                om_coords.data(),
                &mut d_om[mu * LEN3..(mu + 1) * LEN3],
            );
            lat.diff_slice(
                &site,
                mu,
                LEN3,
                sig_coords.data(),
                &mut d_sig[mu * LEN3..(mu + 1) * LEN3],
            );
        }
        fc.assemble_d(&fc.d3, LEN3, &d_om, &mut dom);
        fc.assemble_d(&fc.d4, LEN3, &d_sig, &mut dsig);
        let fast = if allow_fast {
            isotropy_factor(n, g.at(site.index))
        } else {
            None
        };
        let dens = match fast {
            Some(gamma) => {
                let mut a4 = 0.0;
                for &v in dom.iter() {
                    a4 += v * v;
                }
                let mut a5 = 0.0;
                for &v in dsig.iter() {
                    a5 += v * v;
                }
                let gi = 1.0 / gamma;
                a4 * fm::powi(gi, 4) + a5 * fm::powi(gi, 5)
            }
            None => {
                let b = frame_at(n, frame, site.index);
                let ginv = b.matmul(&b);
                fc.lambda_inner(4, &dom, &dom, &ginv) + fc.lambda_inner(5, &dsig, &dsig, &ginv)
            }
        };
        acc += 0.5 * dens * frame.sqrt_det.at(site.index)[0];
    }
    acc * lat.cell_volume()
}

fn dirichlet_impl(
    lat: &TorusLattice,
    rep: &CliffordRep<f64>,
    fc: &FormCalculus,
    pair: &Pair<f64>,
    allow_fast: bool,
) -> Result<DirichletReport> {
    if lat.n() != N7 {
        return Err(Error::UnsupportedDimension {
            n: lat.n(),
            what: "the Dirichlet identities live on 7-dimensional tori",
        });
    }
    let frame = frame_data(lat, &pair.g)?;
    let e0 = energy_with(lat, rep, &pair.g, &frame, &pair.phi);
    let stot = total_scalar(lat, &pair.g)?;
    let omf = omega_frame_field(lat, fc, &pair.phi);
    let c = dirichlet_c(lat, fc, &pair.g, &frame, &omf);
    let (om_coords, sig_coords) =
        forms_to_coordinates(lat, fc, &pair.g, &frame, omf, allow_fast);
    let d = dirichlet_d(
        lat,
        fc,
        &pair.g,
        &frame,
        &om_coords,
        &sig_coords,
        allow_fast,
    );
    Ok(DirichletReport {
        c,
        sixteen_e0: 16.0 * e0,
        d,
        sixteen_es: 16.0 * e0 + stot,
    })
}

/// Computes `(C, 16 E_0, D, 16 E_{1/16})` for a unit-spinor pair on a
/// 7-torus. Sites where the metric is an exact multiple of the
/// identity take a scalar fast path; the result is identical to the
/// general path up to rounding.
pub fn dirichlet_functionals(
    lat: &TorusLattice,
    rep: &CliffordRep<f64>,
    fc: &FormCalculus,
    pair: &Pair<f64>,
) -> Result<DirichletReport> {
    dirichlet_impl(lat, rep, fc, pair, true)
}

/// Reference variant of [`dirichlet_functionals`] that always runs the
/// general-metric tensor algebra, for cross-validation.
pub fn dirichlet_functionals_general(
    lat: &TorusLattice,
    rep: &CliffordRep<f64>,
    fc: &FormCalculus,
    pair: &Pair<f64>,
) -> Result<DirichletReport> {
    dirichlet_impl(lat, rep, fc, pair, false)
}

/// Random real unit-spinor pair on a 7-torus with a conformally flat
/// band-limited metric: the standard configuration for the Dirichlet
/// identity experiments.
pub fn conformal_pair(
    lat: &TorusLattice,
    rep: &CliffordRep<f64>,
    metric_amp: f64,
    spinor_amp: f64,
    max_k: i64,
    rng: &mut CounterRng,
) -> Result<Pair<f64>> {
    use crate::jet::{ConformalMetric, FourierScalar, MetricFamily, UnitSpinorField};
    let mut u = FourierScalar::random(N7, lat.length(), rng, 2, max_k, metric_amp);
    u.base = 0.0;
    let cm = ConformalMetric { n: N7, u };
    let sf = UnitSpinorField::random(rep, lat.length(), rng, 2, 2, max_k, spinor_amp);
    let mut pair = Pair {
        g: cm.sample(lat),
        phi: sf.sample(lat),
    };
    pair.renormalize_spinor();
    Ok(pair)
}
