//! Analytic field families with exact derivative jets, continuum
//! reference operators evaluated pointwise, and pointwise algebraic
//! cores (including Killing-spinor jets).
//!
//! These serve as independent oracles for the lattice kernels: every
//! discrete operator can be compared either against its continuum value
//! on an analytic family (convergence in `h`), or against closed-form
//! algebraic identities that hold exactly.

use crate::clifford::CliffordRep;
use crate::field::Field;
use crate::lattice::TorusLattice;
use crate::linalg::{pair_idx, pair_len, sym_idx, sym_len, MatN};
use crate::rng::CounterRng;
use crate::scalar::{inner_re, norm2, Scalar};
use crate::{Result, MAX_DIM, MAX_N};
use alloc::vec;
use alloc::vec::Vec;

/// One Fourier wave `amp * sin(2 pi k . x / L + phase)`.
#[derive(Clone, Debug)]
pub struct ScalarWave {
    pub k: [i32; MAX_N],
    pub amp: f64,
    pub phase: f64,
}

/// A finite Fourier sum `base + sum of waves` with exact derivatives.
#[derive(Clone, Debug)]
pub struct FourierScalar {
    pub n: usize,
    pub length: f64,
    pub base: f64,
    pub waves: Vec<ScalarWave>,
}

impl FourierScalar {
    pub fn constant(n: usize, length: f64, base: f64) -> Self {
        FourierScalar {
            n,
            length,
            base,
            waves: Vec::new(),
        }
    }

    /// A random band-limited function: `waves` waves with `|k|_inf <=
    /// max_k` and amplitudes up to `amp`.
    pub fn random(
        n: usize,
        length: f64,
        rng: &mut CounterRng,
        num_waves: usize,
        max_k: i64,
        amp: f64,
    ) -> Self {
        let mut waves = Vec::with_capacity(num_waves);
        for _ in 0..num_waves {
            let mut k = [0i32; MAX_N];
            let mut nonzero = false;
            for kv in k.iter_mut().take(n) {
                *kv = rng.next_int(-max_k, max_k) as i32;
                nonzero |= *kv != 0;
            }
            if !nonzero {
                k[0] = 1;
            }
            waves.push(ScalarWave {
                k,
                amp: amp * (2.0 * rng.next_f64() - 1.0),
                phase: core::f64::consts::TAU * rng.next_f64(),
            });
        }
        FourierScalar {
            n,
            length,
            base: 0.0,
            waves,
        }
    }

    #[inline]
    fn freq(&self, w: &ScalarWave, mu: usize) -> f64 {
        core::f64::consts::TAU / self.length * w.k[mu] as f64
    }

    #[inline]
    fn arg(&self, w: &ScalarWave, x: &[f64]) -> f64 {
        let mut a = w.phase;
        for mu in 0..self.n {
            a += self.freq(w, mu) * x[mu];
        }
        a
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.base;
        for w in &self.waves {
            v += w.amp * crate::fm::sin(self.arg(w, x));
        }
        v
    }

    pub fn d1(&self, x: &[f64], mu: usize) -> f64 {
        let mut v = 0.0;
        for w in &self.waves {
            v += w.amp * self.freq(w, mu) * crate::fm::cos(self.arg(w, x));
        }
        v
    }

    pub fn d2(&self, x: &[f64], mu: usize, nu: usize) -> f64 {
        let mut v = 0.0;
        for w in &self.waves {
            v -= w.amp * self.freq(w, mu) * self.freq(w, nu) * crate::fm::sin(self.arg(w, x));
        }
        v
    }
}

/// Exact 2-jet of a metric at a point: value, first and second partials
/// (`d2[mu * n + nu]`).
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: MatN,
    pub d1: Vec<MatN>,
    pub d2: Vec<MatN>,
}

/// An analytic family of metrics on the torus.
pub trait MetricFamily {
    fn n(&self) -> usize;
    fn jet(&self, x: &[f64]) -> MetricJet;

    /// Samples the metric onto a lattice (packed symmetric field).
    fn sample(&self, lat: &TorusLattice) -> Field<f64> {
        let n = self.n();
        let mut f = Field::new(lat, sym_len(n), 0.0);
        for site in lat.sites() {
            let x = lat.point(&site);
            let j = self.jet(&x[..n]);
            j.g.to_sym_slice(f.at_mut(site.index));
        }
        f
    }
}

/// Metric whose packed components are independent Fourier sums over a
/// constant positive definite base (callers keep amplitudes small enough
/// for positivity).
#[derive(Clone, Debug)]
pub struct FourierMetric {
    pub n: usize,
    pub entries: Vec<FourierScalar>,
}

impl FourierMetric {
    /// Flat metric plus random band-limited symmetric waves.
    pub fn random_near_flat(
        n: usize,
        length: f64,
        rng: &mut CounterRng,
        waves_per_entry: usize,
        max_k: i64,
        amp: f64,
    ) -> Self {
        let mut entries = Vec::with_capacity(sym_len(n));
        for i in 0..n {
            for j in i..n {
                let mut f = FourierScalar::random(n, length, rng, waves_per_entry, max_k, amp);
                f.base = if i == j { 1.0 } else { 0.0 };
                entries.push(f);
            }
        }
        FourierMetric { n, entries }
    }

    pub fn flat(n: usize, length: f64) -> Self {
        let mut entries = Vec::with_capacity(sym_len(n));
        for i in 0..n {
            for j in i..n {
                entries.push(FourierScalar::constant(
                    n,
                    length,
                    if i == j { 1.0 } else { 0.0 },
                ));
            }
        }
        FourierMetric { n, entries }
    }
}

impl MetricFamily for FourierMetric {
    fn n(&self) -> usize {
        self.n
    }

    fn jet(&self, x: &[f64]) -> MetricJet {
        let n = self.n;
        let mut g = MatN::zeros(n);
        let mut d1 = vec![MatN::zeros(n); n];
        let mut d2 = vec![MatN::zeros(n); n * n];
        for i in 0..n {
            for j in i..n {
                let e = &self.entries[sym_idx(n, i, j)];
                let v = e.value(x);
                g.a[i][j] = v;
                g.a[j][i] = v;
                for mu in 0..n {
                    let dv = e.d1(x, mu);
                    d1[mu].a[i][j] = dv;
                    d1[mu].a[j][i] = dv;
                    for nu in 0..n {
                        let ddv = e.d2(x, mu, nu);
                        d2[mu * n + nu].a[i][j] = ddv;
                        d2[mu * n + nu].a[j][i] = ddv;
                    }
                }
            }
        }
        MetricJet { g, d1, d2 }
    }
}

/// Conformally flat metric `g = exp(2u) delta`.
#[derive(Clone, Debug)]
pub struct ConformalMetric {
    pub n: usize,
    pub u: FourierScalar,
}

impl MetricFamily for ConformalMetric {
    fn n(&self) -> usize {
        self.n
    }

    fn jet(&self, x: &[f64]) -> MetricJet {
        let n = self.n;
        let u = self.u.value(x);
        let e2u = crate::fm::exp(2.0 * u);
        let mut g = MatN::zeros(n);
        let mut d1 = vec![MatN::zeros(n); n];
        let mut d2 = vec![MatN::zeros(n); n * n];
        for i in 0..n {
            g.a[i][i] = e2u;
        }
        for mu in 0..n {
            let du = self.u.d1(x, mu);
            for i in 0..n {
                d1[mu].a[i][i] = 2.0 * du * e2u;
            }
            for nu in 0..n {
                let dv = self.u.d1(x, nu);
                let ddu = self.u.d2(x, mu, nu);
                for i in 0..n {
                    d2[mu * n + nu].a[i][i] = (2.0 * ddu + 4.0 * du * dv) * e2u;
                }
            }
        }
        MetricJet { g, d1, d2 }
    }
}

/// Exact 2-jet of a spinor field at a point
/// (`d1[mu*dim + k]`, `d2[(mu*n + nu)*dim + k]`).
#[derive(Clone, Debug)]
pub struct SpinorJet<S: Scalar> {
    pub value: Vec<S>,
    pub d1: Vec<S>,
    pub d2: Vec<S>,
}

/// A pointwise-unit spinor field
/// `phi(x) = exp(theta_1(x) J_1) ... exp(theta_m(x) J_m) psi_0`
/// where each generator satisfies `J^2 = -Id` and is an isometry of the
/// real inner product, so `|phi| = |psi_0| = 1` identically and all
/// derivatives are exact trigonometric expressions.
#[derive(Clone, Debug)]
pub struct UnitSpinorField<S: Scalar> {
    pub n: usize,
    pub dim: usize,
    pub psi0: Vec<S>,
    pub factors: Vec<(FourierScalar, Vec<S>)>,
}

impl<S: Scalar> UnitSpinorField<S> {
    /// Constant unit field.
    pub fn constant(n: usize, psi0: Vec<S>) -> Self {
        let dim = psi0.len();
        UnitSpinorField {
            n,
            dim,
            psi0,
            factors: Vec::new(),
        }
    }

    /// Random unit field: a normalized random base spinor rotated by
    /// `num_factors` generators `gamma_c gamma_d` (and, for complex
    /// scalars, possibly `i * Id`) with random band-limited angles.
    pub fn random(
        rep: &CliffordRep<S>,
        length: f64,
        rng: &mut CounterRng,
        num_factors: usize,
        waves_per_factor: usize,
        max_k: i64,
        amp: f64,
    ) -> Self {
        let n = rep.n();
        let dim = rep.dim();
        let mut psi0 = vec![S::ZERO; dim];
        loop {
            for v in psi0.iter_mut() {
                *v = S::from_re(2.0 * rng.next_f64() - 1.0);
                if S::IS_COMPLEX {
                    if let Some(iv) = S::from_re(2.0 * rng.next_f64() - 1.0).try_mul_i() {
                        *v += iv;
                    }
                }
            }
            let nn = norm2(&psi0);
            if nn > 1e-3 {
                let inv = 1.0 / crate::fm::sqrt(nn);
                for v in psi0.iter_mut() {
                    *v = v.scale(inv);
                }
                break;
            }
        }
        let mut factors = Vec::with_capacity(num_factors);
        for _ in 0..num_factors {
            let theta = FourierScalar::random(n, length, rng, waves_per_factor, max_k, amp);
            let use_phase = S::IS_COMPLEX && rng.next_int(0, 3) == 0;
            let j = if use_phase {
                // i * Id
                let mut m = vec![S::ZERO; dim * dim];
                for k in 0..dim {
                    m[k * dim + k] = S::ONE.try_mul_i().expect("complex scalar");
                }
                m
            } else {
                let c = rng.next_int(0, n as i64 - 1) as usize;
                let d = rng.next_int(0, n as i64 - 2) as usize;
                let d = if d >= c { d + 1 } else { d };
                let (c, d) = if c < d { (c, d) } else { (d, c) };
                let mut m = vec![S::ZERO; dim * dim];
                let mono = rep.gamma_pair(c, d);
                for col in 0..dim {
                    m[mono.row[col] as usize * dim + col] = mono.val[col];
                }
                m
            };
            factors.push((theta, j));
        }
        UnitSpinorField {
            n,
            dim,
            psi0,
            factors,
        }
    }

    /// Exact 2-jet at a point.
    pub fn jet(&self, x: &[f64]) -> SpinorJet<S> {
        let n = self.n;
        let dim = self.dim;
        let m = self.factors.len();
        // 2-jets of each factor as dense matrices:
        // U = cos(theta) Id + sin(theta) J,
        // dU = theta' (-sin Id + cos J),
        // ddU = theta'' (-sin Id + cos J) + theta' theta' (-cos Id - sin J).
        let mut u = Vec::with_capacity(m);
        let mut du = Vec::with_capacity(m);
        let mut ddu = Vec::with_capacity(m);
        for (theta, j) in &self.factors {
            let t = theta.value(x);
            let (st, ct) = (crate::fm::sin(t), crate::fm::cos(t));
            let combine = |a: f64, b: f64| -> Vec<S> {
                let mut out = vec![S::ZERO; dim * dim];
                for r in 0..dim {
                    out[r * dim + r] = S::from_re(a);
                }
                for (o, jv) in out.iter_mut().zip(j.iter()) {
                    *o += jv.scale(b);
                }
                out
            };
            u.push(combine(ct, st));
            let mut d1m = Vec::with_capacity(n);
            let mut d2m = Vec::with_capacity(n * n);
            for mu in 0..n {
                let tp = theta.d1(x, mu);
                let mut b = combine(-st, ct);
                for v in b.iter_mut() {
                    *v = v.scale(tp);
                }
                d1m.push(b);
            }
            for mu in 0..n {
                for nu in 0..n {
                    let tpp = theta.d2(x, mu, nu);
                    let tp = theta.d1(x, mu) * theta.d1(x, nu);
                    let b1 = combine(-st, ct);
                    let b2 = combine(-ct, -st);
                    let mut b = vec![S::ZERO; dim * dim];
                    for ((o, v1), v2) in b.iter_mut().zip(b1.iter()).zip(b2.iter()) {
                        *o = v1.scale(tpp) + v2.scale(tp);
                    }
                    d2m.push(b);
                }
            }
            du.push(d1m);
            ddu.push(d2m);
        }
        // Leibniz products applied to psi0.
        let apply_chain = |which: &dyn Fn(usize) -> ChainPart| -> Vec<S> {
            let mut v = self.psi0.clone();
            for k in (0..m).rev() {
                let mat: &[S] = match which(k) {
                    ChainPart::Value => &u[k],
                    ChainPart::D1(mu) => &du[k][mu],
                    ChainPart::D2(mu, nu) => &ddu[k][mu * n + nu],
                };
                let mut out = vec![S::ZERO; dim];
                crate::linalg::matvec(dim, mat, &v, &mut out);
                v = out;
            }
            v
        };
        let value = apply_chain(&|_| ChainPart::Value);
        let mut d1 = vec![S::ZERO; n * dim];
        for mu in 0..n {
            for k in 0..m {
                let term = apply_chain(&|l| {
                    if l == k {
                        ChainPart::D1(mu)
                    } else {
                        ChainPart::Value
                    }
                });
                for (o, t) in d1[mu * dim..(mu + 1) * dim].iter_mut().zip(term.iter()) {
                    *o += *t;
                }
            }
        }
        let mut d2 = vec![S::ZERO; n * n * dim];
        for mu in 0..n {
            for nu in 0..n {
                let block = &mut d2[(mu * n + nu) * dim..(mu * n + nu + 1) * dim];
                for k in 0..m {
                    let term = apply_chain(&|l| {
                        if l == k {
                            ChainPart::D2(mu, nu)
                        } else {
                            ChainPart::Value
                        }
                    });
                    for (o, t) in block.iter_mut().zip(term.iter()) {
                        *o += *t;
                    }
                }
                for k in 0..m {
                    for l in 0..m {
                        if k == l {
                            continue;
                        }
                        let term = apply_chain(&|p| {
                            if p == k {
                                ChainPart::D1(mu)
                            } else if p == l {
                                ChainPart::D1(nu)
                            } else {
                                ChainPart::Value
                            }
                        });
                        for (o, t) in block.iter_mut().zip(term.iter()) {
                            *o += *t;
                        }
                    }
                }
            }
        }
        SpinorJet { value, d1, d2 }
    }

    /// Samples the field onto a lattice.
    pub fn sample(&self, lat: &TorusLattice) -> Field<S> {
        let mut f = Field::new(lat, self.dim, S::ZERO);
        for site in lat.sites() {
            let x = lat.point(&site);
            let j = self.jet(&x[..self.n]);
            f.at_mut(site.index).copy_from_slice(&j.value);
        }
        f
    }
}

enum ChainPart {
    Value,
    D1(usize),
    D2(usize, usize),
}

/// Continuum geometric data at a single point, computed exactly from
/// metric and spinor jets: frames, connection, curvature, covariant
/// derivatives. All coordinate-indexed.
#[derive(Clone, Debug)]
pub struct PointGeometry<S: Scalar> {
    pub n: usize,
    pub dim: usize,
    pub g: MatN,
    pub ginv: MatN,
    /// `b = g^{-1/2}` and its first partials.
    pub b: MatN,
    pub db: Vec<MatN>,
    pub binv: MatN,
    pub sqrt_det: f64,
    /// Spin connection `omega[mu * pair_len + pair_idx(c,d)]` and its
    /// partials `domega[(sig * n + mu) * pair_len + ..] = d_sig omega_mu`.
    pub omega: Vec<f64>,
    pub domega: Vec<f64>,
    /// Raised Christoffels `raised[(mu n + nu) n + lam]`.
    pub raised: Vec<f64>,
    pub ricci: MatN,
    pub scal: f64,
    /// Covariant derivative `(nabla phi)_mu` and second covariant
    /// derivative `nabla2[(mu n + nu) dim + ..] = (nabla^2 phi)(d_mu, d_nu)`.
    pub psi: Vec<S>,
    pub nabla: Vec<S>,
    pub nabla2: Vec<S>,
}

impl<S: Scalar> PointGeometry<S> {
    pub fn new(rep: &CliffordRep<S>, mj: &MetricJet, sj: &SpinorJet<S>) -> Result<Self> {
        let n = mj.g.n;
        let dim = rep.dim();
        let pl = pair_len(n);
        let g = mj.g;
        let ginv = g.spd_inverse()?;
        let sqrt_det = crate::fm::sqrt(g.spd_det()?);
        let b = g.spd_inv_sqrt()?;
        let binv = g.spd_sqrt()?;
        // dG = -G dg G; b db + db b = dG (Sylvester).
        let mut dginv = Vec::with_capacity(n);
        let mut db = Vec::with_capacity(n);
        for mu in 0..n {
            let dgi = ginv.matmul(&mj.d1[mu]).matmul(&ginv).scale(-1.0);
            db.push(MatN::sylvester_spd(&b, &dgi)?);
            dginv.push(dgi);
        }
        // d2G and d2b (needed for domega):
        // d2G = -(dG dg G + G d2g G + G dg dG),
        // b d2b + d2b b = d2G - db_mu db_nu - db_nu db_mu.
        let mut d2b = vec![MatN::zeros(n); n * n];
        for mu in 0..n {
            for nu in 0..n {
                let d2gi = dginv[nu]
                    .matmul(&mj.d1[mu])
                    .matmul(&ginv)
                    .add(&ginv.matmul(&mj.d2[mu * n + nu]).matmul(&ginv))
                    .add(&ginv.matmul(&mj.d1[mu]).matmul(&dginv[nu]))
                    .scale(-1.0);
                let rhs = d2gi
                    .sub(&db[mu].matmul(&db[nu]))
                    .sub(&db[nu].matmul(&db[mu]));
                d2b[mu * n + nu] = MatN::sylvester_spd(&b, &rhs)?;
            }
        }
        // Lowered Christoffels and their partials.
        let low = |mu: usize, nu: usize, rho: usize| -> f64 {
            0.5 * (mj.d1[mu].a[nu][rho] + mj.d1[nu].a[mu][rho] - mj.d1[rho].a[mu][nu])
        };
        let dlow = |sig: usize, mu: usize, nu: usize, rho: usize| -> f64 {
            0.5 * (mj.d2[sig * n + mu].a[nu][rho] + mj.d2[sig * n + nu].a[mu][rho]
                - mj.d2[sig * n + rho].a[mu][nu])
        };
        let mut raised = vec![0.0f64; n * n * n];
        for mu in 0..n {
            for nu in 0..n {
                for lam in 0..n {
                    let mut acc = 0.0;
                    for rho in 0..n {
                        acc += ginv.a[lam][rho] * low(mu, nu, rho);
                    }
                    raised[(mu * n + nu) * n + lam] = acc;
                }
            }
        }
        // Ricci via dGamma^lam = dG Gamma_low + G dGamma_low.
        let draised = |sig: usize, mu: usize, nu: usize, lam: usize| -> f64 {
            let mut acc = 0.0;
            for rho in 0..n {
                acc += dginv[sig].a[lam][rho] * low(mu, nu, rho)
                    + ginv.a[lam][rho] * dlow(sig, mu, nu, rho);
            }
            acc
        };
        let mut ricci = MatN::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += draised(k, i, j, k) - draised(i, k, j, k);
                    for lam in 0..n {
                        acc += raised[(k * n + lam) * n + k] * raised[(i * n + j) * n + lam]
                            - raised[(i * n + lam) * n + k] * raised[(k * n + j) * n + lam];
                    }
                }
                ricci.a[i][j] = acc;
            }
        }
        let ricci = ricci.symmetrize();
        let mut scal = 0.0;
        for i in 0..n {
            for j in 0..n {
                scal += ginv.a[i][j] * ricci.a[i][j];
            }
        }
        // Spin connection jets: omega_mu = antisym[(d_mu b) g b + b Gamma_mu b].
        let gamma_low_mat = |mu: usize| -> MatN {
            let mut m = MatN::zeros(n);
            for nu in 0..n {
                for lam in 0..n {
                    m.a[nu][lam] = low(mu, nu, lam);
                }
            }
            m
        };
        let dgamma_low_mat = |sig: usize, mu: usize| -> MatN {
            let mut m = MatN::zeros(n);
            for nu in 0..n {
                for lam in 0..n {
                    m.a[nu][lam] = dlow(sig, mu, nu, lam);
                }
            }
            m
        };
        let mut omega = vec![0.0f64; n * pl];
        let mut domega = vec![0.0f64; n * n * pl];
        for mu in 0..n {
            let m = db[mu]
                .matmul(&g)
                .matmul(&b)
                .add(&b.matmul(&gamma_low_mat(mu)).matmul(&b));
            for c in 0..n {
                for d in (c + 1)..n {
                    omega[mu * pl + pair_idx(n, c, d)] = 0.5 * (m.a[c][d] - m.a[d][c]);
                }
            }
            for sig in 0..n {
                let dm = d2b[sig * n + mu]
                    .matmul(&g)
                    .matmul(&b)
                    .add(&db[mu].matmul(&mj.d1[sig]).matmul(&b))
                    .add(&db[mu].matmul(&g).matmul(&db[sig]))
                    .add(&db[sig].matmul(&gamma_low_mat(mu)).matmul(&b))
                    .add(&b.matmul(&dgamma_low_mat(sig, mu)).matmul(&b))
                    .add(&b.matmul(&gamma_low_mat(mu)).matmul(&db[sig]));
                for c in 0..n {
                    for d in (c + 1)..n {
                        domega[(sig * n + mu) * pl + pair_idx(n, c, d)] =
                            0.5 * (dm.a[c][d] - dm.a[d][c]);
                    }
                }
            }
        }
        // Covariant derivatives of the spinor.
        let sigma_apply = |w: &[f64], mu: usize, v: &[S], out: &mut [S]| {
            for c in 0..n {
                for d in (c + 1)..n {
                    let coeff = 0.5 * w[mu * pl + pair_idx(n, c, d)];
                    if coeff != 0.0 {
                        rep.gamma_pair(c, d).apply_add_scaled(dim, coeff, v, out);
                    }
                }
            }
        };
        let mut nabla = vec![S::ZERO; n * dim];
        for mu in 0..n {
            let block = &mut nabla[mu * dim..(mu + 1) * dim];
            block.copy_from_slice(&sj.d1[mu * dim..(mu + 1) * dim]);
            sigma_apply(&omega, mu, &sj.value, block);
        }
        let mut nabla2 = vec![S::ZERO; n * n * dim];
        for mu in 0..n {
            for nu in 0..n {
                let mut block = vec![S::ZERO; dim];
                // d_mu (nabla_nu phi) = d2 phi + (d_mu sigma_nu) phi
                //                        + sigma_nu d_mu phi
                block.copy_from_slice(&sj.d2[(mu * n + nu) * dim..(mu * n + nu + 1) * dim]);
                {
                    // (d_mu sigma_nu) phi from domega[(mu n + nu) ...]
                    let dmo = &domega[(mu * n + nu) * pl..(mu * n + nu + 1) * pl];
                    for c in 0..n {
                        for d in (c + 1)..n {
                            let coeff = 0.5 * dmo[pair_idx(n, c, d)];
                            if coeff != 0.0 {
                                rep.gamma_pair(c, d).apply_add_scaled(
                                    dim,
                                    coeff,
                                    &sj.value,
                                    &mut block,
                                );
                            }
                        }
                    }
                }
                sigma_apply(&omega, nu, &sj.d1[mu * dim..(mu + 1) * dim], &mut block);
                // + sigma_mu (nabla_nu phi) - Gamma^lam_{mu nu} nabla_lam phi
                let nab_nu: Vec<S> = nabla[nu * dim..(nu + 1) * dim].to_vec();
                sigma_apply(&omega, mu, &nab_nu, &mut block);
                for lam in 0..n {
                    let c = raised[(mu * n + nu) * n + lam];
                    if c != 0.0 {
                        for (o, v) in block.iter_mut().zip(nabla[lam * dim..].iter()) {
                            *o -= v.scale(c);
                        }
                    }
                }
                nabla2[(mu * n + nu) * dim..(mu * n + nu + 1) * dim].copy_from_slice(&block);
            }
        }
        Ok(PointGeometry {
            n,
            dim,
            g,
            ginv,
            b,
            db,
            binv,
            sqrt_det,
            omega,
            domega,
            raised,
            ricci,
            scal,
            psi: sj.value.clone(),
            nabla,
            nabla2,
        })
    }

    /// Frame-component state `(psi, nabla_{e_a} phi, nabla^2 phi(e_a, e_b))`.
    pub fn frame_state(&self) -> PointState<S> {
        let n = self.n;
        let dim = self.dim;
        let mut nabla = vec![S::ZERO; n * dim];
        for a in 0..n {
            for mu in 0..n {
                let c = self.b.a[mu][a];
                if c != 0.0 {
                    for k in 0..dim {
                        nabla[a * dim + k] += self.nabla[mu * dim + k].scale(c);
                    }
                }
            }
        }
        let mut nabla2 = vec![S::ZERO; n * n * dim];
        for a in 0..n {
            for bb in 0..n {
                let block_idx = (a * n + bb) * dim;
                for mu in 0..n {
                    let ca = self.b.a[mu][a];
                    if ca == 0.0 {
                        continue;
                    }
                    for nu in 0..n {
                        let c = ca * self.b.a[nu][bb];
                        if c != 0.0 {
                            for k in 0..dim {
                                nabla2[block_idx + k] +=
                                    self.nabla2[(mu * n + nu) * dim + k].scale(c);
                            }
                        }
                    }
                }
            }
        }
        PointState {
            n,
            dim,
            psi: self.psi.clone(),
            nabla,
            nabla2,
        }
    }

    /// Pointwise energy density `|nabla phi|^2 / 2 * sqrt(det g)` is left
    /// to callers; this returns `|nabla phi|^2`.
    pub fn grad_norm2(&self) -> f64 {
        let mut acc = 0.0;
        for mu in 0..self.n {
            for nu in 0..self.n {
                let c = self.ginv.a[mu][nu];
                if c != 0.0 {
                    acc += c * inner_re(
                        &self.nabla[mu * self.dim..(mu + 1) * self.dim],
                        &self.nabla[nu * self.dim..(nu + 1) * self.dim],
                    );
                }
            }
        }
        acc
    }
}

/// Frame-component pointwise state: the spinor value, its covariant
/// derivative `nabla[a*dim..]` and second covariant derivative
/// `nabla2[(a*n+b)*dim..] = (nabla^2 phi)(e_a, e_b)` in an orthonormal
/// frame. All pointwise operators below are tensorial in these inputs.
#[derive(Clone, Debug)]
pub struct PointState<S: Scalar> {
    pub n: usize,
    pub dim: usize,
    pub psi: Vec<S>,
    pub nabla: Vec<S>,
    pub nabla2: Vec<S>,
}

impl<S: Scalar> PointState<S> {
    /// The exact jet of a Killing spinor with constant `lambda`:
    /// `nabla_a phi = lambda gamma_a phi`,
    /// `nabla^2 phi(a, b) = lambda^2 gamma_b gamma_a phi`.
    pub fn killing(rep: &CliffordRep<S>, lambda: f64, psi: &[S]) -> Self {
        let n = rep.n();
        let dim = rep.dim();
        let mut nabla = vec![S::ZERO; n * dim];
        for a in 0..n {
            rep.gamma_mono(a)
                .apply_add_scaled(dim, lambda, psi, &mut nabla[a * dim..(a + 1) * dim]);
        }
        let mut nabla2 = vec![S::ZERO; n * n * dim];
        let mut tmp = [S::ZERO; MAX_DIM];
        for a in 0..n {
            for b in 0..n {
                rep.gamma_mono(a).apply(dim, psi, &mut tmp[..dim]);
                let block = &mut nabla2[(a * n + b) * dim..(a * n + b + 1) * dim];
                rep.gamma_mono(b)
                    .apply_add_scaled(dim, lambda * lambda, &tmp[..dim], block);
            }
        }
        PointState {
            n,
            dim,
            psi: psi.to_vec(),
            nabla,
            nabla2,
        }
    }

    /// A random state consistent with the unit-norm constraint:
    /// `<nabla_a phi, phi> = 0` and
    /// `<nabla^2 phi(a,b), phi> = -<nabla_a phi, nabla_b phi>`,
    /// with `nabla2` symmetric (flat second derivatives).
    pub fn random_constrained(rep: &CliffordRep<S>, rng: &mut CounterRng) -> Self {
        let n = rep.n();
        let dim = rep.dim();
        let draw = |rng: &mut CounterRng| -> S {
            let mut v = S::from_re(2.0 * rng.next_f64() - 1.0);
            if S::IS_COMPLEX {
                if let Some(iv) = S::from_re(2.0 * rng.next_f64() - 1.0).try_mul_i() {
                    v += iv;
                }
            }
            v
        };
        let mut psi = vec![S::ZERO; dim];
        loop {
            for v in psi.iter_mut() {
                *v = draw(rng);
            }
            let nn = norm2(&psi);
            if nn > 1e-3 {
                let inv = 1.0 / crate::fm::sqrt(nn);
                for v in psi.iter_mut() {
                    *v = v.scale(inv);
                }
                break;
            }
        }
        let mut nabla = vec![S::ZERO; n * dim];
        for a in 0..n {
            let block = &mut nabla[a * dim..(a + 1) * dim];
            for v in block.iter_mut() {
                *v = draw(rng);
            }
            crate::field::project_spinor_tangent(&psi, block);
        }
        let mut nabla2 = vec![S::ZERO; n * n * dim];
        for a in 0..n {
            for b in a..n {
                let mut block = vec![S::ZERO; dim];
                for v in block.iter_mut() {
                    *v = draw(rng);
                }
                // impose Re<block, psi> = -<nabla_a, nabla_b>
                let target = -inner_re(&nabla[a * dim..(a + 1) * dim], &nabla[b * dim..(b + 1) * dim]);
                let current = inner_re(&block, &psi);
                for (o, p) in block.iter_mut().zip(psi.iter()) {
                    *o += p.scale(target - current);
                }
                nabla2[(a * n + b) * dim..(a * n + b + 1) * dim].copy_from_slice(&block);
                nabla2[(b * n + a) * dim..(b * n + a + 1) * dim].copy_from_slice(&block);
            }
        }
        PointState {
            n,
            dim,
            psi,
            nabla,
            nabla2,
        }
    }

    #[inline]
    pub fn nabla_a(&self, a: usize) -> &[S] {
        &self.nabla[a * self.dim..(a + 1) * self.dim]
    }

    #[inline]
    pub fn nabla2_ab(&self, a: usize, b: usize) -> &[S] {
        &self.nabla2[(a * self.n + b) * self.dim..(a * self.n + b + 1) * self.dim]
    }
}

/// `|nabla phi|^2 = sum_a |nabla_a phi|^2`.
pub fn grad_norm2_point<S: Scalar>(st: &PointState<S>) -> f64 {
    let mut acc = 0.0;
    for a in 0..st.n {
        acc += norm2(st.nabla_a(a));
    }
    acc
}

/// `<nabla phi (x) nabla phi>_{ab} = <nabla_a phi, nabla_b phi>`.
pub fn grad_outer_point<S: Scalar>(st: &PointState<S>) -> MatN {
    let mut m = MatN::zeros(st.n);
    for a in 0..st.n {
        for b in 0..st.n {
            m.a[a][b] = inner_re(st.nabla_a(a), st.nabla_a(b));
        }
    }
    m
}

/// Connection Laplacian `nabla^* nabla phi = -sum_a nabla^2 phi(a, a)`.
pub fn laplacian_point<S: Scalar>(st: &PointState<S>) -> Vec<S> {
    let mut out = vec![S::ZERO; st.dim];
    for a in 0..st.n {
        for (o, v) in out.iter_mut().zip(st.nabla2_ab(a, a).iter()) {
            *o -= *v;
        }
    }
    out
}

/// Dirac operator `D phi = sum_a gamma_a nabla_a phi`.
pub fn dirac_point<S: Scalar>(rep: &CliffordRep<S>, st: &PointState<S>) -> Vec<S> {
    let mut out = vec![S::ZERO; st.dim];
    for a in 0..st.n {
        rep.gamma_mono(a)
            .apply_add_scaled(st.dim, 1.0, st.nabla_a(a), &mut out);
    }
    out
}

/// `D^2 phi = sum_{a,b} gamma_a gamma_b nabla^2 phi(a, b)`.
pub fn dirac_squared_point<S: Scalar>(rep: &CliffordRep<S>, st: &PointState<S>) -> Vec<S> {
    let dim = st.dim;
    let mut out = vec![S::ZERO; dim];
    let mut tmp = [S::ZERO; MAX_DIM];
    for a in 0..st.n {
        for b in 0..st.n {
            rep.gamma_mono(b).apply(dim, st.nabla2_ab(a, b), &mut tmp[..dim]);
            rep.gamma_mono(a)
                .apply_add_scaled(dim, 1.0, &tmp[..dim], &mut out);
        }
    }
    out
}

/// Energy-momentum frame components
/// `T_{a;bc} = [ <(e_a ^ e_b) phi, nabla_c phi> + <(e_a ^ e_c) phi, nabla_b phi> ] / 2`
/// (layout `t[a * sym_len + sym_idx(b, c)]`).
pub fn em_tensor_point<S: Scalar>(rep: &CliffordRep<S>, st: &PointState<S>) -> Vec<f64> {
    let n = st.n;
    let dim = st.dim;
    let sl = sym_len(n);
    let mut t = vec![0.0f64; n * sl];
    // wedge action on an orthonormal frame: (e_a ^ e_b) phi = gamma_a gamma_b phi
    // for a != b, zero for a = b.
    let wedge_inner = |a: usize, b: usize, chi: &[S]| -> f64 {
        use core::cmp::Ordering;
        match a.cmp(&b) {
            Ordering::Equal => 0.0,
            Ordering::Less => rep.gamma_pair(a, b).inner_re(dim, chi, &st.psi),
            Ordering::Greater => -rep.gamma_pair(b, a).inner_re(dim, chi, &st.psi),
        }
    };
    // note: wedge_inner(a, b, chi) = <chi, gamma_a gamma_b psi>; we need
    // <gamma_a gamma_b psi, chi> which is the same (real inner product).
    for a in 0..n {
        for b in 0..n {
            for c in b..n {
                let v = 0.5 * (wedge_inner(a, b, st.nabla_a(c)) + wedge_inner(a, c, st.nabla_a(b)));
                t[a * sl + sym_idx(n, b, c)] = v;
            }
        }
    }
    t
}

/// Divergence of the energy-momentum tensor in its first slot,
/// `(div T)(e_b, e_c) = -sum_a (nabla_{e_a} T)(e_a, e_b, e_c)`,
/// computed tensorially from the state jet:
/// `(nabla_W T)(X,Y,Z) = [ <(X^Y) nabla_W phi, nabla_Z phi>
///   + <(X^Y) phi, nabla^2 phi(W,Z)> + <(X^Z) nabla_W phi, nabla_Y phi>
///   + <(X^Z) phi, nabla^2 phi(W,Y)> ] / 2`.
pub fn div_em_point<S: Scalar>(rep: &CliffordRep<S>, st: &PointState<S>) -> MatN {
    let n = st.n;
    let dim = st.dim;
    let mut out = MatN::zeros(n);
    // wedge applications: pairphi[a][b] = gamma_a gamma_b (arg) handled via
    // monomials; for <(X^Y) u, v> with X = e_a, Y = e_b use pair inner.
    let wedge_inner_vec = |a: usize, b: usize, u: &[S], v: &[S]| -> f64 {
        use core::cmp::Ordering;
        // <(e_a ^ e_b) u, v> = <u, -gamma_a gamma_b v> sign bookkeeping:
        // gamma_a gamma_b is skew-adjoint for a != b, so
        // <gamma_a gamma_b u, v> = -<u, gamma_a gamma_b v>; computing via
        // inner_re(v-side) is cheaper: <gamma_a gamma_b u, v> =
        // inner_re of v against the monomial applied to u.
        match a.cmp(&b) {
            Ordering::Equal => 0.0,
            Ordering::Less => rep.gamma_pair(a, b).inner_re(dim, v, u),
            Ordering::Greater => -rep.gamma_pair(b, a).inner_re(dim, v, u),
        }
    };
    for b in 0..n {
        for c in 0..n {
            let mut acc = 0.0;
            for a in 0..n {
                acc += 0.5
                    * (wedge_inner_vec(a, b, st.nabla_a(a), st.nabla_a(c))
                        + wedge_inner_vec(a, b, &st.psi, st.nabla2_ab(a, c))
                        + wedge_inner_vec(a, c, st.nabla_a(a), st.nabla_a(b))
                        + wedge_inner_vec(a, c, &st.psi, st.nabla2_ab(a, b)));
            }
            out.a[b][c] = -acc;
        }
    }
    out
}

/// Metric-direction negative gradient in frame components at a point
/// (the metric is the identity in the frame):
/// `Q1 = -|nabla phi|^2 Id / 4 - div T / 4 + <nabla phi (x) nabla phi> / 2`.
pub fn q1_point<S: Scalar>(rep: &CliffordRep<S>, st: &PointState<S>) -> MatN {
    let n = st.n;
    let gn = grad_norm2_point(st);
    let div = div_em_point(rep, st);
    let outer = grad_outer_point(st);
    let mut out = MatN::zeros(n);
    for a in 0..n {
        for b in 0..n {
            let idd = if a == b { gn } else { 0.0 };
            out.a[a][b] = -0.25 * idd - 0.25 * div.a[a][b] + 0.5 * outer.a[a][b];
        }
    }
    out
}

/// Spinor-direction negative gradient at a point:
/// `Q2 = -nabla^* nabla phi + |nabla phi|^2 phi`.
pub fn q2_point<S: Scalar>(st: &PointState<S>) -> Vec<S> {
    let gn = grad_norm2_point(st);
    let lap = laplacian_point(st);
    let mut out = vec![S::ZERO; st.dim];
    for ((o, l), p) in out.iter_mut().zip(lap.iter()).zip(st.psi.iter()) {
        *o = p.scale(gn) - *l;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn fourier_scalar_jets_match_finite_differences() {
        let mut rng = CounterRng::new(11);
        let f = FourierScalar::random(3, 1.0, &mut rng, 4, 2, 0.3);
        let x = [0.21, 0.55, 0.83];
        let eps = 1e-5;
        for mu in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[mu] += eps;
            xm[mu] -= eps;
            let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * eps);
            assert!((fd - f.d1(&x, mu)).abs() < 1e-6);
            for nu in 0..3 {
                let mut xpp = x;
                let mut xmm = x;
                xpp[nu] += eps;
                xmm[nu] -= eps;
                let fd2 = (f.d1(&xpp, mu) - f.d1(&xmm, mu)) / (2.0 * eps);
                assert!((fd2 - f.d2(&x, mu, nu)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn unit_spinor_field_is_unit_and_jets_check_out() {
        let rep = CliffordRep::complex(3).unwrap();
        let mut rng = CounterRng::new(23);
        let fld = UnitSpinorField::random(&rep, 1.0, &mut rng, 2, 2, 1, 0.4);
        let x = [0.3, 0.62, 0.17];
        let j = fld.jet(&x);
        assert!((norm2(&j.value) - 1.0).abs() < 1e-13);
        let eps = 1e-5;
        for mu in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[mu] += eps;
            xm[mu] -= eps;
            let jp = fld.jet(&xp);
            let jm = fld.jet(&xm);
            for k in 0..2 {
                let fd = (jp.value[k] - jm.value[k]).scale(1.0 / (2.0 * eps));
                let d = fd - j.d1[mu * 2 + k];
                assert!(d.abs2() < 1e-12, "d1 mismatch");
                for nu in 0..3 {
                    let mut xpp = x;
                    let mut xmm = x;
                    xpp[nu] += eps;
                    xmm[nu] -= eps;
                    let jpp = fld.jet(&xpp);
                    let jmm = fld.jet(&xmm);
                    let fd2 = (jpp.d1[mu * 2 + k] - jmm.d1[mu * 2 + k]).scale(1.0 / (2.0 * eps));
                    let d2 = fd2 - j.d2[(mu * 3 + nu) * 2 + k];
                    assert!(d2.abs2() < 1e-10, "d2 mismatch");
                }
            }
        }
    }

    #[test]
    fn conformal_ricci_matches_closed_form() {
        // For g = exp(2u) delta on R^n:
        // Ric_ij = -(n-2)(u_ij - u_i u_j) - (Lap u + (n-2)|du|^2) delta_ij,
        // scal = exp(-2u) (-2(n-1) Lap u - (n-1)(n-2) |du|^2).
        let n = 3;
        let mut rng = CounterRng::new(5);
        let u = FourierScalar::random(n, 1.0, &mut rng, 3, 2, 0.05);
        let cm = ConformalMetric { n, u: u.clone() };
        let rep = CliffordRep::complex(n).unwrap();
        let psi0 = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let fld = UnitSpinorField::constant(n, psi0);
        for x in [[0.1, 0.3, 0.7], [0.45, 0.9, 0.2]] {
            let pg = PointGeometry::new(&rep, &cm.jet(&x), &fld.jet(&x)).unwrap();
            let mut lap = 0.0;
            let mut du2 = 0.0;
            for i in 0..n {
                lap += u.d2(&x, i, i);
                du2 += u.d1(&x, i) * u.d1(&x, i);
            }
            let nf = n as f64;
            for i in 0..n {
                for j in 0..n {
                    let hess = u.d2(&x, i, j) - u.d1(&x, i) * u.d1(&x, j);
                    let mut want = -(nf - 2.0) * hess;
                    if i == j {
                        want -= lap + (nf - 2.0) * du2;
                    }
                    assert!(
                        (pg.ricci.a[i][j] - want).abs() < 1e-10,
                        "ricci[{i}][{j}]: {} vs {}",
                        pg.ricci.a[i][j],
                        want
                    );
                }
            }
            let want_scal = crate::fm::exp(-2.0 * u.value(&x))
                * (-2.0 * (nf - 1.0) * lap - (nf - 1.0) * (nf - 2.0) * du2);
            assert!((pg.scal - want_scal).abs() < 1e-10);
        }
    }

    #[test]
    fn killing_jets_satisfy_pointwise_identities() {
        for n in [3usize, 5, 7] {
            let rep = CliffordRep::complex(n).unwrap();
            let dim = rep.dim();
            let mut rng = CounterRng::new(n as u64);
            for &lambda in &[1.0f64, -1.0, 0.5] {
                let mut psi = vec![Complex64::new(0.0, 0.0); dim];
                for v in psi.iter_mut() {
                    *v = Complex64::new(2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0);
                }
                let nn = crate::fm::sqrt(norm2(&psi));
                for v in psi.iter_mut() {
                    *v = v.scale(1.0 / nn);
                }
                let st = PointState::killing(&rep, lambda, &psi);
                // nabla^* nabla phi = n lambda^2 phi
                let lap = laplacian_point(&st);
                let mut worst = 0.0f64;
                for k in 0..dim {
                    let want = psi[k].scale(n as f64 * lambda * lambda);
                    worst = worst.max((lap[k] - want).abs2().sqrt());
                }
                assert!(worst < 1e-12, "laplacian n={n}: {worst}");
                // |nabla phi|^2 Id + div T - 2 <nabla (x) nabla> = (n-2) lambda^2 Id
                let gn = grad_norm2_point(&st);
                let div = div_em_point(&rep, &st);
                let outer = grad_outer_point(&st);
                let want = (n as f64 - 2.0) * lambda * lambda;
                let mut worst2 = 0.0f64;
                for a in 0..n {
                    for b in 0..n {
                        let idd = if a == b { gn } else { 0.0 };
                        let lhs = idd + div.a[a][b] - 2.0 * outer.a[a][b];
                        let rhs = if a == b { want } else { 0.0 };
                        worst2 = worst2.max((lhs - rhs).abs());
                    }
                }
                assert!(worst2 < 1e-12, "combination n={n}: {worst2}");
                // T itself vanishes for Killing jets
                let t = em_tensor_point(&rep, &st);
                assert!(t.iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn trace_of_div_em_matches_dirac_identity() {
        // tr div T = <D^2 phi, phi> - |D phi|^2 for constrained states.
        for n in [2usize, 3, 4, 7] {
            let rep = CliffordRep::complex(n).unwrap();
            let mut rng = CounterRng::new(100 + n as u64);
            for _ in 0..20 {
                let st = PointState::random_constrained(&rep, &mut rng);
                let div = div_em_point(&rep, &st);
                let d2 = dirac_squared_point(&rep, &st);
                let d1 = dirac_point(&rep, &st);
                let lhs = div.trace();
                let rhs = inner_re(&d2, &st.psi) - norm2(&d1);
                assert!(
                    (lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()),
                    "n={n}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn point_geometry_matches_flat_killing_free_case() {
        // On the flat metric with a constant spinor everything vanishes.
        let rep = CliffordRep::complex(2).unwrap();
        let fm = FourierMetric::flat(2, 1.0);
        let fld = UnitSpinorField::constant(
            2,
            vec![Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)],
        );
        let x = [0.4, 0.9];
        let pg = PointGeometry::new(&rep, &fm.jet(&x), &fld.jet(&x)).unwrap();
        assert!(pg.grad_norm2() < 1e-30);
        assert!(pg.scal.abs() < 1e-30);
        let st = pg.frame_state();
        assert!(q1_point(&rep, &st).max_abs() < 1e-30);
    }
}
