//! Acceptance suite: ten product-level checks, one test per criterion.
//!
//! Each test prints a single summary line (visible with
//! `cargo test --test acceptance -- --nocapture`); the test verdict
//! itself is the pass/fail signal. Runtime budgets are asserted.

use std::time::Instant;

use spinflow_core::clifford::{AntisymForm, CliffordRep};
use spinflow_core::field::{Field, Pair};
use spinflow_core::flow::{run_flow, DtPolicy, FlowConfig, Gauge, Scheme, VecSink};
use spinflow_core::functional::{dirac_energy, energy, s_energy};
use spinflow_core::g2::{
    conformal_pair, dirichlet_functionals, form_bundle, norm_correspondence, FormCalculus,
};
use spinflow_core::gradient::{
    bianchi_residual, geom_cache, hessian_quadratic, lambda_star_field, nabla_field, pair_inner,
    q_pair_with,
};
use spinflow_core::jet::{
    div_em_point, grad_norm2_point, grad_outer_point, laplacian_point, ConformalMetric,
    FourierMetric, FourierScalar, MetricFamily, PointGeometry, PointState, UnitSpinorField,
};
use spinflow_core::lattice::{FdOrder, TorusLattice};
use spinflow_core::linalg::DMat;
use spinflow_core::rng::CounterRng;
use spinflow_core::scalar::{norm2, Complex64, Scalar};
use spinflow_core::scenario::{flat_critical, perturbed_flat, tangent_direction};
use spinflow_core::symbol::{
    ellipticity_window, lambda_star_image_coords, subspace_distance, symbol_quadratic_form,
    tangent_basis, SymbolPoint,
};

fn budget(t0: Instant, seconds: f64, what: &str) -> f64 {
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < seconds, "{what}: took {dt:.1}s, budget {seconds}s");
    dt
}

fn rand_spinor<S: Scalar>(dim: usize, rng: &mut CounterRng) -> Vec<S> {
    (0..dim)
        .map(|_| {
            let mut v = S::from_re(rng.next_range(-1.0, 1.0));
            if S::IS_COMPLEX {
                if let Some(iv) = S::from_re(rng.next_range(-1.0, 1.0)).try_mul_i() {
                    v += iv;
                }
            }
            v
        })
        .collect()
}

fn max_component<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(|x| x.abs2().sqrt()).fold(0.0, f64::max)
}

/// Band-limited analytic state sampled onto a lattice; the same seed
/// gives the same continuum state at every resolution.
fn band_limited_state<S: Scalar>(
    rep: &CliffordRep<S>,
    size: usize,
    seed: u64,
) -> (TorusLattice, Pair<S>) {
    let n = rep.n();
    let lat = TorusLattice::new(n, size, 1.0, FdOrder::Two).unwrap();
    let mut rng = CounterRng::new(seed);
    let fm = FourierMetric::random_near_flat(n, 1.0, &mut rng, 2, 1, 0.05);
    let sf = UnitSpinorField::random(rep, 1.0, &mut rng, 5, 2, 1, 0.3);
    let pair = Pair {
        g: fm.sample(&lat),
        phi: sf.sample(&lat),
    };
    (lat, pair)
}

/// Band-limited vector field with deterministic coefficients.
fn random_vector_field(lat: &TorusLattice, rng: &mut CounterRng) -> Field<f64> {
    let n = lat.n();
    let comps: Vec<FourierScalar> = (0..n)
        .map(|_| {
            let mut f = FourierScalar::random(n, lat.length(), rng, 2, 1, 1.0);
            f.base = 0.0;
            f
        })
        .collect();
    let mut x = Field::new(lat, n, 0.0);
    for site in lat.sites() {
        let p = lat.point(&site);
        for (slot, c) in x.at_mut(site.index).iter_mut().zip(comps.iter()) {
            *slot = c.value(&p[..n]);
        }
    }
    x
}

// ---------------------------------------------------------------- 1

fn clifford_residual<S: Scalar>(rep: &CliffordRep<S>, trials: usize, seed: u64) -> f64 {
    let n = rep.n();
    let dim = rep.dim();
    let mut rng = CounterRng::new(seed);
    let mut worst = 0.0f64;
    let mut t1 = vec![S::ZERO; dim];
    let mut t2 = vec![S::ZERO; dim];
    let mut t3 = vec![S::ZERO; dim];
    let mut t4 = vec![S::ZERO; dim];
    for _ in 0..trials {
        let psi: Vec<S> = rand_spinor(dim, &mut rng);
        let chi: Vec<S> = rand_spinor(dim, &mut rng);
        let a = rng.next_int(0, n as i64 - 1) as usize;
        let b = rng.next_int(0, n as i64 - 1) as usize;

        // gamma_a gamma_b + gamma_b gamma_a = -2 delta_ab
        rep.apply_gamma(b, &psi, &mut t1);
        rep.apply_gamma(a, &t1, &mut t2);
        rep.apply_gamma(a, &psi, &mut t3);
        rep.apply_gamma(b, &t3, &mut t4);
        let delta = if a == b { 1.0 } else { 0.0 };
        let rel: Vec<S> = (0..dim)
            .map(|k| t2[k] + t4[k] + psi[k].scale(2.0 * delta))
            .collect();
        worst = worst.max(max_component(&rel));

        // skew-adjointness of gamma_a
        let skew = rep.inner(&t3, &chi) + {
            rep.apply_gamma(a, &chi, &mut t1);
            rep.inner(&psi, &t1)
        };
        worst = worst.max(skew.abs());

        // (X ^ Y) . phi = X . Y . phi + <X, Y> phi
        let x: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
        let alpha = AntisymForm::wedge(&x, &y);
        rep.mul_form(&alpha, &psi, &mut t1).unwrap();
        rep.mul_vector(&y, &psi, &mut t2);
        rep.mul_vector(&x, &t2, &mut t3);
        let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
        let rel: Vec<S> = (0..dim)
            .map(|k| t1[k] - t3[k] - psi[k].scale(dot))
            .collect();
        worst = worst.max(max_component(&rel));
    }
    worst
}

#[test]
fn criterion_01_clifford_kernel() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for n in 2..=8 {
        let rep = CliffordRep::<Complex64>::complex(n).unwrap();
        worst = worst.max(clifford_residual(&rep, 1000, 10 + n as u64));
    }
    worst = worst.max(clifford_residual(&CliffordRep::<f64>::real_seven(), 1000, 19));
    assert!(worst <= 1e-12, "max residual {worst:e}");
    let dt = budget(t0, 5.0, "criterion 1");
    println!("criterion 01 (Clifford kernel): PASS — max residual {worst:.2e} over 8 reps x 1000 trials, {dt:.2}s");
}

// ---------------------------------------------------------------- 2

fn scaling_residual<S: Scalar>(rep: &CliffordRep<S>, seed: u64) -> f64 {
    let n = rep.n();
    let lat = TorusLattice::new(n, 8, 1.0, FdOrder::Two).unwrap();
    let mut rng = CounterRng::new(seed);
    let pair = perturbed_flat(&lat, rep, 0.05, 1, &mut rng).unwrap();
    let e = energy(&lat, rep, &pair.g, &pair.phi).unwrap();
    let mut worst = 0.0f64;
    for &c in &[0.5f64, 2.0] {
        let mut scaled = pair.g.clone();
        scaled.scale(c * c);
        let e_scaled = energy(&lat, rep, &scaled, &pair.phi).unwrap();
        let want = c.powi(n as i32 - 2) * e;
        worst = worst.max((e_scaled - want).abs() / (1.0 + e.abs()));
    }
    worst
}

#[test]
fn criterion_02_energy_scaling_law() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for n in [2usize, 3, 4] {
        let rep = CliffordRep::<Complex64>::complex(n).unwrap();
        worst = worst.max(scaling_residual(&rep, 20 + n as u64));
    }
    worst = worst.max(scaling_residual(&CliffordRep::<f64>::real_seven(), 27));
    assert!(worst <= 1e-12, "max scaling residual {worst:e}");
    let dt = budget(t0, 10.0, "criterion 2");
    println!("criterion 02 (energy scaling law): PASS — max |E(c^2 g) - c^(n-2) E| residual {worst:.2e}, {dt:.2}s");
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_gradient_consistency() {
    let t0 = Instant::now();
    let rep = CliffordRep::<Complex64>::complex(3).unwrap();
    let eps = 1e-4;
    let mut summary = String::new();
    for &s in &[0.0f64, 1.0 / 16.0, 1.0 / 8.0] {
        let mut errs = [0.0f64; 2];
        for (slot, &size) in [16usize, 32].iter().enumerate() {
            let (lat, pair) = band_limited_state(&rep, size, 31);
            let cache = geom_cache(&lat, &pair.g).unwrap();
            let q = q_pair_with(&lat, &rep, &pair.g, &cache, &pair.phi, s);
            for i in 0..10u64 {
                let mut drng = CounterRng::new(32).stream(i);
                let dir = tangent_direction(&lat, &rep, &pair.phi, 1, 1.0, &mut drng);
                let predicted = -pair_inner(&lat, &cache, &q, &dir);
                let mut plus = pair.clone();
                plus.axpy(eps, &dir);
                let mut minus = pair.clone();
                minus.axpy(-eps, &dir);
                let ep = s_energy(&lat, &rep, &plus.g, &plus.phi, s).unwrap();
                let em = s_energy(&lat, &rep, &minus.g, &minus.phi, s).unwrap();
                let fd = (ep - em) / (2.0 * eps);
                let rel = (predicted - fd).abs() / (1.0 + fd.abs());
                errs[slot] = errs[slot].max(rel);
            }
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(
            errs[0] <= 5e-3,
            "s={s}: relative error {:.3e} at N=16 exceeds 5e-3",
            errs[0]
        );
        assert!(
            order >= 1.9,
            "s={s}: convergence order {order:.3} below 1.9 ({:.3e} -> {:.3e})",
            errs[0],
            errs[1]
        );
        summary.push_str(&format!(" s={s}: err16={:.2e} order={order:.2};", errs[0]));
    }
    let dt = budget(t0, 120.0, "criterion 3");
    println!("criterion 03 (gradient consistency): PASS —{summary} {dt:.1}s");
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_04_bianchi_identity() {
    let t0 = Instant::now();
    let rep = CliffordRep::<Complex64>::complex(3).unwrap();
    let mut res = [0.0f64; 2];
    for (slot, &size) in [16usize, 32].iter().enumerate() {
        let (lat, pair) = band_limited_state(&rep, size, 41);
        res[slot] = bianchi_residual(&lat, &rep, &pair.g, &pair.phi, 0.0).unwrap();
    }
    let order = (res[0] / res[1]).log2();
    assert!(
        order >= 1.9,
        "order {order:.3} below 1.9 ({:.3e} -> {:.3e})",
        res[0],
        res[1]
    );
    let dt = budget(t0, 60.0, "criterion 4");
    println!(
        "criterion 04 (Bianchi identity): PASS — |lambda(Q)|/(1+|Q|) {:.2e} -> {:.2e}, order {order:.2}, {dt:.1}s",
        res[0], res[1]
    );
}

// ---------------------------------------------------------------- 5

fn symbol_suite<S: Scalar>(rep: &CliffordRep<S>, trials: usize, seed: u64) -> (f64, f64, f64) {
    let n = rep.n();
    let root = CounterRng::new(seed);
    let mut worst_ev = f64::NEG_INFINITY;
    let mut worst_dist = 0.0f64;
    let mut worst_gauged = f64::NEG_INFINITY;
    for trial in 0..trials {
        let mut rng = root.stream(trial as u64);
        let pt = SymbolPoint::random(rep, &mut rng);

        // (a) ungauged s=0: negative semidefinite, kernel dimension n
        let form = symbol_quadratic_form(rep, &pt, 0.0, false);
        worst_ev = worst_ev.max(form.max_eigenvalue());
        assert_eq!(form.kernel_dim, n, "kernel dim at trial {trial}");

        // (b) im sigma(lambda*) = ker sigma(DQ)
        let img = lambda_star_image_coords(rep, &pt);
        let ker = form.kernel_basis();
        let (dist, ra, rb) = subspace_distance(&img, &ker);
        assert_eq!(ra, n, "sigma(lambda*) rank at trial {trial}");
        assert_eq!(rb, n);
        worst_dist = worst_dist.max(dist);

        // (c) gauged s=0: form <= -(1/16)|gdot|^2 - |phidot|^2
        let basis = tangent_basis(rep, &pt.phi);
        let gauged = symbol_quadratic_form(rep, &pt, 0.0, true);
        let dim = gauged.dim;
        let mut shifted = DMat::zeros(dim);
        for k in 0..dim {
            for l in 0..dim {
                shifted.set(k, l, gauged.matrix.get(k, l));
            }
            let bound = -(1.0 / 16.0) * basis[k].0.dot(&basis[k].0) - norm2(&basis[k].1);
            shifted.set(k, k, gauged.matrix.get(k, k) - bound);
        }
        let (evs, _) = shifted.sym_eigen();
        worst_gauged = worst_gauged.max(*evs.last().unwrap());
    }
    (worst_ev, worst_dist, worst_gauged)
}

#[test]
fn criterion_05_symbol_suite() {
    let t0 = Instant::now();
    let mut summary = String::new();
    let mut run = |label: &str, worsts: (f64, f64, f64), window: (f64, f64), n: usize| {
        let (ev, dist, gauged) = worsts;
        assert!(ev <= 1e-12, "{label}: max ungauged eigenvalue {ev:e}");
        assert!(dist <= 1e-8, "{label}: image/kernel distance {dist:e}");
        assert!(gauged <= 1e-12, "{label}: gauged bound violated by {gauged:e}");
        let (lo, hi) = window;
        let want_lo = -1.0 / (8.0 * (n as f64 - 2.0));
        assert!((hi - 0.125).abs() <= 1e-6, "{label}: hi endpoint {hi}");
        assert!((lo - want_lo).abs() <= 1e-6, "{label}: lo endpoint {lo}");
        summary.push_str(&format!(" {label}: ev<={ev:.1e} dist<={dist:.1e};"));
    };
    for n in [3usize, 4, 7] {
        let rep = CliffordRep::<Complex64>::complex(n).unwrap();
        let worsts = symbol_suite(&rep, 100, 50 + n as u64);
        let mut rng = CounterRng::new(58).stream(n as u64);
        let pt = SymbolPoint::random(&rep, &mut rng);
        let window = ellipticity_window(&rep, &pt).unwrap();
        run(&format!("n={n}"), worsts, window, n);
    }
    let rep7 = CliffordRep::<f64>::real_seven();
    let worsts = symbol_suite(&rep7, 100, 59);
    let mut rng = CounterRng::new(58).stream(99);
    let pt = SymbolPoint::random(&rep7, &mut rng);
    let window = ellipticity_window(&rep7, &pt).unwrap();
    run("n=7(real)", worsts, window, 7);
    let dt = budget(t0, 30.0, "criterion 5");
    println!("criterion 05 (symbol suite): PASS —{summary} {dt:.1}s");
}

// ---------------------------------------------------------------- 6

fn killing_residual<S: Scalar>(rep: &CliffordRep<S>, seed: u64) -> f64 {
    let n = rep.n();
    let dim = rep.dim();
    let mut rng = CounterRng::new(seed);
    let mut worst = 0.0f64;
    for &lambda in &[1.0f64, -1.0, 0.5] {
        for _ in 0..20 {
            let mut psi: Vec<S> = rand_spinor(dim, &mut rng);
            let nn = norm2(&psi).sqrt();
            for v in psi.iter_mut() {
                *v = v.scale(1.0 / nn);
            }
            let st = PointState::killing(rep, lambda, &psi);

            // nabla^* nabla phi = n lambda^2 phi
            let lap = laplacian_point(&st);
            for k in 0..dim {
                let r = lap[k] - psi[k].scale(n as f64 * lambda * lambda);
                worst = worst.max(r.abs2().sqrt());
            }

            // |nabla phi|^2 g + div T - 2 <nabla phi (x) nabla phi>
            //   = (n-2) lambda^2 g
            let gn = grad_norm2_point(&st);
            let div = div_em_point(rep, &st);
            let outer = grad_outer_point(&st);
            let want = (n as f64 - 2.0) * lambda * lambda;
            for a in 0..n {
                for b in 0..n {
                    let idd = if a == b { gn } else { 0.0 };
                    let rhs = if a == b { want } else { 0.0 };
                    let lhs = idd + div.a[a][b] - 2.0 * outer.a[a][b];
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    worst
}

#[test]
fn criterion_06_killing_spinor_identities() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for n in [3usize, 5, 7] {
        let rep = CliffordRep::<Complex64>::complex(n).unwrap();
        worst = worst.max(killing_residual(&rep, 60 + n as u64));
    }
    worst = worst.max(killing_residual(&CliffordRep::<f64>::real_seven(), 69));
    assert!(worst <= 1e-12, "max Killing-jet residual {worst:e}");
    let dt = budget(t0, 5.0, "criterion 6");
    println!("criterion 06 (Killing-spinor identities): PASS — max residual {worst:.2e} for n in {{3,5,7}}, lambda in {{1,-1,1/2}}, {dt:.2}s");
}

// ---------------------------------------------------------------- 7

struct SecondVariation {
    max_rel: f64,
    min_quad: f64,
    gauge_ratio: f64,
}

fn second_variation_at(size: usize, eps: f64, seed: u64) -> SecondVariation {
    let rep = CliffordRep::<Complex64>::complex(3).unwrap();
    let lat = TorusLattice::new(3, size, 1.0, FdOrder::Two).unwrap();
    let pair = flat_critical(&lat, &rep, &mut CounterRng::new(seed));
    let cache = geom_cache(&lat, &pair.g).unwrap();
    let e0 = energy(&lat, &rep, &pair.g, &pair.phi).unwrap();

    let mut max_rel = 0.0f64;
    let mut min_quad = f64::INFINITY;
    let mut mean_quad = 0.0f64;
    for i in 0..5u64 {
        let mut drng = CounterRng::new(seed).stream(10 + i);
        let dir = tangent_direction(&lat, &rep, &pair.phi, 1, 1.0, &mut drng);
        let quad = hessian_quadratic(&lat, &rep, &pair.g, &pair.phi, &dir.g, &dir.phi).unwrap();
        assert!(quad >= 0.0, "second variation must be non-negative: {quad}");
        let mut plus = pair.clone();
        plus.axpy(eps, &dir);
        let mut minus = pair.clone();
        minus.axpy(-eps, &dir);
        let ep = energy(&lat, &rep, &plus.g, &plus.phi).unwrap();
        let em = energy(&lat, &rep, &minus.g, &minus.phi).unwrap();
        let fd2 = (ep + em - 2.0 * e0) / (eps * eps);
        max_rel = max_rel.max((fd2 - quad).abs() / (1.0 + quad.abs()));
        min_quad = min_quad.min(quad);
        mean_quad += quad / 5.0;
    }

    // diffeomorphism directions are null for the second variation
    let nabla = nabla_field(&lat, &rep, &cache, &pair.phi);
    let x = random_vector_field(&lat, &mut CounterRng::new(seed).stream(99));
    let gauge_dir = lambda_star_field(&lat, &rep, &pair.g, &cache, &pair.phi, &nabla, &x);
    let gauge_quad =
        hessian_quadratic(&lat, &rep, &pair.g, &pair.phi, &gauge_dir.g, &gauge_dir.phi).unwrap();
    SecondVariation {
        max_rel,
        min_quad,
        gauge_ratio: gauge_quad / (1.0 + mean_quad.abs()),
    }
}

#[test]
fn criterion_07_second_variation() {
    let t0 = Instant::now();
    let coarse = second_variation_at(8, 2e-3, 71);
    let fine = second_variation_at(16, 1e-3, 71);
    assert!(
        fine.max_rel <= 1e-3,
        "combined error {:.3e} exceeds 1e-3",
        fine.max_rel
    );
    assert!(
        fine.max_rel <= coarse.max_rel,
        "error does not improve under refinement: {:.3e} -> {:.3e}",
        coarse.max_rel,
        fine.max_rel
    );
    assert!(fine.min_quad >= 0.0 && coarse.min_quad >= 0.0);
    assert!(
        fine.gauge_ratio <= 1e-6,
        "gauge directions not null: {:.3e}",
        fine.gauge_ratio
    );
    let dt = budget(t0, 120.0, "criterion 7");
    println!(
        "criterion 07 (second variation): PASS — FD2 vs int|kappa|^2 rel {:.2e} -> {:.2e} under refinement, gauge ratio {:.1e}, {dt:.1}s",
        coarse.max_rel, fine.max_rel, fine.gauge_ratio
    );
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_08_dirac_weitzenboeck() {
    let t0 = Instant::now();
    let rep = CliffordRep::<Complex64>::complex(3).unwrap();
    let mut errs = [0.0f64; 2];
    for (slot, &size) in [16usize, 32].iter().enumerate() {
        let (lat, pair) = band_limited_state(&rep, size, 81);
        let e8 = s_energy(&lat, &rep, &pair.g, &pair.phi, 0.125).unwrap();
        let de = dirac_energy(&lat, &rep, &pair.g, &pair.phi).unwrap();
        errs[slot] = (e8 - de).abs() / (1.0 + de.abs());
    }
    let order = (errs[0] / errs[1]).log2();
    assert!(
        order >= 1.9,
        "order {order:.3} below 1.9 ({:.3e} -> {:.3e})",
        errs[0],
        errs[1]
    );
    let dt = budget(t0, 60.0, "criterion 8");
    println!(
        "criterion 08 (Dirac identity): PASS — |E_1/8 - 1/2 int |D phi|^2| rel {:.2e} -> {:.2e}, order {order:.2}, {dt:.1}s",
        errs[0], errs[1]
    );
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_09_g2_bridge() {
    let t0 = Instant::now();
    let rep = CliffordRep::<f64>::real_seven();
    let fc = FormCalculus::new(&rep).unwrap();

    // pointwise identities at exact jets
    let mut rng = CounterRng::new(91);
    let mut u = FourierScalar::random(7, 1.0, &mut rng, 2, 1, 0.05);
    u.base = 0.0;
    let cm = ConformalMetric { n: 7, u };
    let sf = UnitSpinorField::random(&rep, 1.0, &mut rng, 3, 2, 1, 0.3);
    let mut worst_deg = 0.0f64;
    let mut worst_hodge = 0.0f64;
    let mut worst_norm = 0.0f64;
    for _ in 0..20 {
        let x: Vec<f64> = (0..7).map(|_| rng.next_range(0.0, 1.0)).collect();
        let mj = cm.jet(&x);
        let sj = sf.jet(&x);

        let parts = fc.bispinor_parts(&sj.value, &sj.value);
        for &p in &[1usize, 2, 5, 6] {
            for &c in &parts[p] {
                worst_deg = worst_deg.max(c.abs());
            }
        }
        let mut dual = vec![0.0f64; parts[3].len()];
        fc.hodge_dual3(&parts[3], &mut dual);
        for (a, b) in dual.iter().zip(parts[4].iter()) {
            worst_hodge = worst_hodge.max((a - b).abs());
        }

        let pg = PointGeometry::new(&rep, &mj, &sj).unwrap();
        let nr = norm_correspondence(&fc, &pg, &sj);
        worst_norm = worst_norm
            .max((nr.lhs16 - nr.rhs_omega).abs() / (1.0 + nr.lhs16.abs()));
    }
    assert!(worst_deg <= 1e-12, "spurious degree coefficient {worst_deg:e}");
    assert!(worst_hodge <= 1e-12, "sigma vs *Omega deviation {worst_hodge:e}");
    assert!(worst_norm <= 1e-10, "16|nabla phi|^2 vs |nabla Omega|^2: {worst_norm:e}");

    // lattice Dirichlet functionals at two resolutions
    let mut reports = Vec::new();
    for &size in &[5usize, 8] {
        let lat = TorusLattice::new(7, size, 1.0, FdOrder::Two).unwrap();
        let pair = conformal_pair(&lat, &rep, 0.05, 0.3, 1, &mut CounterRng::new(92)).unwrap();
        if size == 5 {
            let bundle = form_bundle(&lat, &fc, &pair.phi).unwrap();
            assert!(
                bundle.max_spurious <= 1e-12,
                "lattice spurious degrees {:.3e}",
                bundle.max_spurious
            );
        }
        reports.push(dirichlet_functionals(&lat, &rep, &fc, &pair).unwrap());
    }
    let (c5, d5) = (reports[0].c_rel_err(), reports[0].d_rel_err());
    let (c8, d8) = (reports[1].c_rel_err(), reports[1].d_rel_err());
    assert!(c8 <= 2e-2, "C vs 16 E_0 relative error {c8:.3e}");
    assert!(d8 <= 2e-2, "D vs 16 E_1/16 relative error {d8:.3e}");
    assert!(c8 < c5, "C error not decreasing with N: {c5:.3e} -> {c8:.3e}");
    assert!(d8 < d5, "D error not decreasing with N: {d5:.3e} -> {d8:.3e}");
    let dt = budget(t0, 180.0, "criterion 9");
    println!(
        "criterion 09 (3-form bridge): PASS — jets: degrees {worst_deg:.1e}, duality {worst_hodge:.1e}, norms {worst_norm:.1e}; lattice: C {c5:.2e}->{c8:.2e}, D {d5:.2e}->{d8:.2e}, {dt:.1}s"
    );
}

// --------------------------------------------------------------- 10

#[test]
fn criterion_10_flow_behavior() {
    let t0 = Instant::now();
    let rep = CliffordRep::<Complex64>::complex(3).unwrap();

    // gauged RK4 descent from a perturbed flat pair
    let lat = TorusLattice::new(3, 16, 1.0, FdOrder::Two).unwrap();
    let pair = perturbed_flat(&lat, &rep, 1e-2, 1, &mut CounterRng::new(101)).unwrap();
    let cfg = FlowConfig {
        scheme: Scheme::Rk4,
        dt_policy: DtPolicy::Cfl { c_safety: 0.1 },
        steps: 2000,
        gauge: Gauge::DeTurck,
        s: 0.0,
        snapshot_every: 0,
        bianchi_every: 0,
        min_metric_eig: 1e-6,
        max_q_inf: 1e6,
        max_halvings: 10,
    };
    let mut sink = VecSink::default();
    let (_, report) = run_flow(&lat, &rep, pair, &cfg, &mut sink).unwrap();
    assert_eq!(report.steps_taken, 2000);
    assert_eq!(report.monotonicity_rejections, 0);
    for w in sink.rows.windows(2) {
        assert!(
            w[1].energy <= w[0].energy,
            "energy increased at step {}: {} -> {}",
            w[1].step,
            w[0].energy,
            w[1].energy
        );
    }
    assert!(report.final_energy <= sink.rows.last().unwrap().energy);
    let decay = report.final_energy / report.initial_energy;
    assert!(decay <= 1e-4, "|nabla phi|^2 decay only {decay:.3e}");
    assert!(
        report.max_unit_dev <= 1e-9,
        "unit-norm deviation {:.3e}",
        report.max_unit_dev
    );

    // the flat critical pair is a fixed point
    let lat8 = TorusLattice::new(3, 8, 1.0, FdOrder::Two).unwrap();
    let flat = flat_critical(&lat8, &rep, &mut CounterRng::new(102));
    let steps = 100usize;
    let mut cfg_flat = cfg;
    cfg_flat.steps = steps;
    let mut sink_flat = VecSink::default();
    let (end, _) = run_flow(&lat8, &rep, flat.clone(), &cfg_flat, &mut sink_flat).unwrap();
    let mut drift = 0.0f64;
    for (a, b) in end.g.data().iter().zip(flat.g.data()) {
        drift = drift.max((a - b).abs());
    }
    for (a, b) in end.phi.data().iter().zip(flat.phi.data()) {
        drift = drift.max((*a - *b).abs2().sqrt());
    }
    let per_step = drift / steps as f64;
    assert!(
        per_step <= 1e-14,
        "flat critical pair drifts {per_step:.3e} per step"
    );
    let dt = budget(t0, 300.0, "criterion 10");
    println!(
        "criterion 10 (flow behavior): PASS — 2000 monotone RK4 steps, energy decay {decay:.1e}, unit dev {:.1e}, fixed-point drift {per_step:.1e}/step, {dt:.1}s",
        report.max_unit_dev
    );
}
