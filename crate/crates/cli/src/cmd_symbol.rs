//! `spinflow symbol`: principal-symbol spectra at random unit
//! covector/spinor points, kernel dimension, the image/kernel match
//! with the constraint operator, and the weak-ellipticity window.

use std::path::Path;
use std::time::Instant;

use serde_json::json;
use spinflow_core::clifford::CliffordRep;
use spinflow_core::rng::CounterRng;
use spinflow_core::scalar::Scalar;
use spinflow_core::symbol::{
    ellipticity_window, lambda_star_image_coords, subspace_distance, symbol_quadratic_form,
    SymbolPoint,
};

use crate::artifacts::emit_report;
use crate::config::{RunConfig, COMMON_KEYS, SYMBOL_KEYS};
use crate::errors::{setup_err, CliResult};
use crate::setup::with_rep;

struct Params {
    trials: usize,
    s: f64,
    gauged: bool,
    seed: u64,
}

fn symbol_typed<S: Scalar>(rep: &CliffordRep<S>, prm: &Params) -> CliResult<serde_json::Value> {
    let n = rep.n();
    let root = CounterRng::new(prm.seed);
    let mut max_eig = f64::NEG_INFINITY;
    let mut kernel_dims = Vec::new();
    let mut max_subspace_dist = 0.0f64;
    let mut first_spectrum: Vec<f64> = Vec::new();
    for trial in 0..prm.trials {
        let mut rng = root.stream(trial as u64);
        let pt = SymbolPoint::random(rep, &mut rng);
        let form = symbol_quadratic_form(rep, &pt, prm.s, prm.gauged);
        if trial == 0 {
            first_spectrum = form.eigenvalues.clone();
        }
        let top = form.max_eigenvalue();
        if top > max_eig {
            max_eig = top;
        }
        kernel_dims.push(form.kernel_dim);
        if !prm.gauged && prm.s == 0.0 {
            let image = lambda_star_image_coords(rep, &pt);
            let kernel = form.kernel_basis();
            let (dist, _, _) = subspace_distance(&image, &kernel);
            if dist > max_subspace_dist {
                max_subspace_dist = dist;
            }
        }
    }
    let kernel_dim = kernel_dims.first().copied().unwrap_or(0);
    let kernel_consistent = kernel_dims.iter().all(|&k| k == kernel_dim);
    let window = if n >= 3 {
        let mut rng = root.stream(u64::MAX);
        let pt = SymbolPoint::random(rep, &mut rng);
        let (lo, hi) = ellipticity_window(rep, &pt).map_err(setup_err)?;
        json!({ "lo": lo, "hi": hi })
    } else {
        serde_json::Value::Null
    };
    Ok(json!({
        "status": "ok",
        "n": n,
        "s": prm.s,
        "gauged": prm.gauged,
        "trials": prm.trials,
        "eigenvalues": first_spectrum,
        "kernel_dim": kernel_dim,
        "kernel_dim_consistent": kernel_consistent,
        "max_eigenvalue": max_eig,
        "max_image_kernel_distance": if prm.gauged || prm.s != 0.0 {
            serde_json::Value::Null
        } else {
            json!(max_subspace_dist)
        },
        "window": window,
    }))
}

pub fn run(cfg: &RunConfig, out: Option<&Path>) -> CliResult<()> {
    let t0 = Instant::now();
    let allowed: Vec<&str> = COMMON_KEYS.iter().chain(SYMBOL_KEYS).copied().collect();
    cfg.validate_keys(&allowed)?;
    let n = cfg.require_usize("n")?;
    let prm = Params {
        trials: cfg.usize_or("symbol.trials", 100)?,
        s: cfg.f64_or("symbol.s", 0.0)?,
        gauged: cfg.bool_or("symbol.gauged", false)?,
        seed: cfg.u64_or("seed", 0)?,
    };
    let report = with_rep!(n, rep, symbol_typed(&rep, &prm)?);
    emit_report(out, cfg, report, t0.elapsed().as_secs_f64())?;
    Ok(())
}
