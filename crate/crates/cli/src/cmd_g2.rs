//! `spinflow g2`: the dimension-seven spinor/3-form dictionary.
//! Reads a snapshot (or builds the configured scenario), expands the
//! bispinor, and reports every identity residual: vanishing degrees,
//! Hodge duality of the degree-4 part, the pointwise norm constant, and
//! the Dirichlet-functional comparisons.

use std::path::Path;
use std::time::Instant;

use serde_json::json;
use spinflow_core::clifford::CliffordRep;
use spinflow_core::field::Pair;
use spinflow_core::g2::{dirichlet_functionals, form_bundle, FormCalculus, LEN3};
use spinflow_core::lattice::TorusLattice;

use crate::artifacts::{emit_report, read_snapshot_f64};
use crate::config::{RunConfig, COMMON_KEYS, G2_KEYS};
use crate::errors::{setup_err, CliError, CliResult};
use crate::setup::Setup;

fn g2_report(
    lat: &TorusLattice,
    rep: &CliffordRep<f64>,
    pair: &Pair<f64>,
) -> CliResult<serde_json::Value> {
    let fc = FormCalculus::new(rep).map_err(setup_err)?;
    let bundle = form_bundle(lat, &fc, &pair.phi).map_err(setup_err)?;
    let mut hodge_residual = 0.0f64;
    let mut norm_residual = 0.0f64;
    let mut dual = [0.0f64; LEN3];
    for s in 0..lat.num_sites() {
        let om = bundle.omega.at(s);
        fc.hodge_dual3(om, &mut dual);
        for (a, b) in dual.iter().zip(bundle.sigma.at(s)) {
            let d = (a - b).abs();
            if d > hodge_residual {
                hodge_residual = d;
            }
        }
        let n2: f64 = om.iter().map(|v| v * v).sum();
        let d = (n2 - 7.0).abs();
        if d > norm_residual {
            norm_residual = d;
        }
    }
    let dirichlet = dirichlet_functionals(lat, rep, &fc, pair).map_err(setup_err)?;
    Ok(json!({
        "status": "ok",
        "n": lat.n(),
        "size": lat.size(),
        "max_spurious_degree_coefficient": bundle.max_spurious,
        "hodge_duality_residual": hodge_residual,
        "pointwise_norm_residual": norm_residual,
        "dirichlet": {
            "c": dirichlet.c,
            "sixteen_e0": dirichlet.sixteen_e0,
            "c_rel_err": dirichlet.c_rel_err(),
            "d": dirichlet.d,
            "sixteen_e_sixteenth": dirichlet.sixteen_es,
            "d_rel_err": dirichlet.d_rel_err(),
        },
    }))
}

pub fn run(cfg: &RunConfig, out: Option<&Path>) -> CliResult<()> {
    let t0 = Instant::now();
    let allowed: Vec<&str> = COMMON_KEYS.iter().chain(G2_KEYS).copied().collect();
    cfg.validate_keys(&allowed)?;
    let rep = CliffordRep::<f64>::real_seven();
    let report = match cfg.str_opt("g2.snapshot") {
        Some(path) => {
            let (_, lat, pair) = read_snapshot_f64(Path::new(&path))?;
            if lat.n() != 7 {
                return Err(CliError::Config(format!(
                    "g2.snapshot: snapshot has n = {}, the 3-form bridge needs n = 7",
                    lat.n()
                )));
            }
            g2_report(&lat, &rep, &pair)?
        }
        None => {
            let setup = Setup::from_config(cfg)?;
            if setup.n != 7 {
                return Err(CliError::Config(format!(
                    "g2: configured n = {}, the 3-form bridge needs n = 7",
                    setup.n
                )));
            }
            let lat = setup.lattice()?;
            let pair = setup.build_pair(&lat, &rep)?;
            g2_report(&lat, &rep, &pair)?
        }
    };
    let fail_above = cfg.f64_opt("g2.fail_above")?;
    let worst = report["dirichlet"]["c_rel_err"]
        .as_f64()
        .unwrap_or(f64::NAN)
        .max(report["dirichlet"]["d_rel_err"].as_f64().unwrap_or(f64::NAN));
    emit_report(out, cfg, report, t0.elapsed().as_secs_f64())?;
    if let Some(thr) = fail_above {
        if worst.is_nan() || worst > thr {
            return Err(CliError::Suite(format!(
                "g2: Dirichlet relative error {worst:e} exceeds g2.fail_above = {thr:e}"
            )));
        }
    }
    Ok(())
}
