//! `spinflow oracle`: dumps analytic jet-oracle reference values
//! (exact point geometry and operator outputs for a seeded band-limited
//! metric/spinor family) for cross-implementation comparison.

use std::path::Path;
use std::time::Instant;

use serde_json::json;
use spinflow_core::clifford::CliffordRep;
use spinflow_core::jet::{
    dirac_point, q1_point, q2_point, FourierMetric, MetricFamily, PointGeometry, UnitSpinorField,
};
use spinflow_core::rng::CounterRng;
use spinflow_core::scalar::{norm2, Scalar};

use crate::artifacts::emit_report;
use crate::config::{RunConfig, COMMON_KEYS, ORACLE_KEYS};
use crate::errors::{setup_err, CliResult};
use crate::setup::with_rep;

struct Params {
    n: usize,
    length: f64,
    seed: u64,
    points: usize,
    metric_amp: f64,
    spinor_amp: f64,
    max_k: i64,
    waves: usize,
}

fn oracle_typed<S: Scalar>(rep: &CliffordRep<S>, prm: &Params) -> CliResult<serde_json::Value> {
    let n = prm.n;
    let mut rng = CounterRng::new(prm.seed);
    let fm = FourierMetric::random_near_flat(n, prm.length, &mut rng, prm.waves, prm.max_k, prm.metric_amp);
    let sf = UnitSpinorField::random(rep, prm.length, &mut rng, 2, prm.waves, prm.max_k, prm.spinor_amp);
    let mut pts_rng = CounterRng::new(prm.seed).stream(2);
    let mut points = Vec::new();
    for _ in 0..prm.points {
        let x: Vec<f64> = (0..n).map(|_| pts_rng.next_range(0.0, prm.length)).collect();
        let mj = fm.jet(&x);
        let sj = sf.jet(&x);
        let pg = PointGeometry::new(rep, &mj, &sj).map_err(setup_err)?;
        let st = pg.frame_state();
        let q1 = q1_point(rep, &st);
        let q2 = q2_point(&st);
        let dphi = dirac_point(rep, &st);
        let mut g_packed = Vec::new();
        for i in 0..n {
            for j in i..n {
                g_packed.push(pg.g.a[i][j]);
            }
        }
        points.push(json!({
            "x": x,
            "g": g_packed,
            "sqrt_det": pg.sqrt_det,
            "scal": pg.scal,
            "grad_norm2": pg.grad_norm2(),
            "q1": {
                "trace": (0..n).map(|i| q1.a[i][i]).sum::<f64>(),
                "frobenius2": q1.dot(&q1),
            },
            "q2_norm2": norm2(&q2),
            "dirac_norm2": norm2(&dphi),
        }));
    }
    Ok(json!({
        "status": "ok",
        "n": n,
        "seed": prm.seed,
        "rng": "splitmix64 finalizer over seed + (index+1)*golden, streams by seed remix",
        "points": points,
    }))
}

pub fn run(cfg: &RunConfig, out: Option<&Path>) -> CliResult<()> {
    let t0 = Instant::now();
    let allowed: Vec<&str> = COMMON_KEYS.iter().chain(ORACLE_KEYS).copied().collect();
    cfg.validate_keys(&allowed)?;
    let prm = Params {
        n: cfg.require_usize("n")?,
        length: cfg.f64_or("length", 1.0)?,
        seed: cfg.u64_or("seed", 0)?,
        points: cfg.usize_or("oracle.points", 3)?,
        metric_amp: cfg.f64_or("oracle.metric_amp", 0.05)?,
        spinor_amp: cfg.f64_or("oracle.spinor_amp", 0.3)?,
        max_k: cfg.i64_or("oracle.max_k", 1)?,
        waves: cfg.usize_or("oracle.waves", 2)?,
    };
    let report = with_rep!(prm.n, rep, oracle_typed(&rep, &prm)?);
    emit_report(out, cfg, report, t0.elapsed().as_secs_f64())?;
    Ok(())
}
