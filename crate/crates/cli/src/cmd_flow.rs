//! `spinflow flow`: time-step the configured scenario, emitting the
//! diagnostics CSV, snapshots, and a run report.

use std::path::Path;
use std::time::Instant;

use serde_json::json;
use spinflow_core::clifford::CliffordRep;
use spinflow_core::field::Pair;
use spinflow_core::flow::{run_flow, DtPolicy, FlowConfig, Gauge, Scheme};
use spinflow_core::lattice::TorusLattice;
use spinflow_core::scalar::Scalar;

use crate::artifacts::{emit_report, write_config_echo, DirSink};
use crate::config::{RunConfig, COMMON_KEYS, FLOW_KEYS};
use crate::errors::{run_err, CliError, CliResult};
use crate::setup::{with_rep, Setup};

fn flow_config(cfg: &RunConfig) -> CliResult<FlowConfig> {
    let scheme = match cfg.str_or("flow.scheme", "rk4").as_str() {
        "rk4" => Scheme::Rk4,
        "euler" => Scheme::Euler,
        other => {
            return Err(CliError::Config(format!(
                "key 'flow.scheme': expected rk4 or euler, found {other:?}"
            )))
        }
    };
    let dt_policy = match cfg.f64_opt("flow.dt")? {
        Some(dt) => DtPolicy::Fixed(dt),
        None => DtPolicy::Cfl {
            c_safety: cfg.f64_or("flow.cfl", 0.1)?,
        },
    };
    let gauge = match cfg.str_or("flow.gauge", "deturck").as_str() {
        "deturck" => Gauge::DeTurck,
        "off" => Gauge::Off,
        other => {
            return Err(CliError::Config(format!(
                "key 'flow.gauge': expected deturck or off, found {other:?}"
            )))
        }
    };
    Ok(FlowConfig {
        scheme,
        dt_policy,
        steps: cfg.usize_or("flow.steps", 100)?,
        gauge,
        s: cfg.f64_or("flow.s", 0.0)?,
        snapshot_every: cfg.usize_or("flow.snapshot_every", 0)?,
        bianchi_every: cfg.usize_or("flow.bianchi_every", 1)?,
        min_metric_eig: cfg.f64_or("flow.min_metric_eig", 1e-6)?,
        max_q_inf: cfg.f64_or("flow.max_q_inf", 1e6)?,
        max_halvings: cfg.usize_or("flow.max_halvings", 10)? as u32,
    })
}

fn flow_typed<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    pair: Pair<S>,
    fcfg: &FlowConfig,
    out: &Path,
) -> CliResult<(serde_json::Value, Option<CliError>)> {
    let mut sink = DirSink::new(out, lat)?;
    let outcome = run_flow(lat, rep, pair, fcfg, &mut sink);
    let snapshots: Vec<String> = sink
        .snapshots
        .iter()
        .map(|p| {
            p.file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default()
        })
        .collect();
    let (value, err) = match outcome {
        Ok((_, r)) => (
            json!({
                "status": "ok",
                "steps_taken": r.steps_taken,
                "final_time": r.final_time,
                "initial_energy": r.initial_energy,
                "final_energy": r.final_energy,
                "initial_s_energy": r.initial_s_energy,
                "final_s_energy": r.final_s_energy,
                "final_q_l2": r.final_q_l2,
                "max_unit_deviation": r.max_unit_dev,
                "min_metric_eigenvalue": r.min_metric_eig,
                "monotonicity_rejections": r.monotonicity_rejections,
                "final_dt": r.final_dt,
                "s_outside_window": r.s_outside_window,
                "diagnostics": "diagnostics.csv",
                "snapshots": snapshots,
            }),
            None,
        ),
        Err(e) => {
            let mapped = run_err(e);
            let status = match mapped {
                CliError::Blowup(_) => "blow-up",
                _ => "stalled",
            };
            (
                json!({
                    "status": status,
                    "error": mapped.message(),
                    "diagnostics": "diagnostics.csv",
                    "snapshots": snapshots,
                }),
                Some(mapped),
            )
        }
    };
    if err.is_none() {
        if let Some(e) = sink.first_error {
            return Err(e);
        }
    }
    Ok((value, err))
}

pub fn run(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let t0 = Instant::now();
    let allowed: Vec<&str> = COMMON_KEYS.iter().chain(FLOW_KEYS).copied().collect();
    cfg.validate_keys(&allowed)?;
    let setup = Setup::from_config(cfg)?;
    let lat = setup.lattice()?;
    let fcfg = flow_config(cfg)?;
    if fcfg.s_outside_window(lat.n()) {
        eprintln!(
            "warning: flow.s = {} lies outside the weak-ellipticity window \
             (-1/(8(n-2)), 1/8); proceeding anyway",
            fcfg.s
        );
    }
    write_config_echo(out, cfg)?;
    let (report, err) = with_rep!(setup.n, rep, {
        let pair = setup.build_pair(&lat, &rep)?;
        flow_typed(&lat, &rep, pair, &fcfg, out)?
    });
    emit_report(Some(out), cfg, report, t0.elapsed().as_secs_f64())?;
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
