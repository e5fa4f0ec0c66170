//! Explicit time integration of the (gauged) negative gradient flow
//! of `E_s`, with constraint projection, energy-monotonicity guarding,
//! blow-up detection, and per-step diagnostics.

use crate::clifford::CliffordRep;
use crate::error::BlowupInfo;
use crate::field::Pair;
use crate::functional::{energy_with, total_scalar, volume_with};
use crate::gradient::{
    gauged_q_pair, geom_cache, lambda_field, nabla_field, pair_max_abs, pair_norm, q_pair_with,
    vector_l2_norm, GeomCache,
};
use crate::lattice::TorusLattice;
use crate::scalar::Scalar;
use crate::{Error, Result};
use alloc::vec::Vec;

/// Time integrator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Rk4,
}

/// Step-size policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// `dt = c_safety * h^2 / (1 + max site spectral radius of g^{-1})`.
    Cfl { c_safety: f64 },
}

/// Gauge choice. The DeTurck background is frozen to the initial
/// metric of the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    Off,
    DeTurck,
}

/// Flow configuration.
#[derive(Clone, Copy, Debug)]
pub struct FlowConfig {
    pub scheme: Scheme,
    pub dt_policy: DtPolicy,
    pub steps: usize,
    pub gauge: Gauge,
    pub s: f64,
    /// Emit a snapshot every this many steps (0 = only the final one).
    pub snapshot_every: usize,
    /// Evaluate the (relatively expensive) Bianchi residual every this
    /// many steps (0 = never); other rows repeat the last value.
    pub bianchi_every: usize,
    /// Abort when the smallest metric eigenvalue falls below this.
    pub min_metric_eig: f64,
    /// Abort when the sup-norm of the gradient exceeds this.
    pub max_q_inf: f64,
    /// Give up after this many step-size halvings of the energy guard.
    pub max_halvings: u32,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            scheme: Scheme::Rk4,
            dt_policy: DtPolicy::Cfl { c_safety: 0.1 },
            steps: 100,
            gauge: Gauge::DeTurck,
            s: 0.0,
            snapshot_every: 0,
            bianchi_every: 1,
            min_metric_eig: 1e-6,
            max_q_inf: 1e6,
            max_halvings: 10,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        match self.dt_policy {
            DtPolicy::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::InvalidParameter {
                    what: "fixed dt must be positive and finite",
                })
            }
            DtPolicy::Cfl { c_safety } if !(c_safety > 0.0 && c_safety.is_finite()) => {
                return Err(Error::InvalidParameter {
                    what: "cfl safety factor must be positive and finite",
                })
            }
            _ => {}
        }
        if self.min_metric_eig <= 0.0 || self.max_q_inf <= 0.0 {
            return Err(Error::InvalidParameter {
                what: "abort thresholds must be positive",
            });
        }
        Ok(())
    }

    /// Whether `s` lies outside the open weak-ellipticity window
    /// `(-1/(8(n-2)), 1/8)`; such runs are allowed but flagged.
    pub fn s_outside_window(&self, n: usize) -> bool {
        if self.s == 0.0 || n < 3 {
            return false;
        }
        let lo = -1.0 / (8.0 * (n as f64 - 2.0));
        !(self.s > lo && self.s < 0.125)
    }
}

/// One diagnostics record, emitted once per accepted step.
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    pub s_energy: f64,
    pub q_l2: f64,
    pub bianchi: f64,
    pub volume: f64,
    pub max_unit_dev: f64,
    pub min_metric_eig: f64,
    pub dt: f64,
}

/// Receives diagnostics and snapshots during a run.
pub trait FlowSink<S: Scalar> {
    fn on_row(&mut self, row: &DiagnosticsRow);
    fn on_snapshot(&mut self, _step: usize, _pair: &Pair<S>) {}
}

/// A sink that stores every row in memory.
#[derive(Default)]
pub struct VecSink {
    pub rows: Vec<DiagnosticsRow>,
}

impl<S: Scalar> FlowSink<S> for VecSink {
    fn on_row(&mut self, row: &DiagnosticsRow) {
        self.rows.push(*row);
    }
}

/// Run summary.
#[derive(Clone, Copy, Debug)]
pub struct FlowReport {
    pub steps_taken: usize,
    pub final_time: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub initial_s_energy: f64,
    pub final_s_energy: f64,
    pub final_q_l2: f64,
    pub max_unit_dev: f64,
    pub min_metric_eig: f64,
    pub monotonicity_rejections: usize,
    pub final_dt: f64,
    pub s_outside_window: bool,
}

/// Parabolic step size `c_safety * h^2 / (1 + max_x rho(g^{-1}(x)))`.
pub fn cfl_dt(lat: &TorusLattice, min_metric_eig: f64, c_safety: f64) -> f64 {
    let rho = 1.0 / min_metric_eig;
    c_safety * lat.h() * lat.h() / (1.0 + rho)
}

struct QEval<S: Scalar> {
    q: Pair<S>,
    cache: GeomCache,
    energy: f64,
}

fn eval_q<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    pair: &Pair<S>,
    cfg: &FlowConfig,
    bg: Option<&GeomCache>,
    step: usize,
    t: f64,
) -> Result<QEval<S>> {
    let cache = geom_cache(lat, &pair.g)?;
    if cache.min_metric_eig < cfg.min_metric_eig {
        return Err(Error::FlowBlowup(BlowupInfo {
            step: step as u64,
            time: t,
            min_metric_eigenvalue: cache.min_metric_eig,
            q_inf: f64::NAN,
        }));
    }
    let q = match bg {
        Some(bg) => gauged_q_pair(lat, rep, &pair.g, &cache, &pair.phi, cfg.s, bg),
        None => q_pair_with(lat, rep, &pair.g, &cache, &pair.phi, cfg.s),
    };
    let q_inf = pair_max_abs(&q);
    if q_inf.is_nan() || q_inf > cfg.max_q_inf {
        return Err(Error::FlowBlowup(BlowupInfo {
            step: step as u64,
            time: t,
            min_metric_eigenvalue: cache.min_metric_eig,
            q_inf,
        }));
    }
    let energy = energy_with(lat, rep, &pair.g, &cache.frame, &pair.phi);
    Ok(QEval { q, cache, energy })
}

/// Advances one explicit step of size `dt` from `pair`, reusing the
/// already-evaluated gradient at the base point.
fn advance<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    pair: &Pair<S>,
    k1: &Pair<S>,
    dt: f64,
    cfg: &FlowConfig,
    bg: Option<&GeomCache>,
    step: usize,
    t: f64,
) -> Result<Pair<S>> {
    let mut next = pair.clone();
    match cfg.scheme {
        Scheme::Euler => {
            next.axpy(dt, k1);
        }
        Scheme::Rk4 => {
            let mut stage = pair.clone();
            stage.axpy(0.5 * dt, k1);
            let k2 = eval_q(lat, rep, &stage, cfg, bg, step, t)?.q;
            stage = pair.clone();
            stage.axpy(0.5 * dt, &k2);
            let k3 = eval_q(lat, rep, &stage, cfg, bg, step, t)?.q;
            stage = pair.clone();
            stage.axpy(dt, &k3);
            let k4 = eval_q(lat, rep, &stage, cfg, bg, step, t)?.q;
            next.axpy(dt / 6.0, k1);
            next.axpy(dt / 3.0, &k2);
            next.axpy(dt / 3.0, &k3);
            next.axpy(dt / 6.0, &k4);
        }
    }
    Ok(next)
}

/// Runs the flow for `cfg.steps` accepted steps (or until blow-up /
/// stall), emitting one [`DiagnosticsRow`] per accepted step and
/// snapshots on the configured cadence. Returns the final state and a
/// summary report.
pub fn run_flow<S: Scalar>(
    lat: &TorusLattice,
    rep: &CliffordRep<S>,
    mut pair: Pair<S>,
    cfg: &FlowConfig,
    sink: &mut dyn FlowSink<S>,
) -> Result<(Pair<S>, FlowReport)> {
    cfg.validate()?;
    let bg = match cfg.gauge {
        Gauge::DeTurck => Some(geom_cache(lat, &pair.g)?),
        Gauge::Off => None,
    };
    let mut t = 0.0;
    let mut dt_cap = f64::INFINITY;
    let mut rejections = 0usize;
    let mut report = FlowReport {
        steps_taken: 0,
        final_time: 0.0,
        initial_energy: f64::NAN,
        final_energy: f64::NAN,
        initial_s_energy: f64::NAN,
        final_s_energy: f64::NAN,
        final_q_l2: f64::NAN,
        max_unit_dev: 0.0,
        min_metric_eig: f64::INFINITY,
        monotonicity_rejections: 0,
        final_dt: f64::NAN,
        s_outside_window: cfg.s_outside_window(lat.n()),
    };
    let mut ev = eval_q(lat, rep, &pair, cfg, bg.as_ref(), 0, 0.0)?;
    report.initial_energy = ev.energy;
    report.initial_s_energy = if cfg.s == 0.0 {
        ev.energy
    } else {
        ev.energy + cfg.s * total_scalar(lat, &pair.g)?
    };
    let mut bianchi = f64::NAN;
    let mut step = 0usize;
    while step < cfg.steps {
        let mut dt = match cfg.dt_policy {
            DtPolicy::Fixed(v) => v,
            DtPolicy::Cfl { c_safety } => cfl_dt(lat, ev.cache.min_metric_eig, c_safety),
        };
        if dt > dt_cap {
            dt = dt_cap;
        }
        let e_here = ev.energy;
        let s_here = if cfg.s == 0.0 {
            e_here
        } else {
            e_here + cfg.s * total_scalar(lat, &pair.g)?
        };
        if cfg.bianchi_every > 0 && step.is_multiple_of(cfg.bianchi_every) {
            let nabla = nabla_field(lat, rep, &ev.cache, &pair.phi);
            let lam = lambda_field(
                lat,
                rep,
                &pair.g,
                &ev.cache,
                &pair.phi,
                &nabla,
                &ev.q.g,
                &ev.q.phi,
            );
            let num = vector_l2_norm(lat, &pair.g, &ev.cache, &lam);
            bianchi = num / (1.0 + pair_norm(lat, &ev.cache, &ev.q));
        }
        let unit_dev = pair.max_norm_deviation();
        if unit_dev > report.max_unit_dev {
            report.max_unit_dev = unit_dev;
        }
        if ev.cache.min_metric_eig < report.min_metric_eig {
            report.min_metric_eig = ev.cache.min_metric_eig;
        }
        let row = DiagnosticsRow {
            step,
            t,
            energy: e_here,
            s_energy: s_here,
            q_l2: pair_norm(lat, &ev.cache, &ev.q),
            bianchi,
            volume: volume_with(lat, &ev.cache.frame),
            max_unit_dev: unit_dev,
            min_metric_eig: ev.cache.min_metric_eig,
            dt,
        };
        sink.on_row(&row);
        if cfg.snapshot_every > 0 && step.is_multiple_of(cfg.snapshot_every) {
            sink.on_snapshot(step, &pair);
        }

        // attempt the step, halving dt until the energy guard accepts
        let mut halvings = 0u32;
        let (next_pair, next_ev) = loop {
            let mut candidate = advance(lat, rep, &pair, &ev.q, dt, cfg, bg.as_ref(), step, t)?;
            candidate.renormalize_spinor();
            let cev = eval_q(lat, rep, &candidate, cfg, bg.as_ref(), step + 1, t + dt)?;
            // guard on the functional the flow actually descends
            let c_lyap = if cfg.s == 0.0 {
                cev.energy
            } else {
                cev.energy + cfg.s * total_scalar(lat, &candidate.g)?
            };
            let tol = 1e-10 * (1.0 + crate::fm::abs(s_here));
            if c_lyap <= s_here + tol {
                break (candidate, cev);
            }
            rejections += 1;
            halvings += 1;
            if halvings > cfg.max_halvings {
                return Err(Error::FlowStalled {
                    step: step as u64,
                    dt,
                });
            }
            dt *= 0.5;
            dt_cap = dt;
        };
        pair = next_pair;
        ev = next_ev;
        t += dt;
        step += 1;
        report.final_dt = dt;
    }
    report.steps_taken = step;
    report.final_time = t;
    report.final_energy = ev.energy;
    report.final_s_energy = if cfg.s == 0.0 {
        ev.energy
    } else {
        ev.energy + cfg.s * total_scalar(lat, &pair.g)?
    };
    report.final_q_l2 = pair_norm(lat, &ev.cache, &ev.q);
    report.monotonicity_rejections = rejections;
    let final_dev = pair.max_norm_deviation();
    if final_dev > report.max_unit_dev {
        report.max_unit_dev = final_dev;
    }
    sink.on_snapshot(step, &pair);
    Ok((pair, report))
}
