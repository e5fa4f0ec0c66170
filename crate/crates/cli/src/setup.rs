//! Lattice, representation, and initial-data construction from a
//! [`RunConfig`].

use spinflow_core::scalar::Complex64;
use spinflow_core::clifford::CliffordRep;
use spinflow_core::field::Pair;
use spinflow_core::lattice::{FdOrder, TorusLattice};
use spinflow_core::rng::CounterRng;
use spinflow_core::scalar::Scalar;
use spinflow_core::scenario;

use crate::config::RunConfig;
use crate::errors::{setup_err, CliError, CliResult};

/// Named initial-data family.
#[derive(Debug, Clone)]
pub enum Scenario {
    FlatCritical,
    PerturbedFlat { amplitude: f64, max_k: i64 },
    PlaneWave { k: Vec<i64> },
}

/// Common run geometry and scenario parameters.
#[derive(Debug, Clone)]
pub struct Setup {
    pub n: usize,
    pub size: usize,
    pub length: f64,
    pub fd_order: FdOrder,
    pub seed: u64,
    pub scenario: Scenario,
}

impl Setup {
    pub fn from_config(cfg: &RunConfig) -> CliResult<Self> {
        let n = cfg.require_usize("n")?;
        let size = cfg.require_usize("size")?;
        let length = cfg.f64_or("length", 1.0)?;
        let fd_order = match cfg.usize_or("fd_order", 2)? {
            2 => FdOrder::Two,
            4 => FdOrder::Four,
            other => {
                return Err(CliError::Config(format!(
                    "key 'fd_order': expected 2 or 4, found {other}"
                )))
            }
        };
        let seed = cfg.u64_or("seed", 0)?;
        let name = cfg.str_or("scenario", "flat_critical");
        let scenario = match name.as_str() {
            "flat_critical" => Scenario::FlatCritical,
            "perturbed_flat" => Scenario::PerturbedFlat {
                amplitude: cfg.f64_or("scenario.amplitude", 1e-2)?,
                max_k: cfg.i64_or("scenario.max_k", 1)?,
            },
            "plane_wave" | "plane_wave_spinor" => {
                let mut default = vec![0i64; n];
                if !default.is_empty() {
                    default[0] = 1;
                }
                Scenario::PlaneWave {
                    k: cfg.i64_list_or("scenario.k", &default)?,
                }
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown scenario '{other}' (valid: flat_critical, perturbed_flat, plane_wave)"
                )))
            }
        };
        Ok(Setup {
            n,
            size,
            length,
            fd_order,
            seed,
            scenario,
        })
    }

    pub fn lattice(&self) -> CliResult<TorusLattice> {
        TorusLattice::new(self.n, self.size, self.length, self.fd_order).map_err(setup_err)
    }

    /// Builds the configured initial pair; the seed fully determines
    /// every random field.
    pub fn build_pair<S: Scalar>(
        &self,
        lat: &TorusLattice,
        rep: &CliffordRep<S>,
    ) -> CliResult<Pair<S>> {
        let mut rng = CounterRng::new(self.seed);
        match &self.scenario {
            Scenario::FlatCritical => Ok(scenario::flat_critical(lat, rep, &mut rng)),
            Scenario::PerturbedFlat { amplitude, max_k } => {
                scenario::perturbed_flat(lat, rep, *amplitude, *max_k, &mut rng).map_err(setup_err)
            }
            Scenario::PlaneWave { k } => scenario::rotating_wave(lat, rep, k).map_err(setup_err),
        }
    }
}

/// Scalar-dispatched Clifford representation: the real eight-dimensional
/// representation in dimension seven (half the memory traffic, and the
/// one the 3-form bridge needs), complex irreducibles elsewhere.
pub enum AnyRep {
    Real(CliffordRep<f64>),
    Complex(CliffordRep<Complex64>),
}

pub fn rep_for(n: usize) -> CliResult<AnyRep> {
    if n == 7 {
        Ok(AnyRep::Real(CliffordRep::real_seven()))
    } else {
        CliffordRep::complex(n).map(AnyRep::Complex).map_err(setup_err)
    }
}

/// Runs `body` with the representation for `n`, whichever scalar type
/// it carries.
macro_rules! with_rep {
    ($n:expr, $rep:ident, $body:expr) => {
        match crate::setup::rep_for($n)? {
            crate::setup::AnyRep::Real($rep) => $body,
            crate::setup::AnyRep::Complex($rep) => $body,
        }
    };
}

pub(crate) use with_rep;
