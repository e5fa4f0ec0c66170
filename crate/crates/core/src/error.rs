//! Crate-wide error type.

use core::fmt;

/// Errors reported by the numerical core.
///
/// The type is deliberately small: most routines have mathematical
/// preconditions (dimension ranges, positive-definiteness, antisymmetry)
/// that are validated up front and reported here instead of panicking.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Torus/spinor dimension outside the supported range.
    UnsupportedDimension { n: usize, what: &'static str },
    /// A symmetric matrix argument was expected to be positive definite.
    NotPositiveDefinite { what: &'static str, min_eigenvalue: f64 },
    /// Mismatched array lengths or incompatible field shapes.
    Shape { what: &'static str },
    /// A form coefficient array failed its antisymmetry validation.
    NotAntisymmetric { max_violation: f64, tol: f64 },
    /// No antilinear structure with the requested properties exists for
    /// this representation (it does not in dimensions 3, 4, 5 mod 8).
    NoRealStructure { n: usize },
    /// An operation parameter is invalid (step counts, tolerances, ...).
    InvalidParameter { what: &'static str },
    /// The flow left the admissible region (metric degenerating or the
    /// gradient blowing up) and was halted.
    FlowBlowup(BlowupInfo),
    /// The flow could not find an energy-decreasing step even after the
    /// configured number of step-size halvings.
    FlowStalled { step: u64, dt: f64 },
}

/// Diagnostic payload attached to [`Error::FlowBlowup`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupInfo {
    /// Step index at which the abort triggered.
    pub step: u64,
    /// Flow time at the abort.
    pub time: f64,
    /// Minimum metric eigenvalue over all sites.
    pub min_metric_eigenvalue: f64,
    /// Max-norm of the gradient field.
    pub q_inf: f64,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedDimension { n, what } => {
                write!(f, "unsupported dimension {n} for {what}")
            }
            Error::NotPositiveDefinite {
                what,
                min_eigenvalue,
            } => write!(
                f,
                "{what}: matrix is not positive definite (min eigenvalue {min_eigenvalue:e})"
            ),
            Error::Shape { what } => write!(f, "shape mismatch: {what}"),
            Error::NotAntisymmetric { max_violation, tol } => write!(
                f,
                "form coefficients are not antisymmetric (violation {max_violation:e} > tol {tol:e})"
            ),
            Error::NoRealStructure { n } => {
                write!(f, "no real structure exists in dimension {n}")
            }
            Error::InvalidParameter { what } => write!(f, "invalid parameter: {what}"),
            Error::FlowBlowup(info) => write!(
                f,
                "flow blow-up at step {} (t = {:.6e}): min metric eigenvalue {:.3e}, |Q|_inf {:.3e}",
                info.step, info.time, info.min_metric_eigenvalue, info.q_inf
            ),
            Error::FlowStalled { step, dt } => write!(
                f,
                "flow stalled at step {step}: no energy-decreasing step found down to dt = {dt:.3e}"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
