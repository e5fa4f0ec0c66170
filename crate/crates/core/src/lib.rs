//! Numerical core for the spinorial energy functional
//! `E(g, phi) = 1/2 ∫ |∇^g phi|^2 dv^g`
//! on flat tori `T^n = R^n / L·Z^n`, `2 <= n <= 8`.
//!
//! The crate provides:
//!
//! * irreducible Clifford/spin representations with skew-adjoint generators
//!   ([`clifford`]), including the real eight-dimensional representation in
//!   dimension seven built from octonion left multiplication;
//! * periodic lattices with central finite differences and field containers
//!   in metric square-root frames ([`lattice`], [`field`]);
//! * discrete Riemannian/spin geometry: Christoffel symbols, orthonormal
//!   frames `b = g^{-1/2}`, spin connection, covariant derivatives,
//!   curvature, Dirac operator ([`geometry`]);
//! * the energy, its negative L2 gradient `Q = (Q1, Q2)`, the
//!   energy-momentum tensor, the diffeomorphism operators `lambda`/`lambda*`,
//!   DeTurck gauge vector fields, and the second-variation operator `kappa`
//!   ([`functional`], [`gradient`]);
//! * exact principal-symbol algebra at a point with eigenvalue/kernel
//!   analysis and the ellipticity window of the `s`-deformed flow
//!   ([`symbol`]);
//! * explicit flow integrators with step-size control, renormalization and
//!   per-step diagnostics ([`flow`]);
//! * the dimension-seven bridge from unit spinors to 3-forms with Dirichlet
//!   functional comparisons ([`g2`]);
//! * analytic jet oracles used as an independent reference for convergence
//!   testing ([`jet`]), and reproducible scenario constructors
//!   ([`scenario`]).
//!
//! All floating point work is `f64`. Spinor arithmetic is generic over the
//! coefficient [`scalar::Scalar`] so that complex representations run on
//! `Complex64` and the real dimension-seven representation runs on plain
//! `f64` at half the memory traffic.
//!
//! The crate is `no_std`-compatible (requires `alloc`); disable the default
//! `std` feature and enable `libm` for bare-metal float math.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
// Tensor kernels walk several arrays under shared coordinate indices;
// iterator rewrites of such loops obscure the index symmetry.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]

extern crate alloc;

pub mod clifford;
pub mod error;
pub mod field;
pub mod flow;
mod fm;
pub mod functional;
pub mod g2;
pub mod geometry;
pub mod gradient;
pub mod jet;
pub mod lattice;
pub mod linalg;
pub mod rng;
pub mod scalar;
pub mod scenario;
pub mod symbol;
pub mod util;

pub use error::Error;

/// Largest supported torus dimension.
pub const MAX_N: usize = 8;

/// Largest spinor dimension over the active scalar
/// (`2^{MAX_N/2}` complex components in dimension eight).
pub const MAX_DIM: usize = 16;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
