//! Float math shims that work with and without `std`.
//!
//! `num_traits::Float` dispatches to the standard library when the `std`
//! feature is active and to `libm` otherwise, so routing every
//! transcendental call through this module keeps the crate `no_std`-clean
//! without `cfg` noise at call sites.

#![allow(dead_code)]

use num_traits::Float;

#[inline(always)]
pub fn sqrt(x: f64) -> f64 {
    Float::sqrt(x)
}

#[inline(always)]
pub fn abs(x: f64) -> f64 {
    Float::abs(x)
}

#[inline(always)]
pub fn sin(x: f64) -> f64 {
    Float::sin(x)
}

#[inline(always)]
pub fn cos(x: f64) -> f64 {
    Float::cos(x)
}

#[inline(always)]
pub fn exp(x: f64) -> f64 {
    Float::exp(x)
}

#[inline(always)]
pub fn ln(x: f64) -> f64 {
    Float::ln(x)
}

#[inline(always)]
pub fn log2(x: f64) -> f64 {
    Float::log2(x)
}

#[inline(always)]
pub fn hypot(x: f64, y: f64) -> f64 {
    Float::hypot(x, y)
}

#[inline(always)]
pub fn powi(x: f64, k: i32) -> f64 {
    Float::powi(x, k)
}

#[inline(always)]
pub fn max(x: f64, y: f64) -> f64 {
    Float::max(x, y)
}

#[inline(always)]
pub fn min(x: f64, y: f64) -> f64 {
    Float::min(x, y)
}
