//! Thin wrappers over `libm` so the crate builds without `std` and produces
//! identical bit patterns under both configurations.

#![allow(dead_code)]

#[inline(always)]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline(always)]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline(always)]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline(always)]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline(always)]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline(always)]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline(always)]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline(always)]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline(always)]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline(always)]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline(always)]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

/// cot(x) = cos(x)/sin(x); caller guarantees sin(x) != 0.
#[inline(always)]
pub fn cot(x: f64) -> f64 {
    let (s, c) = libm::sincos(x);
    c / s
}

/// csc^2(x) = 1/sin^2(x); caller guarantees sin(x) != 0.
#[inline(always)]
pub fn csc2(x: f64) -> f64 {
    let s = libm::sin(x);
    1.0 / (s * s)
}
