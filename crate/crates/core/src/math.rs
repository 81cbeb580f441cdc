//! Scalar math routed through `libm` so the crate builds without `std` and
//! produces identical values on every platform.

pub(crate) use libm::{cos, erf, exp, fabs, log as ln, sin, sqrt};

pub(crate) const SQRT_2: f64 = core::f64::consts::SQRT_2;
pub(crate) const TAU: f64 = core::f64::consts::TAU;

/// Standard normal density.
pub(crate) fn norm_pdf(z: f64) -> f64 {
    exp(-0.5 * z * z) / sqrt(TAU)
}

/// Standard normal cumulative distribution function.
pub(crate) fn norm_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / SQRT_2))
}

/// Euclidean norm of a slice.
pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum::<f64>())
}

/// Max-absolute-value norm of a slice.
pub(crate) fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max(fabs(x)))
}
