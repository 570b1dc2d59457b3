//! Normal-distribution helpers built on the libm error functions.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// Standard normal upper tail, `P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `P(a < N(mean, sigma^2) < b)`.
///
/// When both endpoints sit in the same tail the difference is taken between
/// complementary error functions so that far-tail intervals keep their
/// relative precision.
pub fn normal_interval(a: f64, b: f64, mean: f64, sigma: f64) -> f64 {
    let u = (a - mean) / (sigma * SQRT_2);
    let v = (b - mean) / (sigma * SQRT_2);
    if u >= 0.0 {
        0.5 * (libm::erfc(u) - libm::erfc(v))
    } else if v <= 0.0 {
        0.5 * (libm::erfc(-v) - libm::erfc(-u))
    } else {
        0.5 * (libm::erf(v) - libm::erf(u))
    }
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}
