//! Log-gamma and the first three polygamma functions on the positive reals.
//!
//! Every function shifts its argument upward with the standard recurrence
//! until it is at least [`ASYMPTOTIC_FROM`] and then sums the asymptotic
//! Bernoulli-number series.

use crate::math::ln;
use core::f64::consts::PI;

/// Arguments at or above this value go straight to the asymptotic series.
pub const ASYMPTOTIC_FROM: f64 = 6.0;

// Stirling shifts further; its first neglected term must stay below 1e-16
// for the log-gamma error budget.
const STIRLING_FROM: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SpecFunError {
    #[error("{function} is only defined for finite x > 0, got {x}")]
    Domain { function: &'static str, x: f64 },
}

fn check(function: &'static str, x: f64) -> Result<(), SpecFunError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(SpecFunError::Domain { function, x })
    }
}

/// ln Γ(x) for finite x > 0.
pub fn log_gamma(x: f64) -> Result<f64, SpecFunError> {
    check("log_gamma", x)?;
    Ok(log_gamma_unchecked(x))
}

/// ψ(x) = d/dx ln Γ(x).
pub fn digamma(x: f64) -> Result<f64, SpecFunError> {
    check("digamma", x)?;
    Ok(digamma_unchecked(x))
}

/// ψ′(x).
pub fn trigamma(x: f64) -> Result<f64, SpecFunError> {
    check("trigamma", x)?;
    Ok(trigamma_unchecked(x))
}

/// ψ″(x).
pub fn tetragamma(x: f64) -> Result<f64, SpecFunError> {
    check("tetragamma", x)?;
    Ok(tetragamma_unchecked(x))
}

// B_{2k} / (2k (2k-1)), k = 1..8
const STIRLING: [f64; 8] =
    [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360_360.0, 1.0 / 156.0, -3617.0 / 122_400.0];

// B_{2k} / (2k), k = 1..7
const DIGAMMA: [f64; 7] = [1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0, 1.0 / 132.0, -691.0 / 32_760.0, 1.0 / 12.0];

// B_{2k}, k = 1..8
const TRIGAMMA: [f64; 8] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];

// (2k + 1) B_{2k}, k = 1..8
const TETRAGAMMA: [f64; 8] = [1.0 / 2.0, -1.0 / 6.0, 1.0 / 6.0, -3.0 / 10.0, 5.0 / 6.0, -691.0 / 210.0, 35.0 / 2.0, -3617.0 / 30.0];

/// Evaluates Σ c_k t^k for k = 1..len with t = 1/x², Horner style.
#[inline]
fn series_in_inverse_square(coeffs: &[f64], inv_sq: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| (acc + c) * inv_sq)
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    let mut y = x;
    let mut product = 1.0;
    while y < STIRLING_FROM {
        product *= y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let tail = series_in_inverse_square(&STIRLING, inv * inv) * y;
    (y - 0.5) * ln(y) - y + 0.5 * ln(2.0 * PI) + tail - ln(product)
}

pub(crate) fn digamma_unchecked(x: f64) -> f64 {
    let mut y = x;
    let mut shift = 0.0;
    while y < ASYMPTOTIC_FROM {
        shift -= 1.0 / y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    shift + ln(y) - 0.5 * inv - series_in_inverse_square(&DIGAMMA, inv * inv)
}

pub(crate) fn trigamma_unchecked(x: f64) -> f64 {
    let mut y = x;
    let mut shift = 0.0;
    while y < ASYMPTOTIC_FROM {
        shift += 1.0 / (y * y);
        y += 1.0;
    }
    let inv = 1.0 / y;
    shift + inv + 0.5 * inv * inv + series_in_inverse_square(&TRIGAMMA, inv * inv) * inv
}

pub(crate) fn tetragamma_unchecked(x: f64) -> f64 {
    let mut y = x;
    let mut shift = 0.0;
    while y < ASYMPTOTIC_FROM {
        shift -= 2.0 / (y * y * y);
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    shift - inv2 - inv2 * inv - series_in_inverse_square(&TETRAGAMMA, inv2) * inv2
}

/// Log density of Gamma(shape, rate) at x; −∞ outside the support.
pub(crate) fn gamma_log_density(x: f64, shape: f64, rate: f64) -> f64 {
    if !(x > 0.0 && shape > 0.0 && rate > 0.0) || !x.is_finite() {
        return f64::NEG_INFINITY;
    }
    shape * ln(rate) - log_gamma_unchecked(shape) + (shape - 1.0) * ln(x) - rate * x
}

/// Log density of Normal(mean, variance) at x.
pub(crate) fn normal_log_density(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * ln(2.0 * PI * variance) - 0.5 * d * d / variance
}
