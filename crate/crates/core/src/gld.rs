//! Type I generalized logistic distribution.
//!
//! With z = (x − θ)/σ the density is
//!
//! ```text
//! f(x) = (α/σ) e^{−z} / (1 + e^{−z})^{α+1},     F(x) = (1 + e^{−z})^{−α}
//! ```
//!
//! α > 1 skews right, α < 1 skews left and α = 1 is the logistic. All
//! evaluations go through log space with a stable softplus, so they stay
//! finite far into the tails.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::math::{exp, exp_m1, ln, powf, softplus, sqrt};
use crate::optim::{Bfgs, Stop};
use crate::specfun::{digamma_unchecked, tetragamma_unchecked, trigamma_unchecked};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GldError {
    #[error("invalid GLD parameters (theta={theta}, sigma={sigma}, alpha={alpha}): need finite theta, sigma > 0, alpha > 0")]
    InvalidParams { theta: f64, sigma: f64, alpha: f64 },
    #[error("probability {0} is outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("data contain non-finite values")]
    NonFiniteData,
    #[error("sample variance is zero")]
    ZeroVariance,
    #[error("sample skewness {skewness} is outside the attainable GLD range ({lower}, {upper})")]
    SkewnessOutOfRange { skewness: f64, lower: f64, upper: f64 },
}

/// Location θ, scale σ and shape α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GldParams {
    theta: f64,
    sigma: f64,
    alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GldMoments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collapse {
    None,
    AlphaToInfinity,
    AlphaToZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitStatus {
    pub converged: bool,
    pub collapse: Collapse,
    pub iterations: usize,
    pub final_log_likelihood: f64,
}

/// Log density of the standardized variable: ln α − z − (α+1)·ln(1 + e^{−z}).
/// The −ln σ term is the caller's.
#[inline(always)]
pub(crate) fn standardized_log_density(z: f64, alpha_ln: f64, alpha: f64) -> f64 {
    alpha_ln - z - (alpha + 1.0) * softplus(-z)
}

impl GldParams {
    pub fn new(theta: f64, sigma: f64, alpha: f64) -> Result<Self, GldError> {
        if theta.is_finite() && sigma.is_finite() && alpha.is_finite() && sigma > 0.0 && alpha > 0.0 {
            Ok(Self { theta, sigma, alpha })
        } else {
            Err(GldError::InvalidParams { theta, sigma, alpha })
        }
    }

    /// The standard logistic distribution (θ = 0, σ = α = 1).
    pub fn standard() -> Self {
        Self { theta: 0.0, sigma: 1.0, alpha: 1.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn pdf(&self, x: f64) -> f64 {
        exp(self.log_pdf(x))
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.theta) / self.sigma;
        standardized_log_density(z, ln(self.alpha), self.alpha) - ln(self.sigma)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = (x - self.theta) / self.sigma;
        exp(-self.alpha * softplus(-z))
    }

    /// Inverse CDF: θ − σ·ln(prob^{−1/α} − 1).
    pub fn quantile(&self, prob: f64) -> Result<f64, GldError> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(GldError::ProbabilityOutOfRange(prob));
        }
        Ok(self.quantile_unchecked(prob))
    }

    fn quantile_unchecked(&self, prob: f64) -> f64 {
        // prob^{-1/α} − 1 = expm1(−ln(prob)/α) keeps precision for prob near 1
        self.theta - self.sigma * ln(exp_m1(-ln(prob) / self.alpha))
    }

    /// One draw by inverse transform.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return self.quantile_unchecked(u);
            }
        }
    }

    /// `n` draws from a ChaCha8 stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    /// Mean, variance and standardized skewness.
    ///
    /// The skewness denominator uses the exponent 3/2, which makes it the
    /// scale-free third standardized moment.
    pub fn moments(&self) -> GldMoments {
        let a = self.alpha;
        let tri = trigamma_unchecked(1.0) + trigamma_unchecked(a);
        GldMoments {
            mean: self.theta + self.sigma * (digamma_unchecked(a) - digamma_unchecked(1.0)),
            variance: self.sigma * self.sigma * tri,
            skewness: shape_skewness(a),
        }
    }

    pub fn log_likelihood(&self, data: &[f64]) -> f64 {
        let (a_ln, s_ln) = (ln(self.alpha), ln(self.sigma));
        data.iter().map(|&x| standardized_log_density((x - self.theta) / self.sigma, a_ln, self.alpha) - s_ln).sum()
    }

    /// Gradient of the log-likelihood with respect to (θ, ln σ, ln α).
    pub fn log_likelihood_gradient(&self, data: &[f64]) -> [f64; 3] {
        let (t, s, a) = (self.theta, self.sigma, self.alpha);
        let mut g = [0.0; 3];
        for &x in data {
            let z = (x - t) / s;
            let (p, l) = logistic_terms(z);
            let d = -1.0 + (a + 1.0) * p;
            g[0] += -d / s;
            g[1] += -1.0 - z * d;
            g[2] += 1.0 - a * l;
        }
        g
    }

    /// Hessian of the log-likelihood in (θ, ln σ, ln α), row-major.
    pub fn log_likelihood_hessian(&self, data: &[f64]) -> [f64; 9] {
        let (t, s, a) = (self.theta, self.sigma, self.alpha);
        let mut h = [0.0; 9];
        for &x in data {
            let z = (x - t) / s;
            let (p, l) = logistic_terms(z);
            let d = -1.0 + (a + 1.0) * p;
            let e = -(a + 1.0) * p * (1.0 - p);
            let tt = e / (s * s);
            let tr = (d + e * z) / s;
            let rr = z * d + z * z * e;
            let ta = -a * p / s;
            let ra = -z * a * p;
            let aa = -a * l;
            h[0] += tt;
            h[1] += tr;
            h[2] += ta;
            h[4] += rr;
            h[5] += ra;
            h[8] += aa;
        }
        h[3] = h[1];
        h[6] = h[2];
        h[7] = h[5];
        h
    }
}

/// (1/(1 + e^{z}), ln(1 + e^{−z})) evaluated without overflow.
#[inline]
fn logistic_terms(z: f64) -> (f64, f64) {
    let p = if z >= 0.0 {
        let e = exp(-z);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + exp(z))
    };
    (p, softplus(-z))
}

/// Standardized skewness of a GLD with shape α; depends on α only.
pub fn shape_skewness(alpha: f64) -> f64 {
    let tri = trigamma_unchecked(1.0) + trigamma_unchecked(alpha);
    (tetragamma_unchecked(alpha) - tetragamma_unchecked(1.0)) / powf(tri, 1.5)
}

/// Shape values searched by the method-of-moments root finder.
pub const SHAPE_SEARCH_RANGE: (f64, f64) = (1e-6, 1e6);

struct SampleMoments {
    mean: f64,
    variance: f64,
    skewness: f64,
}

// Unbiased variance; skewness is m3 / m2^{3/2} with biased central moments.
fn sample_moments(data: &[f64]) -> SampleMoments {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &x in data {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    let variance = m2 / (n - 1.0);
    let (m2, m3) = (m2 / n, m3 / n);
    let skewness = if m2 > 0.0 { m3 / powf(m2, 1.5) } else { 0.0 };
    SampleMoments { mean, variance, skewness }
}

fn check_data(data: &[f64], needed: usize) -> Result<(), GldError> {
    if data.len() < needed {
        return Err(GldError::TooFewObservations { needed, got: data.len() });
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(GldError::NonFiniteData);
    }
    Ok(())
}

/// Method-of-moments estimate: α from the skewness equation by bisection on
/// ln α, then σ from the variance and θ from the mean.
pub fn mom_estimate(data: &[f64]) -> Result<GldParams, GldError> {
    check_data(data, 10)?;
    let m = sample_moments(data);
    if m.variance.is_nan() || m.variance <= 0.0 {
        return Err(GldError::ZeroVariance);
    }
    let alpha = solve_shape_for_skewness(m.skewness)?;
    let sigma = sqrt(m.variance / (trigamma_unchecked(1.0) + trigamma_unchecked(alpha)));
    let theta = m.mean - sigma * (digamma_unchecked(alpha) - digamma_unchecked(1.0));
    GldParams::new(theta, sigma, alpha)
}

/// Inverts [`shape_skewness`], which is increasing in α.
pub fn solve_shape_for_skewness(skewness: f64) -> Result<f64, GldError> {
    let (lo_a, hi_a) = SHAPE_SEARCH_RANGE;
    let (lower, upper) = (shape_skewness(lo_a), shape_skewness(hi_a));
    if !(skewness > lower && skewness < upper) {
        return Err(GldError::SkewnessOutOfRange { skewness, lower, upper });
    }
    if skewness == 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (ln(lo_a), ln(hi_a));
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if shape_skewness(exp(mid)) < skewness {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(exp(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop once the per-observation gradient in (θ/σ, ln σ, ln α) is
    /// smaller than this.
    pub gradient_tolerance: f64,
    pub alpha_upper: f64,
    pub alpha_lower: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iterations: 500, gradient_tolerance: 1e-8, alpha_upper: 1e6, alpha_lower: 1e-6 }
    }
}

/// Starting point used when none is supplied: the method-of-moments estimate
/// when it exists, else (median, 1.81·MAD, 1).
pub fn default_init(data: &[f64]) -> Result<GldParams, GldError> {
    if let Ok(p) = mom_estimate(data) {
        return Ok(p);
    }
    let median = median(data);
    let deviations: Vec<f64> = data.iter().map(|x| (x - median).abs()).collect();
    let mad = self::median(&deviations);
    let sigma = if mad > 0.0 { 1.81 * mad } else { 1.0 };
    GldParams::new(median, sigma, 1.0)
}

fn median(data: &[f64]) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Maximum-likelihood fit by BFGS on (θ/σ₀, ln σ, ln α).
pub fn mle_fit(data: &[f64], init: Option<GldParams>) -> Result<(GldParams, FitStatus), GldError> {
    mle_fit_with(data, init, &MleOptions::default())
}

pub fn mle_fit_with(data: &[f64], init: Option<GldParams>, options: &MleOptions) -> Result<(GldParams, FitStatus), GldError> {
    check_data(data, 10)?;
    let init = match init {
        Some(p) => p,
        None => default_init(data)?,
    };
    let n = data.len() as f64;
    let sigma0 = init.sigma;
    let unpack = |u: &[f64]| GldParams { theta: u[0] * sigma0, sigma: exp(u[1]), alpha: exp(u[2]) };

    let eval = |u: &[f64]| {
        let p = unpack(u);
        if !(p.sigma > 0.0 && p.alpha > 0.0 && p.sigma.is_finite() && p.alpha.is_finite()) {
            return None;
        }
        let value = -p.log_likelihood(data) / n;
        if !value.is_finite() {
            return None;
        }
        let g = p.log_likelihood_gradient(data);
        Some((value, alloc::vec![-g[0] * sigma0 / n, -g[1] / n, -g[2] / n]))
    };
    let norm = |u: &[f64], g: &[f64]| {
        let scale = exp(u[1]) / sigma0;
        sqrt(g[0] * scale * g[0] * scale + g[1] * g[1] + g[2] * g[2])
    };
    let mut collapse = Collapse::None;
    let abort = |u: &[f64]| {
        let a = exp(u[2]);
        if a > options.alpha_upper {
            collapse = Collapse::AlphaToInfinity;
        } else if a < options.alpha_lower {
            collapse = Collapse::AlphaToZero;
        }
        collapse != Collapse::None
    };

    let bfgs = Bfgs { max_iterations: options.max_iterations, gradient_tolerance: options.gradient_tolerance, max_step: 2.0 };
    let u0 = alloc::vec![init.theta / sigma0, ln(init.sigma), ln(init.alpha)];
    let out = bfgs.minimize(u0, eval, norm, abort);
    let mut params = unpack(&out.x);
    let mut iterations = out.iterations;
    let mut grad_norm = norm(&out.x, &out.gradient);

    if collapse == Collapse::None && out.stop != Stop::Aborted && grad_norm >= options.gradient_tolerance {
        // BFGS can stall on rounding noise near the optimum; finish with Newton.
        let (p, steps, g) = newton_polish(data, params, options.gradient_tolerance);
        params = p;
        iterations += steps;
        grad_norm = g;
    }

    let status = FitStatus {
        converged: collapse == Collapse::None && grad_norm < options.gradient_tolerance,
        collapse,
        iterations,
        final_log_likelihood: params.log_likelihood(data),
    };
    Ok((params, status))
}

fn scaled_gradient_norm(p: &GldParams, data: &[f64]) -> f64 {
    let n = data.len() as f64;
    let g = p.log_likelihood_gradient(data);
    let scaled = [g[0] * p.sigma / n, g[1] / n, g[2] / n];
    sqrt(scaled.iter().map(|v| v * v).sum())
}

fn newton_polish(data: &[f64], start: GldParams, tolerance: f64) -> (GldParams, usize, f64) {
    let mut p = start;
    let mut best = scaled_gradient_norm(&p, data);
    let mut steps = 0;
    while steps < 20 && best >= tolerance {
        let g = p.log_likelihood_gradient(data);
        let h = p.log_likelihood_hessian(data);
        let hm = nalgebra::Matrix3::from_row_slice(&h);
        let Some(chol) = (-hm).cholesky() else { break };
        let delta = chol.solve(&nalgebra::Vector3::new(g[0], g[1], g[2]));
        let Ok(next) = GldParams::new(p.theta + delta[0], p.sigma * exp(delta[1]), p.alpha * exp(delta[2])) else {
            break;
        };
        let norm = scaled_gradient_norm(&next, data);
        steps += 1;
        if norm.is_nan() || norm >= best {
            break;
        }
        p = next;
        best = norm;
    }
    (p, steps, best)
}

/// Relative residual of the shape stationarity identity
/// α̂ = n / Σ ln(1 + e^{−(xᵢ−θ̂)/σ̂}).
pub fn shape_identity_residual(p: &GldParams, data: &[f64]) -> f64 {
    let s: f64 = data.iter().map(|&x| softplus(-(x - p.theta) / p.sigma)).sum();
    let implied = data.len() as f64 / s;
    (p.alpha - implied).abs() / implied
}
