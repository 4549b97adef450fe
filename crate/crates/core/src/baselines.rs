//! Comparison models: ordinary least squares with a fixed variance (SLR) and
//! Bayesian normal regression with a log-variance link (BNR).

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fit::{fit_target, BayesFit, FitError, SamplerSettings};
use crate::linalg;
use crate::math::{exp, ln, sqrt};
use crate::mcmc::{coefficient_names, ols_start, McmcError, Target};
use crate::regression::Dataset;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SlrError {
    #[error("normal equations are singular")]
    RankDeficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlrFit {
    pub beta: Vec<f64>,
    pub rss: f64,
    /// RSS / (n − p).
    pub residual_variance: f64,
    pub standard_errors: Vec<f64>,
}

/// Least squares through the normal equations, with the homoscedastic
/// standard errors √(s² · [(XᵀX)⁻¹]ⱼⱼ).
pub fn slr_fit(ds: &Dataset) -> Result<SlrFit, SlrError> {
    let (n, p) = (ds.n(), ds.p());
    let fit = linalg::least_squares(ds.design(), n, p, ds.response()).ok_or(SlrError::RankDeficient)?;
    let rss = fit.rss;
    let residual_variance = rss / (n - p) as f64;
    let standard_errors = (0..p).map(|j| sqrt(residual_variance * fit.gram_inverse[(j, j)])).collect();
    Ok(SlrFit { beta: fit.beta, rss, residual_variance, standard_errors })
}

/// Σᵢ [−½ ln 2π − ½ xᵢᵀβ′ − (yᵢ − xᵢᵀβ)² / (2 exp(xᵢᵀβ′))] over flat `[β, β′]`.
///
/// Returns −∞ when any input or the result is not finite.
pub fn bnr_log_likelihood_flat(ds: &Dataset, params: &[f64]) -> f64 {
    let p = ds.p();
    if params.len() != 2 * p || params.iter().any(|v| !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let (beta, beta_prime) = params.split_at(p);
    let mut total = 0.0;
    for (row, &y) in ds.design().chunks_exact(p).zip(ds.response()) {
        let mut eta = 0.0;
        let mut log_var = 0.0;
        for j in 0..p {
            eta += row[j] * beta[j];
            log_var += row[j] * beta_prime[j];
        }
        let r = y - eta;
        total += -HALF_LN_2PI - 0.5 * log_var - r * r / (2.0 * exp(log_var));
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

pub fn bnr_log_likelihood(ds: &Dataset, beta: &[f64], beta_prime: &[f64]) -> f64 {
    let mut flat = Vec::with_capacity(beta.len() + beta_prime.len());
    flat.extend_from_slice(beta);
    flat.extend_from_slice(beta_prime);
    bnr_log_likelihood_flat(ds, &flat)
}

/// Posterior of the normal regression over `[β, β′]`.
#[derive(Debug, Clone, Copy)]
pub struct BnrModel<'a> {
    ds: &'a Dataset,
}

impl<'a> BnrModel<'a> {
    pub fn new(ds: &'a Dataset) -> Self {
        Self { ds }
    }
}

impl Target for BnrModel<'_> {
    fn dim(&self) -> usize {
        2 * self.ds.p()
    }

    fn shape_index(&self) -> Option<usize> {
        None
    }

    fn param_names(&self) -> Vec<String> {
        coefficient_names(self.ds.p())
    }

    fn tag(&self) -> &str {
        "bnr"
    }

    fn log_likelihood(&self, params: &[f64]) -> f64 {
        bnr_log_likelihood_flat(self.ds, params)
    }

    /// β from OLS, β′₀ = ln(residual variance), other β′ = 0.
    fn initial_point(&self) -> Result<Vec<f64>, McmcError> {
        let (beta, sd) = ols_start(self.ds)?;
        let mut v = beta;
        v.push(2.0 * ln(sd));
        v.extend(core::iter::repeat_n(0.0, self.ds.p() - 1));
        Ok(v)
    }
}

/// Runs the sampler on the BNR posterior and summarizes it.
pub fn bnr_fit(ds: &Dataset, settings: &SamplerSettings) -> Result<BayesFit, FitError> {
    fit_target(&BnrModel::new(ds), ds, bnr_log_likelihood_flat, settings)
}
