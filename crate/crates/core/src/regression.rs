//! Generalized logistic regression with two linear predictors.
//!
//! Observation i has location θᵢ = xᵢᵀβ (identity link) and scale
//! σᵢ = exp(xᵢᵀβ′) (log link), with a shared shape α. β′ therefore lives on
//! the log-σ scale: β′₀ is the log baseline scale and β′₁ the scedasticity
//! slope.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::digest::Digester;
use crate::gld::standardized_log_density;
use crate::linalg;
use crate::math::{exp, ln, softplus};

/// Log-scale linear predictors are clamped to ±this before exponentiation.
pub const LOG_SCALE_CLAMP: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("dataset has no rows")]
    Empty,
    #[error("design has {got} entries, expected {n} x {p}")]
    Shape { n: usize, p: usize, got: usize },
    #[error("response has {got} entries, expected {expected}")]
    ResponseLength { expected: usize, got: usize },
    #[error("first design column must be the intercept (row {row} has {value})")]
    MissingIntercept { row: usize, value: f64 },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("need at least p + 1 = {needed} rows, got {n}")]
    TooFewRows { needed: usize, n: usize },
    #[error("design matrix has rank {rank} < {p} columns")]
    RankDeficient { rank: usize, p: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegressionError {
    #[error("parameter vector has {got} coefficients per predictor, design has {expected} columns")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Design matrix (row-major, intercept first) and response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    p: usize,
    design: Vec<f64>,
    response: Vec<f64>,
    digest: String,
}

impl Dataset {
    /// Validates shape, the intercept column, finiteness and full column rank.
    pub fn new(design: Vec<f64>, n: usize, p: usize, response: Vec<f64>) -> Result<Self, DatasetError> {
        if n == 0 || p == 0 {
            return Err(DatasetError::Empty);
        }
        if design.len() != n * p {
            return Err(DatasetError::Shape { n, p, got: design.len() });
        }
        if response.len() != n {
            return Err(DatasetError::ResponseLength { expected: n, got: response.len() });
        }
        for (i, row) in design.chunks_exact(p).enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { row: i, column: j });
            }
            if row[0] != 1.0 {
                return Err(DatasetError::MissingIntercept { row: i, value: row[0] });
            }
            if !response[i].is_finite() {
                return Err(DatasetError::NonFinite { row: i, column: p });
            }
        }
        if n < p + 1 {
            return Err(DatasetError::TooFewRows { needed: p + 1, n });
        }
        let rank = linalg::column_rank(&design, n, p, 1e-10);
        if rank < p {
            return Err(DatasetError::RankDeficient { rank, p });
        }
        let digest = Digester::new().f64s(&design).f64s(&response).finish();
        Ok(Self { n, p, design, response, digest })
    }

    /// Builds the design `[1, x₁, …, x_k]` from covariate columns.
    pub fn from_columns(covariates: &[Vec<f64>], response: Vec<f64>) -> Result<Self, DatasetError> {
        let n = response.len();
        let p = covariates.len() + 1;
        if let Some(c) = covariates.iter().find(|c| c.len() != n) {
            return Err(DatasetError::ResponseLength { expected: c.len(), got: n });
        }
        let mut design = Vec::with_capacity(n * p);
        for i in 0..n {
            design.push(1.0);
            design.extend(covariates.iter().map(|c| c[i]));
        }
        Self::new(design, n, p, response)
    }

    /// Intercept plus one covariate.
    pub fn simple(x: &[f64], y: &[f64]) -> Result<Self, DatasetError> {
        Self::from_columns(&[x.to_vec()], y.to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn design(&self) -> &[f64] {
        &self.design
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.design[i * self.p..(i + 1) * self.p]
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// Column `j` of the design.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.design.chunks_exact(self.p).map(|r| r[j]).collect()
    }

    /// Content digest of design and response.
    pub fn digest(&self) -> &str {
        &self.digest
    }
}

/// β (location coefficients), β′ (log-scale coefficients) and α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub beta: Vec<f64>,
    pub beta_prime: Vec<f64>,
    pub alpha: f64,
}

impl ParamVector {
    pub fn new(beta: Vec<f64>, beta_prime: Vec<f64>, alpha: f64) -> Self {
        Self { beta, beta_prime, alpha }
    }

    /// α > 0, equal predictor lengths and every entry finite.
    pub fn is_valid(&self) -> bool {
        self.alpha > 0.0
            && self.alpha.is_finite()
            && self.beta.len() == self.beta_prime.len()
            && self.beta.iter().chain(&self.beta_prime).all(|v| v.is_finite())
    }

    /// `[β₀…β_p, β′₀…β′_p, α]`, the layout used by the sampler.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.beta.len() + 1);
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.beta_prime);
        v.push(self.alpha);
        v
    }

    pub fn from_flat(p: usize, flat: &[f64]) -> Self {
        Self { beta: flat[..p].to_vec(), beta_prime: flat[p..2 * p].to_vec(), alpha: flat[2 * p] }
    }

    fn check(&self, ds: &Dataset) -> Result<(), RegressionError> {
        for len in [self.beta.len(), self.beta_prime.len()] {
            if len != ds.p {
                return Err(RegressionError::DimensionMismatch { expected: ds.p, got: len });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictors {
    /// ηᵢ = xᵢᵀβ, in response units.
    pub eta: Vec<f64>,
    /// η′ᵢ = xᵢᵀβ′, on the log-σ scale.
    pub eta_prime: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalePrediction {
    pub sigma: Vec<f64>,
    /// How many η′ᵢ had to be clamped to ±[`LOG_SCALE_CLAMP`].
    pub clamped: usize,
}

#[inline(always)]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline(always)]
fn clamp_log_scale(eta_prime: f64) -> f64 {
    eta_prime.clamp(-LOG_SCALE_CLAMP, LOG_SCALE_CLAMP)
}

pub fn linear_predictors(ds: &Dataset, psi: &ParamVector) -> Result<LinearPredictors, RegressionError> {
    psi.check(ds)?;
    let rows = ds.design.chunks_exact(ds.p);
    Ok(LinearPredictors {
        eta: rows.clone().map(|r| dot(r, &psi.beta)).collect(),
        eta_prime: rows.map(|r| dot(r, &psi.beta_prime)).collect(),
    })
}

/// θᵢ = xᵢᵀβ.
pub fn predict_location(ds: &Dataset, psi: &ParamVector) -> Result<Vec<f64>, RegressionError> {
    psi.check(ds)?;
    Ok(ds.design.chunks_exact(ds.p).map(|r| dot(r, &psi.beta)).collect())
}

/// σᵢ = exp(xᵢᵀβ′).
pub fn predict_scale(ds: &Dataset, psi: &ParamVector) -> Result<ScalePrediction, RegressionError> {
    psi.check(ds)?;
    let mut clamped = 0;
    let sigma = ds
        .design
        .chunks_exact(ds.p)
        .map(|r| {
            let e = dot(r, &psi.beta_prime);
            let c = clamp_log_scale(e);
            if c != e {
                clamped += 1;
            }
            exp(c)
        })
        .collect();
    Ok(ScalePrediction { sigma, clamped })
}

/// Σᵢ [ln α − ln σᵢ − zᵢ − (α+1) ln(1 + e^{−zᵢ})], zᵢ = (yᵢ − θᵢ)/σᵢ.
///
/// Invalid parameters (α ≤ 0, non-finite entries, wrong lengths) give −∞.
pub fn log_likelihood(ds: &Dataset, psi: &ParamVector) -> f64 {
    if psi.beta.len() != ds.p || psi.beta_prime.len() != ds.p {
        return f64::NEG_INFINITY;
    }
    log_likelihood_flat(ds, &psi.to_flat())
}

/// [`log_likelihood`] on the flat `[β, β′, α]` layout; allocation free.
pub fn log_likelihood_flat(ds: &Dataset, params: &[f64]) -> f64 {
    let p = ds.p;
    if params.len() != 2 * p + 1 {
        return f64::NEG_INFINITY;
    }
    let (beta, rest) = params.split_at(p);
    let (beta_prime, alpha) = (&rest[..p], rest[p]);
    if !(alpha > 0.0 && alpha.is_finite()) || !params.iter().all(|v| v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let alpha_ln = ln(alpha);
    let mut total = 0.0;
    for (row, &y) in ds.design.chunks_exact(p).zip(&ds.response) {
        let log_sigma = clamp_log_scale(dot(row, beta_prime));
        let z = (y - dot(row, beta)) * exp(-log_sigma);
        total += standardized_log_density(z, alpha_ln, alpha) - log_sigma;
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

/// Gradient of [`log_likelihood`] with respect to `[β, β′, ln α]`.
pub fn log_likelihood_gradient(ds: &Dataset, psi: &ParamVector) -> Result<Vec<f64>, RegressionError> {
    psi.check(ds)?;
    let p = ds.p;
    let a = psi.alpha;
    let mut g = alloc::vec![0.0; 2 * p + 1];
    for (row, &y) in ds.design.chunks_exact(p).zip(&ds.response) {
        let log_sigma = clamp_log_scale(dot(row, &psi.beta_prime));
        let sigma = exp(log_sigma);
        let z = (y - dot(row, &psi.beta)) / sigma;
        // 1 / (1 + e^{z})
        let s = if z >= 0.0 {
            let e = exp(-z);
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + exp(z))
        };
        let d_theta = (1.0 - (a + 1.0) * s) / sigma;
        let d_log_sigma = -1.0 + z * (1.0 - (a + 1.0) * s);
        for j in 0..p {
            g[j] += d_theta * row[j];
            g[p + j] += d_log_sigma * row[j];
        }
        g[2 * p] += 1.0 - a * softplus(-z);
    }
    Ok(g)
}

/// Scale-standardized residuals (yᵢ − θᵢ)/σᵢ.
pub fn residuals(ds: &Dataset, psi: &ParamVector) -> Result<Vec<f64>, RegressionError> {
    let theta = predict_location(ds, psi)?;
    let sigma = predict_scale(ds, psi)?.sigma;
    Ok(ds.response.iter().zip(theta).zip(sigma).map(|((y, t), s)| (y - t) / s).collect())
}
