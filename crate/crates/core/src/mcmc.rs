//! Blockwise random-walk Metropolis-Hastings.
//!
//! Each sweep updates one parameter at a time. Coefficients get a normal
//! random-walk proposal; the shape parameter gets a gamma proposal with mean
//! equal to the current value and a fixed variance, plus the matching
//! Hastings correction. Step sizes may adapt toward a target acceptance rate
//! during burn-in and are frozen afterwards.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::digest::Digester;
use crate::linalg;
use crate::math::{exp, ln, sqrt};
use crate::regression::{log_likelihood_flat, Dataset, ParamVector};
use crate::specfun::{gamma_log_density, normal_log_density};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McmcError {
    #[error("burn-in ({burn_in}) must be smaller than the number of iterations ({n_iter})")]
    BurnIn { burn_in: usize, n_iter: usize },
    #[error("prior settings must be positive: {0:?}")]
    Prior(PriorSpec),
    #[error("proposal has {got} coefficient step sizes, model has {expected} coefficients")]
    ProposalLength { expected: usize, got: usize },
    #[error("proposal step sizes, variance and adaptation settings must be positive")]
    Proposal,
    #[error("starting point has log posterior {0}")]
    NonFiniteStart(f64),
    #[error("starting point has {got} entries, model has {expected}")]
    StartLength { expected: usize, got: usize },
    #[error("cannot build a starting point: {0}")]
    Initialization(String),
}

/// A log-likelihood over a flat parameter vector, sampled with independent
/// N(0, v) priors on every coefficient and a Gamma(a, b) prior on the
/// optional shape parameter.
pub trait Target {
    fn dim(&self) -> usize;
    /// Index of the positive shape parameter, if the model has one.
    fn shape_index(&self) -> Option<usize>;
    fn param_names(&self) -> Vec<String>;
    /// Likelihood tag folded into the configuration digest.
    fn tag(&self) -> &str;
    /// −∞ for parameters outside the support.
    fn log_likelihood(&self, params: &[f64]) -> f64;
    fn initial_point(&self) -> Result<Vec<f64>, McmcError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    /// Shared prior variance of every β and β′ entry.
    pub coef_variance: f64,
    pub alpha_shape: f64,
    pub alpha_rate: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { coef_variance: 1e4, alpha_shape: 1.0, alpha_rate: 1.0 }
    }
}

impl PriorSpec {
    fn validate(&self) -> Result<(), McmcError> {
        let ok = [self.coef_variance, self.alpha_shape, self.alpha_rate].iter().all(|v| *v > 0.0 && v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(McmcError::Prior(*self))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    /// Random-walk standard deviation per coefficient, in parameter order.
    pub coef_step_sd: Vec<f64>,
    pub alpha_proposal_variance: f64,
    pub adapt: bool,
    pub adapt_target_rate: f64,
    pub adapt_window: usize,
}

impl ProposalConfig {
    pub const DEFAULT_STEP: f64 = 0.1;
    pub const DEFAULT_ALPHA_VARIANCE: f64 = 0.1;

    /// Same step for every coefficient, adaptation on.
    pub fn uniform(n_coef: usize, step: f64, alpha_variance: f64) -> Self {
        Self {
            coef_step_sd: vec![step; n_coef],
            alpha_proposal_variance: alpha_variance,
            adapt: true,
            adapt_target_rate: 0.3,
            adapt_window: 200,
        }
    }

    /// Defaults sized for `target`.
    pub fn for_target<T: Target + ?Sized>(target: &T) -> Self {
        let n_coef = target.dim() - usize::from(target.shape_index().is_some());
        Self::uniform(n_coef, Self::DEFAULT_STEP, Self::DEFAULT_ALPHA_VARIANCE)
    }

    fn validate(&self, n_coef: usize) -> Result<(), McmcError> {
        if self.coef_step_sd.len() != n_coef {
            return Err(McmcError::ProposalLength { expected: n_coef, got: self.coef_step_sd.len() });
        }
        let steps_ok = self.coef_step_sd.iter().all(|s| *s > 0.0 && s.is_finite());
        let rate_ok = self.adapt_target_rate > 0.0 && self.adapt_target_rate < 1.0;
        if steps_ok && rate_ok && self.alpha_proposal_variance > 0.0 && self.adapt_window > 0 {
            Ok(())
        } else {
            Err(McmcError::Proposal)
        }
    }
}

/// Post-burn-in draws of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub names: Vec<String>,
    /// Row-major, one row of `names.len()` values per retained draw.
    pub draws: Vec<f64>,
    pub log_posterior: Vec<f64>,
    /// Post-burn-in acceptance fraction per parameter.
    pub acceptance: Vec<f64>,
    pub seed: u64,
    pub config_digest: String,
    pub initial: Vec<f64>,
    /// Step sizes in force after burn-in (coefficients, then shape variance).
    pub final_steps: Vec<f64>,
}

impl Chain {
    /// Wraps externally produced draws (row-major) for the diagnostics. The
    /// log-posterior trace is unknown and filled with NaN.
    pub fn from_draws(names: Vec<String>, draws: Vec<f64>) -> Self {
        let n = if names.is_empty() { 0 } else { draws.len() / names.len() };
        Self {
            acceptance: vec![f64::NAN; names.len()],
            names,
            draws,
            log_posterior: vec![f64::NAN; n],
            seed: 0,
            config_digest: String::new(),
            initial: Vec::new(),
            final_steps: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn n_draws(&self) -> usize {
        self.log_posterior.len()
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.draws[i * d..(i + 1) * d]
    }

    pub fn draws_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.dim())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws_iter().map(|r| r[j]).collect()
    }
}

/// A proposed value and ln q(current | candidate) − ln q(candidate | current).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub candidate: f64,
    pub log_q_ratio: f64,
}

/// Symmetric normal random walk.
pub fn propose_coef<R: Rng + ?Sized>(current: f64, step_sd: f64, rng: &mut R) -> Proposal {
    let z: f64 = StandardNormal.sample(rng);
    Proposal { candidate: current + step_sd * z, log_q_ratio: 0.0 }
}

/// Gamma kernel with mean `from` and variance `variance`: shape from²/v, rate from/v.
fn alpha_kernel(from: f64, variance: f64) -> (f64, f64) {
    (from * from / variance, from / variance)
}

/// Hastings correction for the gamma proposal.
pub fn alpha_log_q_ratio(current: f64, candidate: f64, variance: f64) -> f64 {
    let (a_rev, b_rev) = alpha_kernel(candidate, variance);
    let (a_fwd, b_fwd) = alpha_kernel(current, variance);
    gamma_log_density(current, a_rev, b_rev) - gamma_log_density(candidate, a_fwd, b_fwd)
}

/// Gamma proposal centred (in mean) on the current shape value.
pub fn propose_alpha<R: Rng + ?Sized>(current: f64, variance: f64, rng: &mut R) -> Proposal {
    let (shape, rate) = alpha_kernel(current, variance);
    let candidate = match Gamma::new(shape, 1.0 / rate) {
        Ok(g) => g.sample(rng),
        Err(_) => return Proposal { candidate: current, log_q_ratio: f64::NEG_INFINITY },
    };
    if !(candidate > 0.0 && candidate.is_finite()) {
        // an underflowed draw has zero density under the target; reject it
        return Proposal { candidate: current, log_q_ratio: f64::NEG_INFINITY };
    }
    Proposal { candidate, log_q_ratio: alpha_log_q_ratio(current, candidate, variance) }
}

fn prior_term(value: f64, is_shape: bool, prior: &PriorSpec) -> f64 {
    if is_shape {
        gamma_log_density(value, prior.alpha_shape, prior.alpha_rate)
    } else {
        normal_log_density(value, 0.0, prior.coef_variance)
    }
}

/// Independent priors over a flat parameter vector.
pub fn log_prior_flat(params: &[f64], shape_index: Option<usize>, prior: &PriorSpec) -> f64 {
    params.iter().enumerate().map(|(i, &v)| prior_term(v, Some(i) == shape_index, prior)).sum()
}

/// N(0, v) on each β and β′ entry plus Gamma(a₁, b₁) on α.
pub fn log_prior(psi: &ParamVector, prior: &PriorSpec) -> f64 {
    let coef: f64 = psi.beta.iter().chain(&psi.beta_prime).map(|&v| prior_term(v, false, prior)).sum();
    coef + prior_term(psi.alpha, true, prior)
}

/// Unnormalized log posterior of the regression model.
pub fn log_posterior(ds: &Dataset, psi: &ParamVector, prior: &PriorSpec) -> f64 {
    let lp = log_prior(psi, prior);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    log_likelihood_flat(ds, &psi.to_flat()) + lp
}

/// Metropolis acceptance: accept when u < exp(min(0, ln λ)). NaN rejects.
pub fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    let threshold = if log_ratio >= 0.0 { 1.0 } else { exp(log_ratio) };
    u < threshold
}

/// Current position of a chain with its cached log densities.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcState {
    pub params: Vec<f64>,
    pub log_likelihood: f64,
    pub log_prior: f64,
}

impl McmcState {
    pub fn new<T: Target + ?Sized>(target: &T, prior: &PriorSpec, params: Vec<f64>) -> Result<Self, McmcError> {
        if params.len() != target.dim() {
            return Err(McmcError::StartLength { expected: target.dim(), got: params.len() });
        }
        let log_prior = log_prior_flat(&params, target.shape_index(), prior);
        let log_likelihood = target.log_likelihood(&params);
        let lp = log_prior + log_likelihood;
        if !lp.is_finite() {
            return Err(McmcError::NonFiniteStart(lp));
        }
        Ok(Self { params, log_likelihood, log_prior })
    }

    pub fn log_posterior(&self) -> f64 {
        self.log_likelihood + self.log_prior
    }
}

/// Accept/reject one proposed value for parameter `index`.
pub fn update_block<T: Target + ?Sized, R: Rng + ?Sized>(
    target: &T,
    prior: &PriorSpec,
    state: &mut McmcState,
    index: usize,
    proposal: Proposal,
    rng: &mut R,
) -> bool {
    let is_shape = Some(index) == target.shape_index();
    let old = state.params[index];
    let old_term = prior_term(old, is_shape, prior);
    let new_term = prior_term(proposal.candidate, is_shape, prior);
    if new_term == f64::NEG_INFINITY || proposal.log_q_ratio == f64::NEG_INFINITY {
        // consume the uniform anyway so the random stream does not depend on rejections
        let _: f64 = rng.random();
        return false;
    }
    state.params[index] = proposal.candidate;
    let ll = target.log_likelihood(&state.params);
    let log_ratio = (ll - state.log_likelihood) + (new_term - old_term) + proposal.log_q_ratio;
    if ll != f64::NEG_INFINITY && accept(log_ratio, rng) {
        state.log_likelihood = ll;
        state.log_prior += new_term - old_term;
        true
    } else {
        state.params[index] = old;
        false
    }
}

/// One Metropolis-within-Gibbs sweep over every parameter in order.
///
/// `steps` holds the coefficient step sizes followed by the shape proposal
/// variance; `accepted[i]` records the outcome for parameter i.
pub fn mh_step<T: Target + ?Sized, R: Rng + ?Sized>(
    target: &T,
    prior: &PriorSpec,
    steps: &[f64],
    state: &mut McmcState,
    rng: &mut R,
    accepted: &mut [bool],
) {
    let shape = target.shape_index();
    let mut coef = 0;
    debug_assert_eq!(accepted.len(), state.params.len());
    for (i, hit) in accepted.iter_mut().enumerate() {
        let current = state.params[i];
        let proposal = if Some(i) == shape {
            propose_alpha(current, steps[steps.len() - 1], rng)
        } else {
            coef += 1;
            propose_coef(current, steps[coef - 1], rng)
        };
        *hit = update_block(target, prior, state, i, proposal, rng);
    }
}

/// Canonical text of everything that determines a chain besides its seed.
pub fn config_descriptor(tag: &str, prior: &PriorSpec, proposal: &ProposalConfig, n_iter: usize, burn_in: usize) -> String {
    format!(
        "likelihood={tag};prior={:?},{:?},{:?};steps={:?};alpha_var={:?};adapt={},{:?},{};n_iter={n_iter};burn_in={burn_in}",
        prior.coef_variance,
        prior.alpha_shape,
        prior.alpha_rate,
        proposal.coef_step_sd,
        proposal.alpha_proposal_variance,
        proposal.adapt,
        proposal.adapt_target_rate,
        proposal.adapt_window,
    )
}

pub fn config_digest(tag: &str, prior: &PriorSpec, proposal: &ProposalConfig, n_iter: usize, burn_in: usize) -> String {
    Digester::new().str(&config_descriptor(tag, prior, proposal, n_iter, burn_in)).finish()
}

fn chain_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs one chain of `n_iter` sweeps from `init`, keeping the draws after
/// `burn_in`.
pub fn run_chain<T: Target + ?Sized>(
    target: &T,
    prior: &PriorSpec,
    proposal: &ProposalConfig,
    n_iter: usize,
    burn_in: usize,
    seed: u64,
    init: &[f64],
) -> Result<Chain, McmcError> {
    if burn_in >= n_iter {
        return Err(McmcError::BurnIn { burn_in, n_iter });
    }
    prior.validate()?;
    let dim = target.dim();
    let shape = target.shape_index();
    let n_coef = dim - usize::from(shape.is_some());
    proposal.validate(n_coef)?;

    let mut state = McmcState::new(target, prior, init.to_vec())?;
    let mut rng = chain_rng(seed);
    let mut steps: Vec<f64> = proposal.coef_step_sd.clone();
    steps.push(proposal.alpha_proposal_variance);

    let kept = n_iter - burn_in;
    let mut draws = Vec::with_capacity(kept * dim);
    let mut trace = Vec::with_capacity(kept);
    let mut accepted = vec![false; dim];
    let mut window_hits = vec![0usize; dim];
    let mut kept_hits = vec![0usize; dim];
    let mut windows_done = 0usize;

    for t in 0..n_iter {
        mh_step(target, prior, &steps, &mut state, &mut rng, &mut accepted);
        if t < burn_in {
            if proposal.adapt {
                for (h, &a) in window_hits.iter_mut().zip(&accepted) {
                    *h += usize::from(a);
                }
                if (t + 1) % proposal.adapt_window == 0 {
                    windows_done += 1;
                    adapt_steps(&mut steps, &window_hits, shape, proposal, windows_done);
                    window_hits.iter_mut().for_each(|h| *h = 0);
                }
            }
        } else {
            for (h, &a) in kept_hits.iter_mut().zip(&accepted) {
                *h += usize::from(a);
            }
            draws.extend_from_slice(&state.params);
            trace.push(state.log_posterior());
        }
    }

    Ok(Chain {
        names: target.param_names(),
        draws,
        log_posterior: trace,
        acceptance: kept_hits.iter().map(|&h| h as f64 / kept as f64).collect(),
        seed,
        config_digest: config_digest(target.tag(), prior, proposal, n_iter, burn_in),
        initial: init.to_vec(),
        final_steps: steps,
    })
}

// Robbins-Monro on the log step: gain 2/√k times (window rate − target).
fn adapt_steps(steps: &mut [f64], hits: &[usize], shape: Option<usize>, proposal: &ProposalConfig, k: usize) {
    let gain = 2.0 / sqrt(k as f64);
    let mut coef = 0;
    for (i, &h) in hits.iter().enumerate() {
        let rate = h as f64 / proposal.adapt_window as f64;
        let delta = gain * (rate - proposal.adapt_target_rate);
        if Some(i) == shape {
            // variance scales like a squared step
            let last = steps.len() - 1;
            steps[last] *= exp(2.0 * delta);
        } else {
            steps[coef] *= exp(delta);
            coef += 1;
        }
    }
}

/// Seed and overdispersed starting point of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainJob {
    pub seed: u64,
    pub init: Vec<f64>,
}

/// Chain k gets seed `base_seed + k` and starts at the model's initial point
/// with every entry multiplied by 1 + 0.5·u, u ~ U[−1, 1].
pub fn chain_jobs<T: Target + ?Sized>(target: &T, n_chains: usize, base_seed: u64) -> Result<Vec<ChainJob>, McmcError> {
    let base = target.initial_point()?;
    Ok((0..n_chains as u64)
        .map(|k| {
            let seed = base_seed.wrapping_add(k);
            let mut rng = chain_rng(seed);
            // separate stream so the jitter never overlaps the sampler's draws
            rng.set_stream(1);
            let init = base.iter().map(|&v| v * (1.0 + 0.5 * rng.random_range(-1.0..=1.0))).collect();
            ChainJob { seed, init }
        })
        .collect())
}

/// Runs `n_chains` independent chains one after another.
pub fn run_chains<T: Target + ?Sized>(
    target: &T,
    prior: &PriorSpec,
    proposal: &ProposalConfig,
    n_iter: usize,
    burn_in: usize,
    n_chains: usize,
    base_seed: u64,
) -> Result<Vec<Chain>, McmcError> {
    chain_jobs(target, n_chains, base_seed)?
        .iter()
        .map(|job| run_chain(target, prior, proposal, n_iter, burn_in, job.seed, &job.init))
        .collect()
}

/// The generalized logistic regression posterior over `[β, β′, α]`.
#[derive(Debug, Clone, Copy)]
pub struct GldRegression<'a> {
    ds: &'a Dataset,
}

impl<'a> GldRegression<'a> {
    pub fn new(ds: &'a Dataset) -> Self {
        Self { ds }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.ds
    }
}

/// Parameter names `β0…βp, bp0…bpp` for `p` design columns.
pub fn coefficient_names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("β{j}")).chain((0..p).map(|j| format!("bp{j}"))).collect()
}

/// OLS coefficients and the residual standard deviation, the shared start
/// for every model.
pub(crate) fn ols_start(ds: &Dataset) -> Result<(Vec<f64>, f64), McmcError> {
    let fit = linalg::least_squares(ds.design(), ds.n(), ds.p(), ds.response())
        .ok_or_else(|| McmcError::Initialization(String::from("design is rank deficient")))?;
    let y = ds.response();
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss: f64 = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();
    let sd = sqrt(fit.rss / (ds.n() - ds.p()) as f64);
    // an exact fit leaves only rounding noise in the residuals
    if !(sd > 0.0 && sd.is_finite()) || fit.rss <= 1e-20 * tss {
        return Err(McmcError::Initialization(format!("degenerate residual variance (sd = {sd})")));
    }
    Ok((fit.beta, sd))
}

impl Target for GldRegression<'_> {
    fn dim(&self) -> usize {
        2 * self.ds.p() + 1
    }

    fn shape_index(&self) -> Option<usize> {
        Some(2 * self.ds.p())
    }

    fn param_names(&self) -> Vec<String> {
        let mut names = coefficient_names(self.ds.p());
        names.push(String::from("alpha"));
        names
    }

    fn tag(&self) -> &str {
        "bglr"
    }

    fn log_likelihood(&self, params: &[f64]) -> f64 {
        log_likelihood_flat(self.ds, params)
    }

    /// β from OLS, β′₀ = ln(residual sd), other β′ = 0, α = 1.
    fn initial_point(&self) -> Result<Vec<f64>, McmcError> {
        let (beta, sd) = ols_start(self.ds)?;
        let p = self.ds.p();
        let mut v = beta;
        v.push(ln(sd));
        v.extend(core::iter::repeat_n(0.0, p - 1));
        v.push(1.0);
        Ok(v)
    }
}
