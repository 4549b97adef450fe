//! Sampling a model end to end: chains, summaries, R̂ and DIC.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsError, DicResult, PlugIn, PosteriorSummary, RhatReport, RhatVariant};
use crate::mcmc::{self, Chain, GldRegression, McmcError, PriorSpec, ProposalConfig, Target};
use crate::regression::{log_likelihood_flat, Dataset};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error(transparent)]
    Mcmc(#[from] McmcError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

/// Everything that controls a Bayesian fit apart from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSettings {
    pub prior: PriorSpec,
    pub n_iter: usize,
    pub burn_in: usize,
    pub n_chains: usize,
    pub base_seed: u64,
    /// Initial random-walk step for every coefficient.
    pub coef_step: f64,
    pub alpha_proposal_variance: f64,
    pub adapt: bool,
    pub adapt_target_rate: f64,
    pub adapt_window: usize,
    pub plug_in: PlugIn,
    pub rhat_variant: RhatVariant,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            prior: PriorSpec::default(),
            n_iter: 20_000,
            burn_in: 10_000,
            n_chains: 4,
            base_seed: 0,
            coef_step: ProposalConfig::DEFAULT_STEP,
            alpha_proposal_variance: ProposalConfig::DEFAULT_ALPHA_VARIANCE,
            adapt: true,
            adapt_target_rate: 0.3,
            adapt_window: 200,
            plug_in: PlugIn::Mean,
            rhat_variant: RhatVariant::Classical,
        }
    }
}

impl SamplerSettings {
    pub fn proposal_for<T: Target + ?Sized>(&self, target: &T) -> ProposalConfig {
        let n_coef = target.dim() - usize::from(target.shape_index().is_some());
        let mut proposal = ProposalConfig::uniform(n_coef, self.coef_step, self.alpha_proposal_variance);
        proposal.adapt = self.adapt;
        proposal.adapt_target_rate = self.adapt_target_rate;
        proposal.adapt_window = self.adapt_window;
        proposal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesFit {
    pub model: String,
    pub chains: Vec<Chain>,
    pub summary: PosteriorSummary,
    /// Present when at least two chains were run.
    pub rhat: Option<RhatReport>,
    pub dic: DicResult,
}

/// Summarizes already-sampled chains of `target`.
pub fn assemble<T, F>(
    target: &T,
    ds: &Dataset,
    log_likelihood: F,
    settings: &SamplerSettings,
    chains: Vec<Chain>,
) -> Result<BayesFit, FitError>
where
    T: Target + ?Sized,
    F: Fn(&Dataset, &[f64]) -> f64,
{
    let summary = diagnostics::summarize(&chains)?;
    let rhat = if chains.len() >= 2 { Some(diagnostics::gelman_rubin_with(&chains, settings.rhat_variant)?) } else { None };
    let dic = diagnostics::dic(&chains, ds, target.tag(), log_likelihood, settings.plug_in)?;
    Ok(BayesFit { model: String::from(target.tag()), chains, summary, rhat, dic })
}

/// Runs every chain sequentially, then summarizes.
pub fn fit_target<T, F>(target: &T, ds: &Dataset, log_likelihood: F, settings: &SamplerSettings) -> Result<BayesFit, FitError>
where
    T: Target + ?Sized,
    F: Fn(&Dataset, &[f64]) -> f64,
{
    let proposal = settings.proposal_for(target);
    let chains =
        mcmc::run_chains(target, &settings.prior, &proposal, settings.n_iter, settings.burn_in, settings.n_chains, settings.base_seed)?;
    assemble(target, ds, log_likelihood, settings, chains)
}

/// Runs the generalized logistic regression sampler and summarizes it.
pub fn bglr_fit(ds: &Dataset, settings: &SamplerSettings) -> Result<BayesFit, FitError> {
    fit_target(&GldRegression::new(ds), ds, log_likelihood_flat, settings)
}
