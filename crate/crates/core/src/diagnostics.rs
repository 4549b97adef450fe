//! Posterior summaries, the Gelman-Rubin diagnostic and DIC.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::sqrt;
use crate::mcmc::Chain;
use crate::regression::Dataset;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("no chains supplied")]
    NoChains,
    #[error("need at least {needed} draws per chain, got {got}")]
    TooFewDraws { needed: usize, got: usize },
    #[error("chains disagree on the parameter set")]
    ParameterMismatch,
    #[error("need at least 2 chains, got {0}")]
    TooFewChains(usize),
    #[error("chains have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("log-likelihood at the plug-in point is {0}")]
    NonFinitePlugIn(f64),
    #[error("log-likelihood of draw {0} is not finite")]
    NonFiniteDraw(usize),
    #[error("results come from different datasets ({0} vs {1})")]
    DatasetMismatch(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

impl ParamSummary {
    /// Whether the central 95% interval contains `value`.
    pub fn covers(&self, value: f64) -> bool {
        self.q025 <= value && value <= self.q975
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
    pub n_draws: usize,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Sample quantile of sorted data by linear interpolation between order
/// statistics: with h = (N − 1)·prob, the result is
/// x₍⌊h⌋₎ + (h − ⌊h⌋)(x₍⌊h⌋+1₎ − x₍⌊h⌋₎) using 0-based order statistics.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&hi) if frac > 0.0 => sorted[lo] + frac * (hi - sorted[lo]),
        _ => sorted[lo],
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (n − 1) sample variance.
fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

fn check_names(chains: &[Chain]) -> Result<&[String], DiagnosticsError> {
    let first = chains.first().ok_or(DiagnosticsError::NoChains)?;
    if chains.iter().any(|c| c.names != first.names) {
        return Err(DiagnosticsError::ParameterMismatch);
    }
    Ok(&first.names)
}

fn pooled_column(chains: &[Chain], j: usize) -> Vec<f64> {
    chains.iter().flat_map(|c| c.draws_iter().map(move |r| r[j])).collect()
}

/// Pooled summaries across chains.
pub fn summarize(chains: &[Chain]) -> Result<PosteriorSummary, DiagnosticsError> {
    let names = check_names(chains)?;
    let n_draws: usize = chains.iter().map(Chain::n_draws).sum();
    if n_draws < 2 {
        return Err(DiagnosticsError::TooFewDraws { needed: 2, got: n_draws });
    }
    let params = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut col = pooled_column(chains, j);
            let mean = mean(&col);
            let sd = sqrt(variance(&col));
            col.sort_by(f64::total_cmp);
            ParamSummary {
                name: name.clone(),
                mean,
                median: quantile_sorted(&col, 0.5),
                sd,
                q025: quantile_sorted(&col, 0.025),
                q975: quantile_sorted(&col, 0.975),
            }
        })
        .collect();
    Ok(PosteriorSummary { params, n_draws })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhatVariant {
    /// Between/within variance ratio over whole chains.
    #[default]
    Classical,
    /// The same ratio after cutting every chain into two halves.
    Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhatReport {
    pub names: Vec<String>,
    pub rhat: Vec<f64>,
    pub n_chains: usize,
    pub variant: RhatVariant,
    pub threshold: f64,
    pub converged: bool,
}

pub const RHAT_THRESHOLD: f64 = 1.1;

/// R̂ = √(((n−1)/n·W + B/n) / W) for equal-length sequences.
///
/// Returns 1 when every sequence is the same constant and +∞ when each is
/// constant but they differ.
pub fn potential_scale_reduction(sequences: &[&[f64]]) -> f64 {
    let m = sequences.len() as f64;
    let n = sequences[0].len() as f64;
    let means: Vec<f64> = sequences.iter().map(|s| mean(s)).collect();
    let w = sequences.iter().map(|s| variance(s)).sum::<f64>() / m;
    let b = n * variance(&means);
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    sqrt(((n - 1.0) / n * w + b / n) / w)
}

/// Classical Gelman-Rubin diagnostic.
pub fn gelman_rubin(chains: &[Chain]) -> Result<RhatReport, DiagnosticsError> {
    gelman_rubin_with(chains, RhatVariant::Classical)
}

pub fn gelman_rubin_with(chains: &[Chain], variant: RhatVariant) -> Result<RhatReport, DiagnosticsError> {
    let names = check_names(chains)?;
    if chains.len() < 2 {
        return Err(DiagnosticsError::TooFewChains(chains.len()));
    }
    let n = chains[0].n_draws();
    if let Some(c) = chains.iter().find(|c| c.n_draws() != n) {
        return Err(DiagnosticsError::LengthMismatch(n, c.n_draws()));
    }
    if n < 10 {
        return Err(DiagnosticsError::TooFewDraws { needed: 10, got: n });
    }
    let rhat: Vec<f64> = (0..names.len())
        .map(|j| {
            let columns: Vec<Vec<f64>> = chains.iter().map(|c| c.column(j)).collect();
            let sequences: Vec<&[f64]> = match variant {
                RhatVariant::Classical => columns.iter().map(Vec::as_slice).collect(),
                // odd lengths drop the middle draw so both halves match
                RhatVariant::Split => columns.iter().flat_map(|c| [&c[..n / 2], &c[n - n / 2..]]).collect(),
            };
            potential_scale_reduction(&sequences)
        })
        .collect();
    let converged = rhat.iter().all(|&r| r < RHAT_THRESHOLD);
    Ok(RhatReport { names: names.to_vec(), rhat, n_chains: chains.len(), variant, threshold: RHAT_THRESHOLD, converged })
}

/// Point at which the deviance is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlugIn {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DicResult {
    pub model: String,
    pub dataset_digest: String,
    pub plug_in: PlugIn,
    pub names: Vec<String>,
    pub plug_in_psi: Vec<f64>,
    /// ln f(y | ψ̂).
    pub plug_in_log_likelihood: f64,
    /// Mean over draws of ln f(y | ψᵗ).
    pub mean_log_likelihood: f64,
    pub p_dic: f64,
    pub dic: f64,
}

/// DIC with p_DIC = 2[ln f(y|ψ̂) − mean ln f(y|ψᵗ)] and DIC = −2 ln f(y|ψ̂) + 2 p_DIC.
///
/// `model` tags the result; `log_likelihood` is evaluated on flat draws.
pub fn dic<F>(chains: &[Chain], ds: &Dataset, model: &str, log_likelihood: F, plug_in: PlugIn) -> Result<DicResult, DiagnosticsError>
where
    F: Fn(&Dataset, &[f64]) -> f64,
{
    let names = check_names(chains)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for row in chains.iter().flat_map(Chain::draws_iter) {
        let ll = log_likelihood(ds, row);
        if !ll.is_finite() {
            return Err(DiagnosticsError::NonFiniteDraw(count));
        }
        total += ll;
        count += 1;
    }
    if count == 0 {
        return Err(DiagnosticsError::TooFewDraws { needed: 1, got: 0 });
    }
    let plug_in_psi: Vec<f64> = (0..names.len())
        .map(|j| {
            let mut col = pooled_column(chains, j);
            match plug_in {
                PlugIn::Mean => mean(&col),
                PlugIn::Median => {
                    col.sort_by(f64::total_cmp);
                    quantile_sorted(&col, 0.5)
                }
            }
        })
        .collect();
    let at_plug_in = log_likelihood(ds, &plug_in_psi);
    if !at_plug_in.is_finite() {
        return Err(DiagnosticsError::NonFinitePlugIn(at_plug_in));
    }
    let mean_ll = total / count as f64;
    let p_dic = 2.0 * (at_plug_in - mean_ll);
    Ok(DicResult {
        model: String::from(model),
        dataset_digest: String::from(ds.digest()),
        plug_in,
        names: names.to_vec(),
        plug_in_psi,
        plug_in_log_likelihood: at_plug_in,
        mean_log_likelihood: mean_ll,
        p_dic,
        dic: -2.0 * at_plug_in + 2.0 * p_dic,
    })
}

/// DIC(a) − DIC(b). With a = BNR and b = BGLR, positive favours BGLR.
pub fn dic_difference(a: &DicResult, b: &DicResult) -> Result<f64, DiagnosticsError> {
    if a.dataset_digest != b.dataset_digest {
        return Err(DiagnosticsError::DatasetMismatch(a.dataset_digest.clone(), b.dataset_digest.clone()));
    }
    Ok(a.dic - b.dic)
}
