//! Daily power-law scaling fits.
//!
//! Each day regresses log₁₀ case density on log₁₀ population density over
//! the regions that reported at least one case, with all three models.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{bnr_fit, slr_fit, SlrFit};
use crate::diagnostics::{dic_difference, DicResult, PosteriorSummary, RhatReport};
use crate::fit::{bglr_fit, BayesFit, FitError, SamplerSettings};
use crate::gld::GldParams;
use crate::math::{exp, log10, powf, round};
use crate::regression::{Dataset, ParamVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("region {region}: {reason}")]
    InvalidRegion { region: String, reason: String },
    #[error("day {day} is outside 1..={n_days}")]
    DayOutOfRange { day: usize, n_days: usize },
    #[error("regions disagree on the number of days ({0} vs {1})")]
    RaggedDays(usize, usize),
    #[error("invalid generating parameters")]
    InvalidParams,
}

/// One region with its population, area and daily case counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub region: String,
    pub population: f64,
    pub area_hectares: f64,
    pub daily_cases: Vec<u64>,
}

impl RegionRecord {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |reason: &str| Err(PipelineError::InvalidRegion { region: self.region.clone(), reason: reason.to_string() });
        if !(self.population > 0.0 && self.population.is_finite()) {
            return fail("population must be positive");
        }
        if !(self.area_hectares > 0.0 && self.area_hectares.is_finite()) {
            return fail("area must be positive");
        }
        Ok(())
    }

    /// log₁₀(population / area).
    pub fn log_density(&self) -> f64 {
        log10(self.population / self.area_hectares)
    }
}

/// Checks every region and that all have the same number of days; returns
/// that number.
pub fn validate_regions(regions: &[RegionRecord]) -> Result<usize, PipelineError> {
    let n_days = regions.first().map_or(0, |r| r.daily_cases.len());
    for r in regions {
        r.validate()?;
        if r.daily_cases.len() != n_days {
            return Err(PipelineError::RaggedDays(n_days, r.daily_cases.len()));
        }
    }
    Ok(n_days)
}

/// Parameters and seed behind a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub psi: ParamVector,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayDataset {
    /// 1-based column index into the daily cases.
    pub day_index: usize,
    /// `None` when the day cannot be fitted.
    pub dataset: Option<Dataset>,
    pub included_regions: Vec<String>,
    pub n_included: usize,
    pub n_excluded_zero: usize,
    pub unfittable: Option<String>,
    pub provenance: Option<Provenance>,
}

/// Number of design columns in the power-law model.
const P: usize = 2;

fn finish_day(day_index: usize, x: Vec<f64>, y: Vec<f64>, names: Vec<String>, excluded: usize) -> DayDataset {
    let n_included = x.len();
    let (dataset, unfittable) = if n_included < P + 2 {
        (None, Some(format!("only {n_included} regions with cases, need {}", P + 2)))
    } else {
        match Dataset::simple(&x, &y) {
            Ok(ds) => (Some(ds), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    DayDataset { day_index, dataset, included_regions: names, n_included, n_excluded_zero: excluded, unfittable, provenance: None }
}

/// x = log₁₀(population/area), y = log₁₀(cases/area) over regions with at
/// least one case that day; zero-case regions are counted and left out.
pub fn build_day_dataset(regions: &[RegionRecord], day_index: usize) -> Result<DayDataset, PipelineError> {
    let n_days = validate_regions(regions)?;
    if day_index == 0 || day_index > n_days {
        return Err(PipelineError::DayOutOfRange { day: day_index, n_days });
    }
    let (mut x, mut y, mut names) = (Vec::new(), Vec::new(), Vec::new());
    let mut excluded = 0;
    for r in regions {
        let cases = r.daily_cases[day_index - 1];
        if cases == 0 {
            excluded += 1;
            continue;
        }
        x.push(r.log_density());
        y.push(log10(cases as f64 / r.area_hectares));
        names.push(r.region.clone());
    }
    Ok(finish_day(day_index, x, y, names, excluded))
}

/// Draws yᵢ ~ GLD(xᵢᵀβ, exp(xᵢᵀβ′), α) for the design `[1, x]`.
pub fn simulate_response(psi: &ParamVector, x: &[f64], seed: u64) -> Result<Vec<f64>, PipelineError> {
    if !psi.is_valid() || psi.beta.len() != P || psi.beta_prime.len() != P {
        return Err(PipelineError::InvalidParams);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    x.iter()
        .map(|&xi| {
            let theta = psi.beta[0] + psi.beta[1] * xi;
            let sigma = exp(psi.beta_prime[0] + psi.beta_prime[1] * xi);
            let g = GldParams::new(theta, sigma, psi.alpha).map_err(|_| PipelineError::InvalidParams)?;
            Ok(g.draw(&mut rng))
        })
        .collect()
}

/// A synthetic day with responses drawn from the regression model at `x`.
pub fn simulate_day(psi: &ParamVector, x: &[f64], seed: u64) -> Result<DayDataset, PipelineError> {
    let y = simulate_response(psi, x, seed)?;
    let names = (0..x.len()).map(|i| format!("R{i}")).collect();
    let mut day = finish_day(1, x.to_vec(), y, names, 0);
    day.provenance = Some(Provenance { psi: psi.clone(), seed });
    Ok(day)
}

/// Shape of a synthetic regions-by-days corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub n_regions: usize,
    /// Generating parameters per day; `None` makes every region report zero.
    pub days: Vec<Option<ParamVector>>,
    pub seed: u64,
}

/// Regions with log-uniform populations (10⁴–10⁶·⁵) and areas (10²·⁵–10⁵·⁵
/// hectares) whose daily counts follow round(area · 10^y) with y from the
/// regression model at x = log₁₀ population density.
pub fn simulate_corpus(spec: &CorpusSpec) -> Result<Vec<RegionRecord>, PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut regions: Vec<RegionRecord> = (0..spec.n_regions)
        .map(|i| RegionRecord {
            region: format!("Region{:03}", i + 1),
            population: round(powf(10.0, rng.random_range(4.0..6.5))),
            area_hectares: round(powf(10.0, rng.random_range(2.5..5.5)) * 100.0) / 100.0,
            daily_cases: Vec::with_capacity(spec.days.len()),
        })
        .collect();
    let x: Vec<f64> = regions.iter().map(RegionRecord::log_density).collect();
    for (d, psi) in spec.days.iter().enumerate() {
        let counts: Vec<u64> = match psi {
            None => alloc::vec![0; regions.len()],
            Some(psi) => simulate_response(psi, &x, day_seed(spec.seed, d + 1))?
                .iter()
                .zip(&regions)
                .map(|(y, r)| {
                    let c = round(r.area_hectares * powf(10.0, *y));
                    if c.is_finite() && c > 0.0 {
                        c.min(1e15) as u64
                    } else {
                        0
                    }
                })
                .collect(),
        };
        for (r, c) in regions.iter_mut().zip(counts) {
            r.daily_cases.push(c);
        }
    }
    Ok(regions)
}

/// Seed for day `day_index`, mixed from the base seed so days are independent
/// of processing order.
pub fn day_seed(base_seed: u64, day_index: usize) -> u64 {
    base_seed ^ (day_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Which models to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSet {
    pub bglr: bool,
    pub bnr: bool,
    pub slr: bool,
}

impl Default for ModelSet {
    fn default() -> Self {
        Self { bglr: true, bnr: true, slr: true }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitConfig {
    pub sampler: SamplerSettings,
    pub models: ModelSet,
}

/// A Bayesian fit without its draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub summary: PosteriorSummary,
    pub rhat: Option<RhatReport>,
    pub converged: bool,
    pub dic: DicResult,
    pub acceptance: Vec<f64>,
    pub config_digest: String,
}

impl From<&BayesFit> for FitReport {
    fn from(fit: &BayesFit) -> Self {
        let dim = fit.summary.params.len();
        let n = fit.chains.len() as f64;
        let acceptance = (0..dim).map(|j| fit.chains.iter().map(|c| c.acceptance[j]).sum::<f64>() / n).collect();
        Self {
            model: fit.model.clone(),
            summary: fit.summary.clone(),
            converged: fit.rhat.as_ref().is_some_and(|r| r.converged),
            rhat: fit.rhat.clone(),
            dic: fit.dic.clone(),
            acceptance,
            config_digest: fit.chains.first().map(|c| c.config_digest.clone()).unwrap_or_default(),
        }
    }
}

/// Result of one model on one day. Failures are kept, not dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "value")]
pub enum ModelOutcome<T> {
    Fitted(T),
    Failed(String),
    Skipped,
}

impl<T> ModelOutcome<T> {
    pub fn fitted(&self) -> Option<&T> {
        match self {
            Self::Fitted(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayFitRecord {
    pub day_index: usize,
    pub n_included: usize,
    pub n_excluded_zero: usize,
    /// Why the day could not be fitted, if it could not.
    pub unfittable: Option<String>,
    pub dataset_digest: Option<String>,
    pub seed: u64,
    pub slr: ModelOutcome<SlrFit>,
    pub bnr: ModelOutcome<FitReport>,
    pub bglr: ModelOutcome<FitReport>,
    /// DIC(BNR) − DIC(BGLR); positive favours BGLR.
    pub dic_difference: Option<f64>,
}

impl DayFitRecord {
    /// BGLR minus BNR posterior mean of parameter `name`.
    pub fn mean_difference(&self, name: &str) -> Option<f64> {
        let a = self.bglr.fitted()?.summary.get(name)?.mean;
        let b = self.bnr.fitted()?.summary.get(name)?.mean;
        Some(a - b)
    }
}

fn bayes_outcome(enabled: bool, run: impl FnOnce() -> Result<BayesFit, FitError>) -> ModelOutcome<FitReport> {
    if !enabled {
        return ModelOutcome::Skipped;
    }
    match run() {
        Ok(fit) => ModelOutcome::Fitted(FitReport::from(&fit)),
        Err(e) => ModelOutcome::Failed(e.to_string()),
    }
}

/// Fits the enabled models to one day. The samplers use `day_seed(base, day)`.
pub fn fit_day(day: &DayDataset, config: &FitConfig) -> DayFitRecord {
    let seed = day_seed(config.sampler.base_seed, day.day_index);
    let mut record = DayFitRecord {
        day_index: day.day_index,
        n_included: day.n_included,
        n_excluded_zero: day.n_excluded_zero,
        unfittable: day.unfittable.clone(),
        dataset_digest: None,
        seed,
        slr: ModelOutcome::Skipped,
        bnr: ModelOutcome::Skipped,
        bglr: ModelOutcome::Skipped,
        dic_difference: None,
    };
    let Some(ds) = &day.dataset else {
        return record;
    };
    record.dataset_digest = Some(ds.digest().to_string());
    let settings = SamplerSettings { base_seed: seed, ..config.sampler.clone() };
    if config.models.slr {
        record.slr = match slr_fit(ds) {
            Ok(f) => ModelOutcome::Fitted(f),
            Err(e) => ModelOutcome::Failed(e.to_string()),
        };
    }
    record.bnr = bayes_outcome(config.models.bnr, || bnr_fit(ds, &settings));
    record.bglr = bayes_outcome(config.models.bglr, || bglr_fit(ds, &settings));
    if let (Some(bnr), Some(bglr)) = (record.bnr.fitted(), record.bglr.fitted()) {
        record.dic_difference = dic_difference(&bnr.dic, &bglr.dic).ok();
    }
    record
}

/// Builds and fits every day in `days` (1-based, inclusive) one after another.
pub fn fit_all_days(
    regions: &[RegionRecord],
    config: &FitConfig,
    days: core::ops::RangeInclusive<usize>,
) -> Result<Vec<DayFitRecord>, PipelineError> {
    days.map(|d| build_day_dataset(regions, d).map(|day| fit_day(&day, config))).collect()
}
