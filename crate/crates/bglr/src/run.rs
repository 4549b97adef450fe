//! Worker-pool execution of fits and of the per-day pipeline.

use std::path::Path;

use bglr_core::baselines::bnr_log_likelihood_flat;
use bglr_core::fit::{assemble, FitError};
use bglr_core::mcmc::{chain_jobs, run_chain};
use bglr_core::pipeline::{build_day_dataset, fit_day, DayFitRecord, ModelOutcome, RegionRecord};
use bglr_core::regression::log_likelihood_flat;
use bglr_core::{BayesFit, BnrModel, Chain, Dataset, GldRegression, SamplerSettings, Target};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io;

/// A pool with `threads` workers, or one per processor.
pub fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {threads:?} worker threads: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Bglr,
    Bnr,
}

impl Model {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bglr" => Some(Self::Bglr),
            "bnr" => Some(Self::Bnr),
            _ => None,
        }
    }
}

fn chains_in_parallel<T: Target + Sync + ?Sized>(target: &T, settings: &SamplerSettings) -> Result<Vec<Chain>, FitError> {
    let proposal = settings.proposal_for(target);
    let jobs = chain_jobs(target, settings.n_chains, settings.base_seed)?;
    let chains = jobs
        .par_iter()
        .map(|job| run_chain(target, &settings.prior, &proposal, settings.n_iter, settings.burn_in, job.seed, &job.init))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(chains)
}

/// Same result as the sequential fit, with chains spread over the current
/// pool.
pub fn fit_model(model: Model, ds: &Dataset, settings: &SamplerSettings) -> Result<BayesFit, FitError> {
    match model {
        Model::Bglr => {
            let target = GldRegression::new(ds);
            let chains = chains_in_parallel(&target, settings)?;
            assemble(&target, ds, log_likelihood_flat, settings, chains)
        }
        Model::Bnr => {
            let target = BnrModel::new(ds);
            let chains = chains_in_parallel(&target, settings)?;
            assemble(&target, ds, bnr_log_likelihood_flat, settings, chains)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaySeed {
    pub day: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedDay {
    pub day: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputShape {
    pub n_regions: usize,
    pub n_days: usize,
    /// Units of the area column, used verbatim in the densities.
    pub area_units: String,
}

/// Everything needed to reproduce and audit a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub version: String,
    pub config_digest: String,
    /// The full configuration in the `key = value` format.
    pub config: String,
    pub base_seed: u64,
    pub input: InputShape,
    pub first_day: usize,
    pub last_day: usize,
    pub day_seeds: Vec<DaySeed>,
    /// Days with no fit or with a failed model, with the reason.
    pub failed_days: Vec<FailedDay>,
    /// Days whose fitted Bayesian models did not pass the R̂ check.
    pub nonconverged_days: Vec<usize>,
}

pub struct PipelineRun {
    pub records: Vec<DayFitRecord>,
    pub manifest: Manifest,
}

impl PipelineRun {
    /// True when no day produced any fitted model.
    pub fn total_failure(&self) -> bool {
        !self.records.iter().any(|r| r.slr.fitted().is_some() || r.bnr.fitted().is_some() || r.bglr.fitted().is_some())
    }
}

fn failure_reason(r: &DayFitRecord) -> Option<String> {
    if let Some(why) = &r.unfittable {
        return Some(format!("unfittable: {why}"));
    }
    let failed: Vec<String> = [("slr", outcome_msg(&r.slr)), ("bnr", outcome_msg(&r.bnr)), ("bglr", outcome_msg(&r.bglr))]
        .into_iter()
        .filter_map(|(m, e)| e.map(|e| format!("{m}: {e}")))
        .collect();
    (!failed.is_empty()).then(|| failed.join("; "))
}

fn outcome_msg<T>(o: &ModelOutcome<T>) -> Option<String> {
    match o {
        ModelOutcome::Failed(e) => Some(e.clone()),
        _ => None,
    }
}

/// Fits every day in the configured range on the current pool.
pub fn run_pipeline(regions: &[RegionRecord], config: &RunConfig) -> Result<PipelineRun> {
    config.validate()?;
    let n_days = bglr_core::pipeline::validate_regions(regions)?;
    let first = config.first_day.unwrap_or(1);
    let last = config.last_day.unwrap_or(n_days);
    if first == 0 || first > last || last > n_days {
        return Err(Error::Usage(format!("day range {first}..={last} is outside 1..={n_days}")));
    }
    let fit_config = config.fit_config();
    let records = (first..=last)
        .into_par_iter()
        .map(|d| build_day_dataset(regions, d).map(|day| fit_day(&day, &fit_config)))
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_digest: config.digest(),
        config: config.to_text(),
        base_seed: config.sampler.base_seed,
        input: InputShape { n_regions: regions.len(), n_days, area_units: "hectares".into() },
        first_day: first,
        last_day: last,
        day_seeds: records.iter().map(|r| DaySeed { day: r.day_index, seed: r.seed }).collect(),
        failed_days: records.iter().filter_map(|r| failure_reason(r).map(|reason| FailedDay { day: r.day_index, reason })).collect(),
        nonconverged_days: records
            .iter()
            .filter(|r| [&r.bnr, &r.bglr].into_iter().any(|o| o.fitted().is_some_and(|f| !f.converged)))
            .map(|r| r.day_index)
            .collect(),
    };
    Ok(PipelineRun { records, manifest })
}

pub const SERIES_FILE: &str = "timeseries.csv";
pub const DAYS_FILE: &str = "days.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes the time series, the per-day records and the manifest.
pub fn write_pipeline(out: &Path, run: &PipelineRun) -> Result<()> {
    io::write_text(&out.join(SERIES_FILE), &io::series_csv(&run.records))?;
    io::write_json(&out.join(DAYS_FILE), &run.records)?;
    io::write_json(&out.join(MANIFEST_FILE), &run.manifest)
}
