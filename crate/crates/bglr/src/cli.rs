//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use bglr_core::gld::{mle_fit, mom_estimate, Collapse};
use bglr_core::pipeline::{simulate_corpus, simulate_day, CorpusSpec};
use bglr_core::{DicResult, GldParams, ParamVector, PosteriorSummary, RhatReport};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io;
use crate::run::{self, Model};

#[derive(Debug, Parser)]
#[command(name = "bglr", version, about = "Heteroscedastic Bayesian generalized logistic regression")]
pub struct Cli {
    /// Run configuration in `key = value` form; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: one per processor).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distribution utilities.
    Gld {
        #[command(subcommand)]
        op: GldCommand,
    },
    /// Fit one dataset and write draws, summaries, R-hat and DIC.
    Fit(FitArgs),
    /// Fit every day of a regions-by-days corpus.
    Pipeline(PipelineArgs),
    /// Compare two fit summaries by DIC.
    Compare(CompareArgs),
    /// Generate synthetic inputs.
    Simulate {
        #[command(subcommand)]
        what: SimulateCommand,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct GldArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub alpha: f64,
}

impl GldArgs {
    fn params(&self) -> Result<GldParams> {
        Ok(GldParams::new(self.theta, self.sigma, self.alpha)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    Mle,
    Mom,
}

#[derive(Debug, Subcommand)]
pub enum GldCommand {
    /// Density at each x.
    Pdf {
        #[arg(long, required = true, num_args = 1.., allow_negative_numbers = true)]
        x: Vec<f64>,
        #[command(flatten)]
        params: GldArgs,
    },
    /// Distribution function at each x.
    Cdf {
        #[arg(long, required = true, num_args = 1.., allow_negative_numbers = true)]
        x: Vec<f64>,
        #[command(flatten)]
        params: GldArgs,
    },
    /// Quantile at each probability.
    Quantile {
        #[arg(long, required = true, num_args = 1..)]
        p: Vec<f64>,
        #[command(flatten)]
        params: GldArgs,
    },
    /// Draw a sample as a one-column CSV.
    Sample {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        params: GldArgs,
        /// Write here instead of standard output.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Estimate (θ, σ, α) from a one-column CSV.
    Fit {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Estimator::Mle)]
        method: Estimator,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct SamplerArgs {
    /// Iterations per chain, burn-in included.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Leading iterations discarded from every chain.
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Require R-hat (needs at least two chains).
    #[arg(long)]
    pub rhat: bool,
    /// Any configuration key, as key=value; may repeat.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub assignments: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with covariate columns and a response column `y`.
    #[arg(long, value_name = "FILE")]
    pub dataset: Option<PathBuf>,
    #[arg(long, default_value = "bglr", value_parser = ["bglr", "bnr"])]
    pub model: String,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Region, population and area columns.
    #[arg(long, value_name = "FILE")]
    pub regions: Option<PathBuf>,
    /// Region column followed by one column of counts per day.
    #[arg(long, value_name = "FILE")]
    pub cases: Option<PathBuf>,
    /// Single table with regions and day columns together.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["regions", "cases"])]
    pub table: Option<PathBuf>,
    /// First day to fit, counting from 1.
    #[arg(long)]
    pub first_day: Option<usize>,
    /// Last day to fit (default: the last column).
    #[arg(long)]
    pub last_day: Option<usize>,
    #[command(flatten)]
    pub sampler: SamplerArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Summary JSON written by `fit`.
    pub a: PathBuf,
    pub b: PathBuf,
    /// Differences no larger than this give no preference.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
}

/// Generating parameters; unset ones take the subcommand's defaults.
#[derive(Debug, Clone, Copy, Args)]
pub struct TruthArgs {
    /// Location intercept.
    #[arg(long, allow_negative_numbers = true)]
    pub beta0: Option<f64>,
    /// Location slope.
    #[arg(long, allow_negative_numbers = true)]
    pub beta1: Option<f64>,
    /// Log-scale intercept.
    #[arg(long, allow_negative_numbers = true)]
    pub bp0: Option<f64>,
    /// Log-scale slope.
    #[arg(long, allow_negative_numbers = true)]
    pub bp1: Option<f64>,
    /// Shape.
    #[arg(long)]
    pub alpha: Option<f64>,
}

/// β₀, β₁, β′₀, β′₁, α for `simulate day`.
pub const DAY_DEFAULTS: [f64; 5] = [2.0, 0.5, -1.0, 0.3, 2.0];
/// Same for `simulate corpus`: densities in cases per hectare.
pub const CORPUS_DEFAULTS: [f64; 5] = [-2.5, 1.1, -1.9, 0.0, 1.0];

impl TruthArgs {
    fn psi(&self, defaults: [f64; 5]) -> ParamVector {
        let v = [self.beta0, self.beta1, self.bp0, self.bp1, self.alpha];
        let [b0, b1, bp0, bp1, alpha] = core::array::from_fn(|i| v[i].unwrap_or(defaults[i]));
        ParamVector::new(vec![b0, b1], vec![bp0, bp1], alpha)
    }
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// One dataset with x uniform on [x-min, x-max]; writes dataset.csv and truth.json.
    Day {
        /// Number of observations.
        #[arg(long, default_value_t = 337)]
        n: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        x_max: f64,
        #[command(flatten)]
        truth: TruthArgs,
    },
    /// A regions-by-days corpus; writes regions.csv and cases.csv.
    Corpus {
        /// Number of regions.
        #[arg(long, default_value_t = 337)]
        regions: usize,
        /// Number of day columns.
        #[arg(long, default_value_t = 10)]
        days: usize,
        /// Days on which every region reports zero.
        #[arg(long, value_delimiter = ',')]
        zero_days: Vec<usize>,
        /// From this day on the shape switches to `--alpha-after`.
        #[arg(long, requires = "alpha_after")]
        switch_day: Option<usize>,
        /// Shape used from `--switch-day` on.
        #[arg(long)]
        alpha_after: Option<f64>,
        #[command(flatten)]
        truth: TruthArgs,
    },
}

/// Report written by `fit` and read by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub model: String,
    pub dataset: String,
    pub dataset_digest: String,
    pub n: usize,
    pub config_digest: String,
    pub config: String,
    pub seed: u64,
    pub converged: bool,
    pub summary: PosteriorSummary,
    pub rhat: Option<RhatReport>,
    pub dic: DicResult,
    pub acceptance: Vec<f64>,
}

pub const CHAINS_FILE: &str = "chains.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RHAT_FILE: &str = "rhat.json";
pub const DIC_FILE: &str = "dic.json";

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_text(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.sampler.base_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }
    Ok(config)
}

fn apply_sampler(config: &mut RunConfig, args: &SamplerArgs) -> Result<()> {
    for a in &args.assignments {
        config.set_assignment(a)?;
    }
    if let Some(v) = args.iterations {
        config.sampler.n_iter = v;
    }
    if let Some(v) = args.burn_in {
        config.sampler.burn_in = v;
    }
    if let Some(v) = args.chains {
        config.sampler.n_chains = v;
    }
    config.rhat |= args.rhat;
    config.validate()
}

fn print_lines(values: impl IntoIterator<Item = f64>) {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for v in values {
        let _ = writeln!(out, "{}", io::num(v));
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    match cli.command {
        Command::Gld { op } => cmd_gld(op, &config),
        Command::Fit(args) => cmd_fit(config, &args),
        Command::Pipeline(args) => cmd_pipeline(config, &args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Simulate { what } => cmd_simulate(what, &config),
    }
}

fn cmd_gld(op: GldCommand, config: &RunConfig) -> Result<()> {
    match op {
        GldCommand::Pdf { x, params } => {
            let g = params.params()?;
            print_lines(x.iter().map(|&v| g.pdf(v)));
        }
        GldCommand::Cdf { x, params } => {
            let g = params.params()?;
            print_lines(x.iter().map(|&v| g.cdf(v)));
        }
        GldCommand::Quantile { p, params } => {
            let g = params.params()?;
            let q = p.iter().map(|&v| g.quantile(v)).collect::<Result<Vec<_>, _>>()?;
            print_lines(q);
        }
        GldCommand::Sample { n, params, output } => {
            let values = params.params()?.sample(n, config.sampler.base_seed);
            match output {
                Some(path) => io::write_values(&path, &values)?,
                None => print!("{}", io::values_csv(&values)),
            }
        }
        GldCommand::Fit { input, method } => {
            let data = io::load_values(&input)?;
            let header = ["theta", "sigma", "alpha"].map(str::to_owned);
            match method {
                Estimator::Mom => {
                    let g = mom_estimate(&data)?;
                    print!("{}", io::csv_text(&header, [[g.theta(), g.sigma(), g.alpha()].map(io::num)]));
                }
                Estimator::Mle => {
                    let (g, status) = mle_fit(&data, None)?;
                    let mut header = header.to_vec();
                    header.extend(["log_likelihood", "converged", "iterations"].map(str::to_owned));
                    let row = [g.theta(), g.sigma(), g.alpha(), status.final_log_likelihood]
                        .map(io::num)
                        .into_iter()
                        .chain([status.converged.to_string(), status.iterations.to_string()]);
                    print!("{}", io::csv_text(&header, [row]));
                    match status.collapse {
                        Collapse::None if status.converged => {}
                        Collapse::None => return Err(Error::Numeric(format!("MLE did not converge in {} iterations", status.iterations))),
                        Collapse::AlphaToInfinity => return Err(Error::Numeric("MLE collapse: alpha diverges to infinity".into())),
                        Collapse::AlphaToZero => return Err(Error::Numeric("MLE collapse: alpha shrinks to zero".into())),
                    }
                }
            }
        }
    }
    Ok(())
}

fn cmd_fit(mut config: RunConfig, args: &FitArgs) -> Result<()> {
    if let Some(path) = &args.dataset {
        config.dataset = Some(path.clone());
    }
    apply_sampler(&mut config, &args.sampler)?;
    let path = config.dataset.clone().ok_or_else(|| Error::Usage("fit needs --dataset or a `dataset` config key".into()))?;
    let ds = io::load_dataset(&path)?;
    let model = Model::parse(&args.model).expect("clap restricts the model names");
    let fit = run::pool(config.threads)?.install(|| run::fit_model(model, &ds, &config.sampler))?;
    let converged = fit.rhat.as_ref().is_some_and(|r| r.converged);
    let report = bglr_core::pipeline::FitReport::from(&fit);
    let summary = FitSummary {
        model: fit.model.clone(),
        dataset: path.display().to_string(),
        dataset_digest: ds.digest().to_owned(),
        n: ds.n(),
        config_digest: config.digest(),
        config: config.to_text(),
        seed: config.sampler.base_seed,
        converged,
        summary: fit.summary.clone(),
        rhat: fit.rhat.clone(),
        dic: fit.dic.clone(),
        acceptance: report.acceptance,
    };
    let out = &config.out;
    io::write_text(&out.join(CHAINS_FILE), &io::chains_csv(&fit.chains))?;
    io::write_json(&out.join(SUMMARY_FILE), &summary)?;
    if let Some(r) = &fit.rhat {
        io::write_json(&out.join(RHAT_FILE), r)?;
    }
    io::write_json(&out.join(DIC_FILE), &fit.dic)?;
    let rhat = fit.rhat.as_ref().map_or("R-hat not computed".to_owned(), |r| {
        format!("max R-hat {}", io::num(r.rhat.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
    });
    println!(
        "{}: converged={converged} ({rhat}), DIC {}, {} draws, outputs in {}",
        fit.model,
        io::num(fit.dic.dic),
        fit.summary.n_draws,
        out.display()
    );
    Ok(())
}

fn cmd_pipeline(mut config: RunConfig, args: &PipelineArgs) -> Result<()> {
    for (slot, value) in [(&mut config.regions, &args.regions), (&mut config.cases, &args.cases), (&mut config.table, &args.table)] {
        if value.is_some() {
            *slot = value.clone();
        }
    }
    if args.table.is_some() {
        config.regions = None;
        config.cases = None;
    }
    if args.first_day.is_some() {
        config.first_day = args.first_day;
    }
    if args.last_day.is_some() {
        config.last_day = args.last_day;
    }
    apply_sampler(&mut config, &args.sampler)?;
    let loaded = match (&config.table, &config.regions, &config.cases) {
        (Some(t), None, None) => io::load_table(t)?,
        (None, Some(r), Some(c)) => io::load_regions(r, c)?,
        _ => return Err(Error::Usage("pipeline needs --regions with --cases, or --table".into())),
    };
    let result = run::pool(config.threads)?.install(|| run::run_pipeline(&loaded.records, &config))?;
    run::write_pipeline(&config.out, &result)?;
    let m = &result.manifest;
    println!(
        "{} regions, days {}..={}: {} failed, {} not converged; outputs in {}",
        loaded.n_rows,
        m.first_day,
        m.last_day,
        m.failed_days.len(),
        m.nonconverged_days.len(),
        config.out.display()
    );
    if result.total_failure() {
        return Err(Error::Numeric("no day could be fitted".into()));
    }
    Ok(())
}

/// DIC(a) − DIC(b) and the preferred side; `None` when within `margin`.
pub fn compare(a: &DicResult, b: &DicResult, margin: f64) -> Result<(f64, Option<bool>)> {
    let d = bglr_core::dic_difference(a, b).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok((d, (d.abs() > margin).then_some(d < 0.0)))
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let a: FitSummary = io::read_json(&args.a)?;
    let b: FitSummary = io::read_json(&args.b)?;
    let (d, verdict) = compare(&a.dic, &b.dic, args.margin)?;
    println!("DIC {} = {}", a.model, io::num(a.dic.dic));
    println!("DIC {} = {}", b.model, io::num(b.dic.dic));
    println!("difference ({} - {}) = {}", a.model, b.model, io::num(d));
    let label = |s: &FitSummary, p: &Path| format!("{} ({})", s.model, p.display());
    match verdict {
        None => println!("verdict: no preference"),
        Some(true) => println!("verdict: {} preferred", label(&a, &args.a)),
        Some(false) => println!("verdict: {} preferred", label(&b, &args.b)),
    }
    Ok(())
}

#[derive(Serialize)]
struct Truth<'a> {
    psi: &'a ParamVector,
    seed: u64,
    x_min: f64,
    x_max: f64,
}

fn cmd_simulate(what: SimulateCommand, config: &RunConfig) -> Result<()> {
    let seed = config.sampler.base_seed;
    match what {
        SimulateCommand::Day { n, x_min, x_max, truth } => {
            if x_min.is_nan() || x_max.is_nan() || x_min >= x_max {
                return Err(Error::Usage("x-min must be below x-max".into()));
            }
            let psi = truth.psi(DAY_DEFAULTS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // the responses use stream 0 of the same seed
            rng.set_stream(2);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(x_min..x_max)).collect();
            let day = simulate_day(&psi, &x, seed)?;
            let ds = day.dataset.ok_or_else(|| Error::Numeric(day.unfittable.unwrap_or_default()))?;
            io::write_text(&config.out.join("dataset.csv"), &io::dataset_csv(&ds.column(1), ds.response()))?;
            io::write_json(&config.out.join("truth.json"), &Truth { psi: &psi, seed, x_min, x_max })?;
            println!("{n} observations written to {}", config.out.join("dataset.csv").display());
        }
        SimulateCommand::Corpus { regions, days, zero_days, switch_day, alpha_after, truth } => {
            if let Some(&d) = zero_days.iter().find(|&&d| d == 0 || d > days) {
                return Err(Error::Usage(format!("zero day {d} is outside 1..={days}")));
            }
            let base = truth.psi(CORPUS_DEFAULTS);
            let spec = CorpusSpec {
                n_regions: regions,
                days: (1..=days)
                    .map(|d| {
                        let mut psi = base.clone();
                        if let (Some(s), Some(a)) = (switch_day, alpha_after) {
                            if d >= s {
                                psi.alpha = a;
                            }
                        }
                        (!zero_days.contains(&d)).then_some(psi)
                    })
                    .collect(),
                seed,
            };
            let records = simulate_corpus(&spec)?;
            io::write_text(&config.out.join("regions.csv"), &io::regions_csv(&records))?;
            io::write_text(&config.out.join("cases.csv"), &io::cases_csv(&records))?;
            println!("{regions} regions over {days} days written to {}", config.out.display());
        }
    }
    Ok(())
}
