//! Run configuration as a flat `key = value` file.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors.
//! [`RunConfig::to_text`] writes every key, so the text echoed into a
//! manifest reproduces the run.

use std::path::PathBuf;

use bglr_core::digest::Digester;
use bglr_core::fit::SamplerSettings;
use bglr_core::pipeline::{FitConfig, ModelSet};
use bglr_core::{PlugIn, RhatVariant};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sampler: SamplerSettings,
    /// Demand R̂, which needs at least two chains.
    pub rhat: bool,
    pub models: ModelSet,
    pub regions: Option<PathBuf>,
    pub cases: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    pub first_day: Option<usize>,
    pub last_day: Option<usize>,
    /// Worker threads; `None` uses every available processor.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerSettings::default(),
            rhat: false,
            models: ModelSet::default(),
            regions: None,
            cases: None,
            table: None,
            dataset: None,
            out: PathBuf::from("bglr-out"),
            first_day: None,
            last_day: None,
            threads: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("invalid value {value:?} for {key}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("invalid value {value:?} for {key}: expected true or false")),
    }
}

fn path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn show_usize(v: Option<usize>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_usize(key: &str, value: &str) -> Result<Option<usize>, String> {
    if value.is_empty() {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl RunConfig {
    /// Parses `text` on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.apply_text(text)?;
        Ok(config)
    }

    /// Applies every assignment in `text`, later lines winning.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config { line: i + 1, message: format!("expected key = value, found {line:?}") })?;
            self.set(key.trim(), value.trim()).map_err(|message| Error::Config { line: i + 1, message })?;
        }
        Ok(())
    }

    /// Sets one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let s = &mut self.sampler;
        match key {
            "coef_variance" => s.prior.coef_variance = parse(key, value)?,
            "alpha_shape" => s.prior.alpha_shape = parse(key, value)?,
            "alpha_rate" => s.prior.alpha_rate = parse(key, value)?,
            "iterations" => s.n_iter = parse(key, value)?,
            "burn_in" => s.burn_in = parse(key, value)?,
            "chains" => s.n_chains = parse(key, value)?,
            "seed" => s.base_seed = parse(key, value)?,
            "coef_step" => s.coef_step = parse(key, value)?,
            "alpha_proposal_variance" => s.alpha_proposal_variance = parse(key, value)?,
            "adapt" => s.adapt = parse_bool(key, value)?,
            "adapt_target_rate" => s.adapt_target_rate = parse(key, value)?,
            "adapt_window" => s.adapt_window = parse(key, value)?,
            "plug_in" => {
                s.plug_in = match value {
                    "mean" => PlugIn::Mean,
                    "median" => PlugIn::Median,
                    _ => return Err(format!("invalid value {value:?} for plug_in: expected mean or median")),
                }
            }
            "rhat_variant" => {
                s.rhat_variant = match value {
                    "classical" => RhatVariant::Classical,
                    "split" => RhatVariant::Split,
                    _ => return Err(format!("invalid value {value:?} for rhat_variant: expected classical or split")),
                }
            }
            "rhat" => self.rhat = parse_bool(key, value)?,
            "bglr" => self.models.bglr = parse_bool(key, value)?,
            "bnr" => self.models.bnr = parse_bool(key, value)?,
            "slr" => self.models.slr = parse_bool(key, value)?,
            "regions" => self.regions = path(value),
            "cases" => self.cases = path(value),
            "table" => self.table = path(value),
            "dataset" => self.dataset = path(value),
            "out" => self.out = PathBuf::from(value),
            "first_day" => self.first_day = opt_usize(key, value)?,
            "last_day" => self.last_day = opt_usize(key, value)?,
            "threads" => self.threads = opt_usize(key, value)?.filter(|&t| t > 0),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies a `key=value` override from the command line.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| Error::Usage(format!("expected key=value, found {assignment:?}")))?;
        self.set(key.trim(), value.trim()).map_err(Error::Usage)
    }

    fn statistical_lines(&self) -> Vec<String> {
        let s = &self.sampler;
        vec![
            format!("coef_variance = {:?}", s.prior.coef_variance),
            format!("alpha_shape = {:?}", s.prior.alpha_shape),
            format!("alpha_rate = {:?}", s.prior.alpha_rate),
            format!("iterations = {}", s.n_iter),
            format!("burn_in = {}", s.burn_in),
            format!("chains = {}", s.n_chains),
            format!("seed = {}", s.base_seed),
            format!("coef_step = {:?}", s.coef_step),
            format!("alpha_proposal_variance = {:?}", s.alpha_proposal_variance),
            format!("adapt = {}", s.adapt),
            format!("adapt_target_rate = {:?}", s.adapt_target_rate),
            format!("adapt_window = {}", s.adapt_window),
            format!("plug_in = {}", if s.plug_in == PlugIn::Mean { "mean" } else { "median" }),
            format!("rhat_variant = {}", if s.rhat_variant == RhatVariant::Classical { "classical" } else { "split" }),
            format!("rhat = {}", self.rhat),
            format!("bglr = {}", self.models.bglr),
            format!("bnr = {}", self.models.bnr),
            format!("slr = {}", self.models.slr),
            format!("first_day = {}", show_usize(self.first_day)),
            format!("last_day = {}", show_usize(self.last_day)),
        ]
    }

    /// Every key, one per line, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut lines = self.statistical_lines();
        lines.extend([
            format!("regions = {}", show_path(&self.regions)),
            format!("cases = {}", show_path(&self.cases)),
            format!("table = {}", show_path(&self.table)),
            format!("dataset = {}", show_path(&self.dataset)),
            format!("out = {}", self.out.display()),
            format!("threads = {}", show_usize(self.threads)),
        ]);
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }

    /// Digest of the settings that change results; paths and threads are
    /// left out.
    pub fn digest(&self) -> String {
        Digester::new().str(&self.statistical_lines().join("\n")).finish()
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sampler;
        if s.burn_in >= s.n_iter {
            return Err(Error::Usage(format!("burn_in ({}) must be smaller than iterations ({})", s.burn_in, s.n_iter)));
        }
        if s.n_chains == 0 {
            return Err(Error::Usage("chains must be at least 1".into()));
        }
        if self.rhat && s.n_chains < 2 {
            return Err(Error::Usage(format!("R-hat needs at least 2 chains, got {}", s.n_chains)));
        }
        if let (Some(a), Some(b)) = (self.first_day, self.last_day) {
            if a == 0 || a > b {
                return Err(Error::Usage(format!("invalid day range {a}..={b}")));
            }
        }
        Ok(())
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig { sampler: self.sampler.clone(), models: self.models }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trips() {
        let mut c = RunConfig::default();
        c.set("coef_step", "0.25").unwrap();
        c.set("plug_in", "median").unwrap();
        c.set("regions", "data/regions.csv").unwrap();
        c.set("last_day", "12").unwrap();
        c.set("alpha_rate", "0.1").unwrap();
        let back = RunConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.digest(), c.digest());
    }

    #[test]
    fn comments_and_errors() {
        let c = RunConfig::from_text("# protocol\niterations = 500 # short\n\nburn_in=100\n").unwrap();
        assert_eq!((c.sampler.n_iter, c.sampler.burn_in), (500, 100));
        assert!(matches!(RunConfig::from_text("chains = two"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(RunConfig::from_text("\nfoo = 1"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(RunConfig::from_text("chains"), Err(Error::Config { line: 1, .. })));
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        c.validate().unwrap();
        c.rhat = true;
        c.sampler.n_chains = 1;
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        c.rhat = false;
        c.validate().unwrap();
        c.sampler.burn_in = c.sampler.n_iter;
        assert!(c.validate().is_err());
    }

    #[test]
    fn digest_ignores_paths() {
        let a = RunConfig::default();
        let b = RunConfig { out: "elsewhere".into(), threads: Some(3), ..RunConfig::default() };
        assert_eq!(a.digest(), b.digest());
        let c = RunConfig::from_text("seed = 1").unwrap();
        assert_ne!(a.digest(), c.digest());
    }
}
