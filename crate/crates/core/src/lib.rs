//! Heteroscedastic Bayesian generalized logistic regression.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.
//! It contains the numerical pieces only: polygamma functions, the type I
//! generalized logistic distribution, the regression likelihood with an
//! identity link for location and a log link for scale, a blockwise
//! random-walk Metropolis-Hastings sampler, posterior diagnostics, the
//! normal baselines and the per-day power-law workflow. File formats, the
//! worker pool and the command line live in the `bglr` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod baselines;
pub mod diagnostics;
pub mod digest;
pub mod fit;
pub mod gld;
pub mod mcmc;
pub mod pipeline;
pub mod regression;
pub mod specfun;

mod linalg;
mod math;
mod optim;

pub use baselines::{bnr_fit, bnr_log_likelihood, slr_fit, BnrModel, SlrFit};
pub use diagnostics::{
    dic, dic_difference, gelman_rubin, summarize, DicResult, ParamSummary, PlugIn, PosteriorSummary, RhatReport, RhatVariant,
};
pub use fit::{bglr_fit, BayesFit, SamplerSettings};
pub use gld::{mle_fit, mom_estimate, Collapse, FitStatus, GldError, GldMoments, GldParams};
pub use mcmc::{Chain, GldRegression, PriorSpec, ProposalConfig, Target};
pub use regression::{Dataset, DatasetError, ParamVector};
