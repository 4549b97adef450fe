mod common;

use bglr_core::mcmc::{
    alpha_log_q_ratio, chain_jobs, config_descriptor, log_posterior, log_prior, propose_alpha, propose_coef, run_chain, run_chains,
    McmcError, Target,
};
use bglr_core::pipeline::simulate_day;
use bglr_core::regression::log_likelihood;
use bglr_core::{BnrModel, GldRegression, ParamVector, PriorSpec, ProposalConfig};
use common::{batch_means_se, ks_distance, mean, moment_check, sd};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Gamma, Normal};

fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
    Normal::new(mean, var.sqrt()).unwrap().ln_pdf(x)
}

fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, rate).unwrap().ln_pdf(x)
}

/// A scalar-parameter target given by a closure.
struct Scalar<F: Fn(&[f64]) -> f64> {
    dim: usize,
    f: F,
    start: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64> Target for Scalar<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn shape_index(&self) -> Option<usize> {
        None
    }
    fn param_names(&self) -> Vec<String> {
        (0..self.dim).map(|i| format!("x{i}")).collect()
    }
    fn tag(&self) -> &str {
        "scalar"
    }
    fn log_likelihood(&self, params: &[f64]) -> f64 {
        (self.f)(params)
    }
    fn initial_point(&self) -> Result<Vec<f64>, McmcError> {
        Ok(self.start.clone())
    }
}

fn fixed_steps(n: usize, step: f64) -> ProposalConfig {
    ProposalConfig { adapt: false, ..ProposalConfig::uniform(n, step, 0.1) }
}

fn small_day(seed: u64) -> bglr_core::Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..60).map(|_| rng.random_range(0.0..4.0)).collect();
    let psi = ParamVector::new(vec![2.0, 0.5], vec![-1.0, 0.3], 2.0);
    simulate_day(&psi, &x, seed).unwrap().dataset.unwrap()
}

#[test]
fn log_prior_closed_form() {
    let prior = PriorSpec::default();
    let psi = ParamVector::new(vec![0.0; 2], vec![0.0; 2], 1.0);
    let expected = 4.0 * -0.5 * (2.0 * std::f64::consts::PI * 1e4).ln() - 1.0;
    assert!((log_prior(&psi, &prior) - expected).abs() < 1e-12);
    let bad = ParamVector::new(vec![0.0; 2], vec![0.0; 2], -1.0);
    assert_eq!(log_prior(&bad, &prior), f64::NEG_INFINITY);
}

proptest! {
    #[test]
    fn log_prior_matches_density_sum(
        beta in prop::collection::vec(-50.0..50.0f64, 2),
        beta_prime in prop::collection::vec(-5.0..5.0f64, 2),
        alpha in 0.01..20.0f64,
        v in 0.1..1e5f64,
        a in 0.2..10.0f64,
        b in 0.2..10.0f64,
    ) {
        let prior = PriorSpec { coef_variance: v, alpha_shape: a, alpha_rate: b };
        let psi = ParamVector::new(beta.clone(), beta_prime.clone(), alpha);
        let expected: f64 = beta.iter().chain(&beta_prime).map(|&c| normal_ln_pdf(c, 0.0, v)).sum::<f64>() + gamma_ln_pdf(alpha, a, b);
        prop_assert!((log_prior(&psi, &prior) - expected).abs() < 1e-10 * (1.0 + expected.abs()));
    }

    #[test]
    fn log_posterior_is_sum_of_parts(seed in 0u64..1000, alpha in 0.1..5.0f64, shift in -1.0..1.0f64) {
        let ds = small_day(seed);
        let psi = ParamVector::new(vec![2.0 + shift, 0.5], vec![-1.0, 0.3 * shift], alpha);
        let prior = PriorSpec::default();
        let lp = log_posterior(&ds, &psi, &prior);
        prop_assert!(lp.is_finite());
        prop_assert!((lp - (log_likelihood(&ds, &psi) + log_prior(&psi, &prior))).abs() < 1e-12 * (1.0 + lp.abs()));
    }

    #[test]
    fn chain_bookkeeping_is_consistent(n_iter in 2usize..400, burn_frac in 0.0..0.99f64, seed in 0u64..50, adapt_window in 1usize..50) {
        let burn_in = ((n_iter as f64) * burn_frac) as usize;
        let ds = small_day(seed);
        let target = GldRegression::new(&ds);
        let proposal = ProposalConfig { adapt_window, ..ProposalConfig::for_target(&target) };
        let init = target.initial_point().unwrap();
        let chain = run_chain(&target, &PriorSpec::default(), &proposal, n_iter, burn_in, seed, &init).unwrap();
        let kept = n_iter - burn_in;
        prop_assert_eq!(chain.n_draws(), kept);
        prop_assert_eq!(chain.draws.len(), kept * target.dim());
        prop_assert_eq!(chain.log_posterior.len(), kept);
        prop_assert_eq!(chain.acceptance.len(), target.dim());
        for rate in &chain.acceptance {
            let hits = rate * kept as f64;
            prop_assert!((0.0..=1.0).contains(rate) && (hits - hits.round()).abs() < 1e-9);
        }
        prop_assert!(chain.column(4).iter().all(|&a| a > 0.0));
    }
}

#[test]
fn posterior_rejects_nonpositive_shape() {
    let ds = small_day(1);
    let psi = ParamVector::new(vec![2.0, 0.5], vec![-1.0, 0.3], 0.0);
    assert_eq!(log_posterior(&ds, &psi, &PriorSpec::default()), f64::NEG_INFINITY);
}

#[test]
fn coef_proposal_spread() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| {
            let p = propose_coef(0.0, 1.0, &mut rng);
            assert_eq!(p.log_q_ratio, 0.0);
            p.candidate
        })
        .collect();
    let s = sd(&draws);
    // the sample sd of n normal draws has standard error about 1/√(2n)
    assert!((s - 1.0).abs() < 3.0 / (2.0f64 * 100_000.0).sqrt(), "{s}");
}

#[test]
fn alpha_proposal_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let draws: Vec<f64> = (0..1_000_000).map(|_| propose_alpha(2.0, 0.25, &mut rng).candidate).collect();
    assert!(draws.iter().all(|&a| a > 0.0));
    let m = moment_check(&draws);
    assert!((m.mean - 2.0).abs() < 3.0 * m.mean_se, "{}", m.mean);
    assert!((m.variance - 0.25).abs() < 3.0 * m.variance_se, "{}", m.variance);
}

#[test]
fn alpha_hastings_ratio_oracle() {
    // q(x | from) is Gamma(shape from²/v, rate from/v)
    let (current, candidate, v) = (1.0, 3.0, 1.0);
    let reverse = gamma_ln_pdf(current, candidate * candidate / v, candidate / v);
    let forward = gamma_ln_pdf(candidate, current * current / v, current / v);
    assert!((alpha_log_q_ratio(current, candidate, v) - (reverse - forward)).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let p = propose_alpha(0.7, 0.3, &mut rng);
        let reverse = gamma_ln_pdf(0.7, p.candidate * p.candidate / 0.3, p.candidate / 0.3);
        let forward = gamma_ln_pdf(p.candidate, 0.7 * 0.7 / 0.3, 0.7 / 0.3);
        assert!((p.log_q_ratio - (reverse - forward)).abs() < 1e-9 * (1.0 + (reverse - forward).abs()));
    }
}

#[test]
fn conjugate_normal_posterior() {
    // y ~ N(μ, 4) with the sampler's N(0, 1e4) prior on μ
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y: Vec<f64> = (0..40).map(|_| 3.0 + 2.0 * (rng.random::<f64>() - 0.5) * 3.0f64.sqrt()).collect();
    let (noise_var, prior_var) = (4.0, 1e4);
    let precision = y.len() as f64 / noise_var + 1.0 / prior_var;
    let post_mean = y.iter().sum::<f64>() / noise_var / precision;
    let post_sd = precision.recip().sqrt();

    let target = Scalar { dim: 1, f: |p: &[f64]| y.iter().map(|&v| normal_ln_pdf(v, p[0], noise_var)).sum(), start: vec![0.0] };
    let chains = run_chains(&target, &PriorSpec::default(), &ProposalConfig::for_target(&target), 20_000, 10_000, 4, 99).unwrap();
    let series: Vec<Vec<f64>> = chains.iter().map(|c| c.column(0)).collect();
    let pooled: Vec<f64> = series.concat();
    let m = mean(&pooled);
    let m_se = batch_means_se(&series, 50);
    assert!((m - post_mean).abs() < 3.0 * m_se, "mean {m} vs {post_mean} (se {m_se})");

    let sq: Vec<Vec<f64>> = series.iter().map(|s| s.iter().map(|x| (x - m).powi(2)).collect()).collect();
    let var_se = batch_means_se(&sq, 50);
    let s = sd(&pooled);
    assert!((s - post_sd).abs() < 3.0 * var_se / (2.0 * s), "sd {s} vs {post_sd}");
}

#[test]
fn symmetric_two_mode_occupancy() {
    let ln_mix = |p: &[f64]| {
        let a = -0.5 * (p[0] - 1.2).powi(2);
        let b = -0.5 * (p[0] + 1.2).powi(2);
        a.max(b) + (1.0 + (-(a - b).abs()).exp()).ln()
    };
    let target = Scalar { dim: 1, f: ln_mix, start: vec![0.0] };
    let chain = run_chain(&target, &PriorSpec::default(), &fixed_steps(1, 2.5), 100_001, 1, 3, &[0.0]).unwrap();
    let right = chain.column(0).iter().filter(|&&x| x > 0.0).count() as f64 / chain.n_draws() as f64;
    assert!((right - 0.5).abs() < 0.02, "{right}");
}

#[test]
fn bivariate_normal_target() {
    // correlation 0.6, unit marginals
    let rho: f64 = 0.6;
    let f = move |p: &[f64]| -(p[0] * p[0] - 2.0 * rho * p[0] * p[1] + p[1] * p[1]) / (2.0 * (1.0 - rho * rho));
    let target = Scalar { dim: 2, f, start: vec![0.0, 0.0] };
    let chain = run_chain(&target, &PriorSpec::default(), &fixed_steps(2, 1.6), 101_000, 1_000, 4, &[0.0, 0.0]).unwrap();
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let x = chain.column(0);
    let y = chain.column(1);
    let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a + b) / (2.0 * (1.0 + rho)).sqrt()).collect();
    let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - b) / (2.0 * (1.0 - rho)).sqrt()).collect();
    for (label, s) in [("x", &x), ("y", &y), ("sum", &sum), ("diff", &diff)] {
        let d = ks_distance(s, |v| std_normal.cdf(v));
        assert!(d < 0.02, "{label}: KS {d}");
    }
}

#[test]
fn constant_offset_leaves_chain_unchanged() {
    let ds = small_day(9);
    let base = GldRegression::new(&ds);
    let shifted = Scalar { dim: 5, f: |p: &[f64]| base.log_likelihood(p) + 1234.5, start: base.initial_point().unwrap() };
    let proposal = ProposalConfig::for_target(&base);
    let init = base.initial_point().unwrap();
    let a = run_chain(&base, &PriorSpec::default(), &proposal, 3000, 1000, 17, &init).unwrap();
    // the wrapper exposes no shape index, so compare on a coefficient-only view
    let coef_only = Scalar { dim: 5, f: |p: &[f64]| base.log_likelihood(p), start: init.clone() };
    let steps = ProposalConfig::for_target(&coef_only);
    let b = run_chain(&coef_only, &PriorSpec::default(), &steps, 3000, 1000, 17, &init).unwrap();
    let c = run_chain(&shifted, &PriorSpec::default(), &steps, 3000, 1000, 17, &init).unwrap();
    assert_eq!(b.draws, c.draws);
    assert_eq!(b.acceptance, c.acceptance);
    assert!(a.column(4).iter().all(|&v| v > 0.0));
}

#[test]
fn chains_are_reproducible() {
    let ds = small_day(10);
    let target = GldRegression::new(&ds);
    let proposal = ProposalConfig::for_target(&target);
    let a = run_chains(&target, &PriorSpec::default(), &proposal, 2000, 1000, 4, 42).unwrap();
    let b = run_chains(&target, &PriorSpec::default(), &proposal, 2000, 1000, 4, 42).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().map(|c| c.seed).collect::<Vec<_>>(), vec![42, 43, 44, 45]);
    for i in 0..4 {
        for j in i + 1..4 {
            assert_ne!(a[i].initial, a[j].initial);
            assert_ne!(a[i].draws, a[j].draws);
        }
    }
    assert_eq!(a[0].n_draws(), 1000);
}

#[test]
fn protocol_length_keeps_second_half() {
    let target = Scalar { dim: 1, f: |p: &[f64]| -0.5 * p[0] * p[0], start: vec![0.0] };
    let chain = run_chain(&target, &PriorSpec::default(), &ProposalConfig::for_target(&target), 20_000, 10_000, 1, &[0.0]).unwrap();
    assert_eq!(chain.n_draws(), 10_000);
}

#[test]
fn starting_points_are_jittered_within_half() {
    let ds = small_day(11);
    let target = GldRegression::new(&ds);
    let base = target.initial_point().unwrap();
    for job in chain_jobs(&target, 8, 3).unwrap() {
        for (v, b) in job.init.iter().zip(&base) {
            if *b == 0.0 {
                assert_eq!(*v, 0.0);
                continue;
            }
            let ratio = v / b;
            assert!((0.5..=1.5).contains(&ratio), "{ratio}");
        }
    }
}

#[test]
fn model_digests_differ_only_in_likelihood_tag() {
    let ds = small_day(12);
    let (bglr, bnr) = (GldRegression::new(&ds), BnrModel::new(&ds));
    let prior = PriorSpec::default();
    let proposal = ProposalConfig::uniform(4, 0.1, 0.1);
    let a = config_descriptor(bglr.tag(), &prior, &proposal, 20_000, 10_000);
    let b = config_descriptor(bnr.tag(), &prior, &proposal, 20_000, 10_000);
    assert_ne!(a, b);
    assert_eq!(a.replacen("likelihood=bglr", "", 1), b.replacen("likelihood=bnr", "", 1));
}

#[test]
fn degenerate_residuals_fail_initialization() {
    let x = [0.0, 1.0, 2.0, 3.0, 4.0];
    let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v).collect();
    let ds = bglr_core::Dataset::simple(&x, &y).unwrap();
    assert!(matches!(GldRegression::new(&ds).initial_point(), Err(McmcError::Initialization(_))));
}
