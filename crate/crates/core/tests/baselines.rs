use bglr_core::fit::SamplerSettings;
use bglr_core::pipeline::simulate_day;
use bglr_core::{bglr_fit, bnr_fit, bnr_log_likelihood, slr_fit, Dataset, ParamVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, Normal};

fn covariate(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0.0..4.0)).collect()
}

/// y = β₀ + β₁x + e^{(β′₀ + β′₁x)/2}·ε with standard normal ε.
fn normal_data(x: &[f64], beta: [f64; 2], beta_prime: [f64; 2], seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = x
        .iter()
        .map(|v| beta[0] + beta[1] * v + (0.5 * (beta_prime[0] + beta_prime[1] * v)).exp() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Dataset::simple(x, &y).unwrap()
}

fn short_run(seed: u64) -> SamplerSettings {
    SamplerSettings { n_iter: 8000, burn_in: 4000, n_chains: 4, base_seed: seed, ..Default::default() }
}

proptest! {
    #[test]
    fn slr_ignores_row_order(points in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 4..40), seed in any::<u64>()) {
        let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        prop_assume!(Dataset::simple(&x, &y).is_ok());
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let px: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let py: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let a = slr_fit(&Dataset::simple(&x, &y).unwrap()).unwrap();
        let b = slr_fit(&Dataset::simple(&px, &py).unwrap()).unwrap();
        for (u, v) in a.beta.iter().zip(&b.beta) {
            prop_assert!((u - v).abs() < 1e-9 * (1.0 + u.abs()));
        }
        prop_assert!((a.rss - b.rss).abs() < 1e-9 * (1.0 + a.rss));
    }

    #[test]
    fn bnr_matches_normal_density_product(seed in any::<u64>(), b in prop::collection::vec(-2.0..2.0f64, 4)) {
        let x = covariate(25, seed);
        let ds = normal_data(&x, [0.3, -0.7], [-0.5, 0.4], seed);
        let expected: f64 = (0..ds.n())
            .map(|i| {
                let mean = b[0] + b[1] * x[i];
                let var = (b[2] + b[3] * x[i]).exp();
                Normal::new(mean, var.sqrt()).unwrap().ln_pdf(ds.response()[i])
            })
            .sum();
        let ll = bnr_log_likelihood(&ds, &b[..2], &b[2..]);
        prop_assert!((ll - expected).abs() < 1e-9 * (1.0 + expected.abs()), "{} vs {}", ll, expected);
    }

    #[test]
    fn flat_bnr_is_homoscedastic_normal(seed in any::<u64>(), b0 in -3.0..3.0f64, b1 in -2.0..2.0f64, lv in -3.0..3.0f64) {
        let x = covariate(30, seed);
        let ds = normal_data(&x, [1.0, 1.0], [0.0, 0.0], seed);
        let var = lv.exp();
        let rss: f64 = x.iter().zip(ds.response()).map(|(xi, y)| (y - b0 - b1 * xi).powi(2)).sum();
        let n = x.len() as f64;
        let closed = -0.5 * n * (2.0 * std::f64::consts::PI * var).ln() - rss / (2.0 * var);
        let ll = bnr_log_likelihood(&ds, &[b0, b1], &[lv, 0.0]);
        prop_assert!((ll - closed).abs() < 1e-9 * (1.0 + closed.abs()));
    }
}

#[test]
fn bnr_recovers_heteroscedastic_normal_truth() {
    let x = covariate(300, 1);
    let truth = [1.5, -0.5, -1.0, 0.6];
    let ds = normal_data(&x, [truth[0], truth[1]], [truth[2], truth[3]], 2);
    let fit = bnr_fit(&ds, &short_run(3)).unwrap();
    for (p, t) in fit.summary.params.iter().zip(truth) {
        assert!(p.covers(t), "{} {:?} vs {t}", p.name, (p.q025, p.q975));
    }
    assert!(fit.rhat.unwrap().converged);
}

#[test]
fn bnr_sees_no_scedasticity_in_homoscedastic_data() {
    let x = covariate(300, 4);
    let ds = normal_data(&x, [1.0, 0.5], [-2.0, 0.0], 5);
    let fit = bnr_fit(&ds, &short_run(6)).unwrap();
    let bp1 = fit.summary.get("bp1").unwrap();
    assert!(bp1.covers(0.0) && bp1.mean.abs() < 0.15, "{bp1:?}");
}

#[test]
fn slr_agrees_with_bnr_location_on_homoscedastic_data() {
    let x = covariate(500, 7);
    let ds = normal_data(&x, [2.0, 0.8], [-1.0, 0.0], 8);
    let slr = slr_fit(&ds).unwrap();
    let fit = bnr_fit(&ds, &short_run(9)).unwrap();
    for (j, name) in ["β0", "β1"].into_iter().enumerate() {
        let p = fit.summary.get(name).unwrap();
        assert!((slr.beta[j] - p.mean).abs() < 3.0 * p.sd, "{name}: {} vs {}", slr.beta[j], p.mean);
    }
}

#[test]
fn bnr_and_bglr_locations_overlap_on_symmetric_data() {
    let x = covariate(300, 10);
    let psi = ParamVector::new(vec![1.0, 0.7], vec![-1.5, 0.2], 1.0);
    let ds = simulate_day(&psi, &x, 11).unwrap().dataset.unwrap();
    let bnr = bnr_fit(&ds, &short_run(12)).unwrap();
    let bglr = bglr_fit(&ds, &short_run(13)).unwrap();
    for name in ["β0", "β1"] {
        let (a, b) = (bnr.summary.get(name).unwrap(), bglr.summary.get(name).unwrap());
        assert!(a.q025 <= b.q975 && b.q025 <= a.q975, "{name}: {a:?} vs {b:?}");
    }
}

#[test]
fn slr_standard_errors_match_closed_form() {
    let x = [0.0, 1.0, 2.0, 4.0, 5.0];
    let y = [0.1, 0.9, 2.2, 3.8, 5.3];
    let fit = slr_fit(&Dataset::simple(&x, &y).unwrap()).unwrap();
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let s2 = fit.rss / (n - 2.0);
    assert!((fit.standard_errors[1] - (s2 / sxx).sqrt()).abs() < 1e-12);
    assert!((fit.standard_errors[0] - (s2 * (1.0 / n + xm * xm / sxx)).sqrt()).abs() < 1e-12);
}
