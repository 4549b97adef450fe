//! Independent statistical oracles shared by the integration tests.
#![allow(dead_code)]

/// Sample mean, variance and skewness with standard errors from their
/// influence functions.
pub struct MomentCheck {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub skewness: f64,
    pub skewness_se: f64,
}

pub fn moment_check(xs: &[f64]) -> MomentCheck {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let skewness = m3 / m2.powf(1.5);
    let sd_of = |f: &dyn Fn(f64) -> f64| {
        let vals: Vec<f64> = xs.iter().map(|&x| f(x - mean)).collect();
        let mu = vals.iter().sum::<f64>() / n;
        (vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    };
    let variance_se = sd_of(&|d| d * d - m2);
    let skewness_se = sd_of(&|d| (d.powi(3) - m3 - 3.0 * m2 * d) / m2.powf(1.5) - 1.5 * m3 * (d * d - m2) / m2.powf(2.5));
    MomentCheck { mean, mean_se: (m2 / n).sqrt(), variance: m2, variance_se, skewness, skewness_se }
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

/// Inverse of a row-major 3 × 3 matrix by cofactors.
pub fn inverse3(m: &[f64; 9]) -> [f64; 9] {
    let c = |r0: usize, c0: usize, r1: usize, c1: usize| m[r0 * 3 + c0] * m[r1 * 3 + c1] - m[r0 * 3 + c1] * m[r1 * 3 + c0];
    let cof = [
        c(1, 1, 2, 2),
        -c(1, 0, 2, 2),
        c(1, 0, 2, 1),
        -c(0, 1, 2, 2),
        c(0, 0, 2, 2),
        -c(0, 0, 2, 1),
        c(0, 1, 1, 2),
        -c(0, 0, 1, 2),
        c(0, 0, 1, 1),
    ];
    let det = m[0] * cof[0] + m[1] * cof[1] + m[2] * cof[2];
    // inverse is the transposed cofactor matrix over the determinant
    let mut inv = [0.0; 9];
    for r in 0..3 {
        for k in 0..3 {
            inv[r * 3 + k] = cof[k * 3 + r] / det;
        }
    }
    inv
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Monte Carlo standard error of the mean of `series` by non-overlapping
/// batch means, pooling the batches of every series.
pub fn batch_means_se(series: &[Vec<f64>], batches_per_series: usize) -> f64 {
    let means: Vec<f64> = series
        .iter()
        .flat_map(|s| {
            let len = s.len() / batches_per_series;
            s.chunks_exact(len).map(mean).collect::<Vec<_>>()
        })
        .collect();
    sd(&means) / (means.len() as f64).sqrt()
}
