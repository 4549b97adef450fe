//! Small dense BFGS minimizer with backtracking line search.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stop {
    Converged,
    MaxIterations,
    LineSearchFailed,
    Aborted,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub stop: Stop,
}

pub(crate) struct Bfgs {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Cap on the Euclidean length of a single step.
    pub max_step: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Bfgs {
    /// Minimizes `eval` (value and gradient; `None` outside the domain).
    ///
    /// `norm` measures convergence on whatever scale the caller cares about,
    /// `abort` is consulted after each accepted step.
    pub fn minimize<E, N, A>(&self, x0: Vec<f64>, mut eval: E, norm: N, mut abort: A) -> Outcome
    where
        E: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
        N: Fn(&[f64], &[f64]) -> f64,
        A: FnMut(&[f64]) -> bool,
    {
        let n = x0.len();
        let mut x = x0;
        let (mut f, mut g) = match eval(&x) {
            Some(v) => v,
            None => return Outcome { gradient: vec![f64::NAN; n], x, iterations: 0, stop: Stop::LineSearchFailed },
        };
        let mut h = identity(n);
        let mut resets = 0;
        let mut iterations = 0;
        let stop = loop {
            if norm(&x, &g) < self.gradient_tolerance {
                break Stop::Converged;
            }
            if iterations >= self.max_iterations {
                break Stop::MaxIterations;
            }
            iterations += 1;

            let mut dir: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
            let mut slope = dot(&dir, &g);
            if slope.is_nan() || slope >= 0.0 {
                h = identity(n);
                dir = g.iter().map(|v| -v).collect();
                slope = dot(&dir, &g);
            }
            let len = sqrt(dot(&dir, &dir));
            let mut step = if len > self.max_step { self.max_step / len } else { 1.0 };

            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
                if let Some((ft, gt)) = eval(&trial) {
                    if ft <= f + 1e-4 * step * slope {
                        accepted = Some((trial, ft, gt));
                        break;
                    }
                }
                step *= 0.5;
            }

            let Some((x_new, f_new, g_new)) = accepted else {
                if resets < 2 {
                    resets += 1;
                    h = identity(n);
                    continue;
                }
                break Stop::LineSearchFailed;
            };

            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-300 {
                update_inverse_hessian(&mut h, &s, &y, sy);
            }
            x = x_new;
            f = f_new;
            g = g_new;
            if abort(&x) {
                break Stop::Aborted;
            }
        };
        Outcome { x, gradient: g, iterations, stop }
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

// H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
fn update_inverse_hessian(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
