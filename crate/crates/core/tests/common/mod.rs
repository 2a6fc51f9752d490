//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use hetnet_comp::runner::RunConfig;
use hetnet_comp::svm::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kernel written out independently of the library.
#[derive(Debug, Clone, Copy)]
pub enum OracleKernel {
    Linear,
    Gaussian,
}

impl OracleKernel {
    pub fn eval(self, a: [f64; 2], b: [f64; 2], scale: f64) -> f64 {
        match self {
            OracleKernel::Linear => (a[0] * b[0] + a[1] * b[1]) / (scale * scale),
            OracleKernel::Gaussian => {
                let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
                (-d2 / (2.0 * scale * scale)).exp()
            }
        }
    }
}

/// Euclidean projection onto `{a : yᵀa = 0, 0 ≤ a ≤ c}`.
///
/// The projection is `clip(v − μy, 0, c)` for the μ that zeroes
/// `g(μ) = yᵀa(μ)`. `g` is nonincreasing and piecewise linear with kinks
/// where a coordinate hits 0 or c, so the root is found exactly by
/// interpolating between the bracketing kinks.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - mu * yi).clamp(0.0, c)).collect() };
    let g = |mu: f64| -> f64 { at(mu).iter().zip(y).map(|(ai, yi)| ai * yi).sum() };
    let mut kinks: Vec<f64> = v.iter().zip(y).flat_map(|(vi, yi)| [vi * yi, (vi - c) * yi]).collect();
    kinks.sort_by(f64::total_cmp);
    if g(kinks[0]) <= 0.0 {
        return at(kinks[0]);
    }
    for w in kinks.windows(2) {
        let (g0, g1) = (g(w[0]), g(w[1]));
        if g1 <= 0.0 {
            let mu = if g0 == g1 { w[0] } else { w[0] + (w[1] - w[0]) * g0 / (g0 - g1) };
            return at(mu);
        }
    }
    at(kinks[kinks.len() - 1])
}

fn objective(q: &[f64], a: &[f64]) -> f64 {
    let n = a.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * a[j] * q[i * n + j];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Maximum of the soft-margin dual by accelerated projected gradient.
pub fn qp_oracle(x: &[[f64; 2]], labels: &[bool], kernel: OracleKernel, scale: f64, c: f64) -> f64 {
    let n = x.len();
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            q[i * n + j] = y[i] * y[j] * kernel.eval(x[i], x[j], scale);
        }
    }
    // Gershgorin bound on the largest eigenvalue
    let lip = (0..n)
        .map(|i| (0..n).map(|j| q[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let step = 1.0 / lip;

    let grad = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| 1.0 - (0..n).map(|j| q[i * n + j] * v[j]).sum::<f64>()).collect() };
    let ascend = |v: &[f64]| -> Vec<f64> {
        let g = grad(v);
        let stepped: Vec<f64> = v.iter().zip(&g).map(|(vi, gi)| vi + step * gi).collect();
        project(&stepped, &y, c)
    };

    // FISTA with a restart whenever momentum points downhill
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0_f64;
    for _ in 0..500_000 {
        let next = ascend(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // the generalized gradient is (next − z) / step
        let downhill: f64 = next.iter().zip(&z).zip(&a).map(|((ni, zi), ai)| (ni - zi) * (ni - ai)).sum();
        if downhill < 0.0 {
            t = 1.0;
            z = a.clone();
            continue;
        }
        let mom = (t - 1.0) / t_next;
        z = next.iter().zip(&a).map(|(ni, ai)| ni + mom * (ni - ai)).collect();
        a = next;
        t = t_next;
        // a is optimal iff it is a fixed point of the projected ascent step
        let fixed = ascend(&a).iter().zip(&a).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        if fixed < 1e-13 * c.max(1.0) {
            break;
        }
    }
    objective(&q, &a)
}

/// `n` random rows with both classes present.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
    assert!(n >= 2);
    let x: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
    let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    y[0] = true;
    y[1] = false;
    Dataset::new(x, y).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Defaults with the given seed and output directory.
pub fn config(seed: u64, out: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.seed = seed;
    cfg.out = out.to_path_buf();
    cfg
}
