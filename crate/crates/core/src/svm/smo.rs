//! Sequential minimal optimisation for the soft-margin SVM dual
//!
//! ```text
//! maximise   Σ λᵢ − ½ ΣΣ λᵢ λⱼ yᵢ yⱼ K(xᵢ, xⱼ)
//! subject to Σ λᵢ yᵢ = 0,  0 ≤ λᵢ ≤ C
//! ```
//!
//! solved as the equivalent minimisation of `½λᵀQλ − eᵀλ`, `Q = yyᵀ∘K`, with
//! the maximal-violating-pair working set and the analytic two-variable
//! update.

use serde::{Deserialize, Serialize};

use super::SvmError;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    /// Stop once the maximal KKT violation gap falls below this.
    pub tol: f64,
    /// The solver gives up after this many pair updates.
    pub max_iterations: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Dual objective (maximisation form) at `alpha`.
    pub objective: f64,
}

/// Dual objective `Σλ − ½ λᵀ(yyᵀ∘K)λ` for a row-major Gram matrix.
pub fn dual_objective(kernel: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        let row = &kernel[i * n..(i + 1) * n];
        let mut s = 0.0;
        for j in 0..n {
            s += alpha[j] * y[j] * row[j];
        }
        quad += alpha[i] * y[i] * s;
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

fn in_up(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

fn in_low(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha > 0.0) || (y < 0.0 && alpha < c)
}

/// Penalty that keeps a point out of the up (`−∞`) or low (`+∞`) set.
fn penalties(alpha: f64, y: f64, c: f64) -> (f64, f64) {
    let up = if in_up(alpha, y, c) { 0.0 } else { f64::NEG_INFINITY };
    let low = if in_low(alpha, y, c) { 0.0 } else { f64::INFINITY };
    (up, low)
}

const LANES: usize = 4;

/// Maximal violating pair over `score = −y∘∇`: `i` maximises the score
/// over the up set, `j` minimises it over the low set, first index on ties.
fn select(score: &[f64], up_pen: &[f64], low_pen: &[f64]) -> (usize, f64, usize, f64) {
    let mut hi = [f64::NEG_INFINITY; LANES];
    let mut lo = [f64::INFINITY; LANES];
    let chunks = score.chunks_exact(LANES).zip(up_pen.chunks_exact(LANES)).zip(low_pen.chunks_exact(LANES));
    for ((s, u), l) in chunks {
        for k in 0..LANES {
            let a = s[k] + u[k];
            let b = s[k] + l[k];
            hi[k] = if a > hi[k] { a } else { hi[k] };
            lo[k] = if b < lo[k] { b } else { lo[k] };
        }
    }
    let mut g_max = hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut g_min = lo.iter().copied().fold(f64::INFINITY, f64::min);
    for t in score.len() / LANES * LANES..score.len() {
        g_max = g_max.max(score[t] + up_pen[t]);
        g_min = g_min.min(score[t] + low_pen[t]);
    }
    let first = |pen: &[f64], target: f64| {
        if target.is_finite() {
            score.iter().zip(pen).position(|(s, p)| s + p == target).unwrap_or(usize::MAX)
        } else {
            usize::MAX
        }
    };
    (first(up_pen, g_max), g_max, first(low_pen, g_min), g_min)
}

/// Solves the dual for the Gram matrix `kernel` (n×n, row-major), labels
/// `y ∈ {−1, +1}` and box constraint `c`.
pub fn solve(kernel: &[f64], y: &[f64], c: f64, params: &SmoParams) -> Result<SmoSolution, SvmError> {
    let n = y.len();
    if kernel.len() != n * n {
        return Err(SvmError::LengthMismatch {
            left: kernel.len(),
            right: n * n,
        });
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(SvmError::InvalidBoxConstraint(c));
    }
    if kernel.iter().any(|v| !v.is_finite()) {
        return Err(SvmError::NonFiniteFeature);
    }

    let mut alpha = vec![0.0; n];
    // −y∘∇ of ½λᵀQλ − eᵀλ; the gradient itself is −y∘score
    let mut score: Vec<f64> = y.to_vec();
    let (mut up_pen, mut low_pen): (Vec<f64>, Vec<f64>) = y.iter().map(|&yt| penalties(0.0, yt, c)).unzip();
    let mut iterations = 0;

    loop {
        let (i, g_max, j, g_min) = select(&score, &up_pen, &low_pen);
        if i == usize::MAX || j == usize::MAX || g_max - g_min < params.tol {
            break;
        }
        if iterations >= params.max_iterations {
            return Err(SvmError::NotConverged { iterations });
        }
        iterations += 1;
        let (grad_i, grad_j) = (-y[i] * score[i], -y[j] * score[j]);

        let k_ii = kernel[i * n + i];
        let k_jj = kernel[j * n + j];
        let k_ij = kernel[i * n + j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        // Q_ii + Q_jj - 2 y_i y_j Q_ij is the same for either label pairing
        let quad = (k_ii + k_jj - 2.0 * k_ij).max(TAU);

        if y[i] != y[j] {
            let delta = (-grad_i - grad_j) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad_i - grad_j) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let d_i = (alpha[i] - old_i) * y[i];
        let d_j = (alpha[j] - old_j) * y[j];
        let row_i = &kernel[i * n..(i + 1) * n];
        let row_j = &kernel[j * n..(j + 1) * n];
        for ((s, &ki), &kj) in score.iter_mut().zip(row_i).zip(row_j) {
            *s -= ki * d_i + kj * d_j;
        }
        for t in [i, j] {
            (up_pen[t], low_pen[t]) = penalties(alpha[t], y[t], c);
        }
    }

    for a in &mut alpha {
        *a = a.clamp(0.0, c);
    }
    let bias = bias_from_kkt(kernel, y, &alpha, c);
    let objective = dual_objective(kernel, y, &alpha);
    Ok(SmoSolution {
        alpha,
        bias,
        iterations,
        objective,
    })
}

/// Kernel expansion without bias, `f̃(xₜ) = Σ λⱼ yⱼ K(xⱼ, xₜ)`.
pub(crate) fn expansion(kernel: &[f64], y: &[f64], alpha: &[f64]) -> Vec<f64> {
    let n = alpha.len();
    let mut f = vec![0.0; n];
    for j in 0..n {
        let w = alpha[j] * y[j];
        if w == 0.0 {
            continue;
        }
        let row = &kernel[j * n..(j + 1) * n];
        for t in 0..n {
            f[t] += w * row[t];
        }
    }
    f
}

/// Bias from the free support vectors, or the midpoint of the interval the
/// KKT conditions allow when every multiplier sits at a bound.
fn bias_from_kkt(kernel: &[f64], y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let f = expansion(kernel, y, alpha);
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for t in 0..alpha.len() {
        let r = y[t] - f[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += r;
            free_n += 1;
        } else {
            let at_zero = alpha[t] <= 0.0;
            // λ = 0 needs yf ≥ 1, λ = C needs yf ≤ 1
            if (y[t] > 0.0) == at_zero {
                lo = lo.max(r);
            } else {
                hi = hi.min(r);
            }
        }
    }
    if free_n > 0 {
        free_sum / free_n as f64
    } else {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_gram(x: &[[f64; 2]]) -> Vec<f64> {
        let n = x.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = x[i][0] * x[j][0] + x[i][1] * x[j][1];
            }
        }
        k
    }

    #[test]
    fn separable_pair_closed_form() {
        // points ±1 on the x axis: w = 1, b = 0, λ = ½ each
        let x = [[1.0, 0.0], [-1.0, 0.0]];
        let y = [1.0, -1.0];
        let sol = solve(&linear_gram(&x), &y, 100.0, &SmoParams::default()).unwrap();
        assert!((sol.alpha[0] - 0.5).abs() < 1e-9);
        assert!((sol.alpha[1] - 0.5).abs() < 1e-9);
        assert!(sol.bias.abs() < 1e-9);
        assert!((sol.objective - 0.5).abs() < 1e-9);
    }

    #[test]
    fn box_and_equality_hold() {
        let x = [[0.0, 0.0], [1.0, 1.0], [0.2, 0.9], [0.8, 0.1], [0.5, 0.5]];
        let y = [1.0, 1.0, -1.0, -1.0, 1.0];
        let c = 0.7;
        let sol = solve(&linear_gram(&x), &y, c, &SmoParams::default()).unwrap();
        assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        let eq: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(eq.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_box() {
        assert!(matches!(
            solve(&[1.0], &[1.0], 0.0, &SmoParams::default()),
            Err(SvmError::InvalidBoxConstraint(_))
        ));
    }

    #[test]
    fn iteration_budget_is_enforced() {
        let x = [[0.0, 0.0], [1.0, 1.0], [0.2, 0.9], [0.8, 0.1]];
        let y = [1.0, 1.0, -1.0, -1.0];
        let p = SmoParams { tol: 1e-12, max_iterations: 0 };
        assert!(matches!(solve(&linear_gram(&x), &y, 1.0, &p), Err(SvmError::NotConverged { .. })));
    }
}
