//! Levenberg–Marquardt fit of `a · exp(−(x−c)²/w²)`.

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};
use crate::wavefield::Grid1D;

const MAX_ITERATIONS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianFitResult<T> {
    pub amplitude: T,
    pub center: T,
    /// 1/e half-width of the fitted profile.
    pub width: T,
    /// `‖model − samples‖₂`
    pub residual_l2: T,
    pub iterations: usize,
}

/// Fits samples taken on the nodes of `grid`.
pub fn fit_gaussian_width<T: Real>(samples: &[T], grid: &Grid1D<T>) -> Result<GaussianFitResult<T>> {
    fit_gaussian(samples, &grid.coordinates())
}

/// Fits `a · exp(−(x−c)²/w²)` to `(xs, samples)`, starting from moments:
/// `a = max`, `c = centroid`, `w = √2 · rms`.
pub fn fit_gaussian<T: Real>(samples: &[T], xs: &[T]) -> Result<GaussianFitResult<T>> {
    if samples.len() != xs.len() || samples.len() < 3 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: format!(
                "need at least 3 samples matching the coordinates ({} vs {})",
                samples.len(),
                xs.len()
            ),
        });
    }
    let xs: Vec<f64> = xs.iter().map(|&v| to_f64(v)).collect();
    let ys: Vec<f64> = samples.iter().map(|&v| to_f64(v)).collect();
    if ys.iter().chain(&xs).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "non-finite value".into(),
        });
    }

    let mut params = initial_guess(&xs, &ys);
    let mut cost = cost_of(&xs, &ys, &params);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&xs, &ys, &params);
        let gradient = jtr.iter().map(|g| g.abs()).fold(0.0, f64::max);
        if gradient <= 1e-15 * (1.0 + cost) {
            converged = true;
            break;
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for d in 0..3 {
                a[d][d] += lambda * jtj[d][d].max(1e-300);
            }
            let Some(step) = solve3(a, [-jtr[0], -jtr[1], -jtr[2]]) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [params[0] + step[0], params[1] + step[1], params[2] + step[2]];
            let trial_cost = cost_of(&xs, &ys, &trial);
            if trial[2] != 0.0 && trial_cost.is_finite() && trial_cost <= cost {
                let relative = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                let step_size = step
                    .iter()
                    .zip(&trial)
                    .map(|(s, p)| s.abs() / (p.abs() + 1e-300))
                    .fold(0.0, f64::max);
                params = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if relative < 1e-14 || step_size < 1e-12 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !improved {
            // no downhill step at any damping: a stationary point
            converged = true;
            break;
        }
    }

    let residual_l2 = cost.sqrt();
    if !converged {
        return Err(Error::FitNotConverged {
            iterations,
            best_residual: residual_l2,
        });
    }
    Ok(GaussianFitResult {
        amplitude: lit(params[0]),
        center: lit(params[1]),
        width: lit(params[2].abs()),
        residual_l2: lit(residual_l2),
        iterations,
    })
}

fn initial_guess(xs: &[f64], ys: &[f64]) -> [f64; 3] {
    let amplitude = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = ys.iter().map(|&y| y.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    let span = xs.last().unwrap() - xs.first().unwrap();
    if total <= 0.0 {
        return [amplitude, 0.5 * (xs[0] + xs[xs.len() - 1]), span.abs() / 4.0];
    }
    let centroid = weights.iter().zip(xs).map(|(w, x)| w * x).sum::<f64>() / total;
    let variance = weights
        .iter()
        .zip(xs)
        .map(|(w, x)| w * (x - centroid) * (x - centroid))
        .sum::<f64>()
        / total;
    let width = (2.0 * variance).sqrt();
    let width = if width > 0.0 { width } else { span.abs() / xs.len() as f64 };
    [amplitude, centroid, width]
}

fn cost_of(xs: &[f64], ys: &[f64], p: &[f64; 3]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let u = (x - p[1]) / p[2];
            let r = p[0] * (-u * u).exp() - y;
            r * r
        })
        .sum()
}

/// `JᵀJ` and `Jᵀr` for residuals `r = model − y`.
fn normal_equations(xs: &[f64], ys: &[f64], p: &[f64; 3]) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut jtj = [[0.0; 3]; 3];
    let mut jtr = [0.0; 3];
    let [a, c, w] = *p;
    for (&x, &y) in xs.iter().zip(ys) {
        let d = x - c;
        let e = (-(d * d) / (w * w)).exp();
        let r = a * e - y;
        let j = [e, a * e * 2.0 * d / (w * w), a * e * 2.0 * d * d / (w * w * w)];
        for row in 0..3 {
            jtr[row] += j[row] * r;
            for col in 0..3 {
                jtj[row][col] += j[row] * j[col];
            }
        }
    }
    (jtj, jtr)
}

#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
