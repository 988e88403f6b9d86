//! Plain logistic regression by iteratively reweighted least squares.
//!
//! Used for the naive comparators, the biased propensity score, the
//! prognostic score, and as the initializer of the joint MLE.

use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, solve_spd, Matrix};

/// How close a fitted probability may get to 0/1 before the fit is flagged
/// as (quasi-)separated.
pub const SEPARATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub coef: Vec<f64>,
    pub fitted: Vec<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Some fitted probability pinned to within [`SEPARATION_TOL`] of 0 or 1.
    pub separation: bool,
}

impl LogisticFit {
    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(dot(&self.coef, row))
    }
}

fn loglik(linear: &[f64], y: &[f64]) -> f64 {
    // log L = sum y*eta - log(1 + exp(eta)), stable form
    linear
        .iter()
        .zip(y)
        .map(|(&eta, &yi)| {
            let log1pexp = if eta > 0.0 {
                eta + (-eta).exp().ln_1p()
            } else {
                eta.exp().ln_1p()
            };
            yi * eta - log1pexp
        })
        .sum()
}

/// Fit `Pr(y = 1 | row) = sigmoid(coef . row)` by Newton steps with
/// step-halving. `design` rows must already contain the intercept column if
/// one is wanted.
pub fn fit_logistic(design: &Matrix, y: &[f64]) -> Result<LogisticFit> {
    fit_logistic_opts(design, y, 200, 1e-9)
}

pub fn fit_logistic_opts(
    design: &Matrix,
    y: &[f64],
    max_iter: usize,
    grad_tol: f64,
) -> Result<LogisticFit> {
    let n = design.rows;
    let p = design.cols;
    if n == 0 || n != y.len() {
        return Err(Error::EmptyDataset);
    }
    let mut coef = vec![0.0; p];
    let mut linear = vec![0.0; n];
    let mut ll = loglik(&linear, y);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..max_iter {
        iterations = iter + 1;
        // gradient X'(y - p) and Hessian X'WX with W = p(1-p)
        let mut grad = vec![0.0; p];
        let mut hess = Matrix::zeros(p, p);
        for i in 0..n {
            let pi = sigmoid(linear[i]);
            let w = (pi * (1.0 - pi)).max(1e-12);
            let resid = y[i] - pi;
            let row = design.row(i);
            for j in 0..p {
                grad[j] += resid * row[j];
                for k in 0..=j {
                    hess.add_at(j, k, w * row[j] * row[k]);
                }
            }
        }
        for j in 0..p {
            for k in j + 1..p {
                let v = hess.get(k, j);
                hess.set(j, k, v);
            }
        }
        let grad_max = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if grad_max < grad_tol {
            converged = true;
            break;
        }
        let step = match solve_spd(&hess, &grad) {
            Some(s) => s,
            None => break,
        };
        // step-halving until the log-likelihood does not decrease
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = coef
                .iter()
                .zip(&step)
                .map(|(c, s)| c + scale * s)
                .collect();
            let trial_linear: Vec<f64> =
                (0..n).map(|i| dot(&trial, design.row(i))).collect();
            let trial_ll = loglik(&trial_linear, y);
            if trial_ll.is_finite() && trial_ll >= ll - 1e-12 {
                coef = trial;
                linear = trial_linear;
                ll = trial_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let fitted: Vec<f64> = linear.iter().map(|&eta| sigmoid(eta)).collect();
    let separation = fitted
        .iter()
        .any(|&pi| pi < SEPARATION_TOL || pi > 1.0 - SEPARATION_TOL);
    Ok(LogisticFit {
        coef,
        fitted,
        loglik: ll,
        converged,
        iterations,
        separation,
    })
}

/// Build a design matrix from dataset covariate columns, an optional
/// intercept, and optional extra leading columns (e.g. the exposure).
pub(crate) fn build_design(
    units: &[crate::model::Unit],
    covariates: &[usize],
    include_intercept: bool,
    leading: Option<&dyn Fn(&crate::model::Unit) -> f64>,
) -> Matrix {
    let extra = usize::from(include_intercept) + usize::from(leading.is_some());
    let p = covariates.len() + extra;
    let mut m = Matrix::zeros(units.len(), p);
    for (i, u) in units.iter().enumerate() {
        let mut j = 0;
        if include_intercept {
            m.set(i, j, 1.0);
            j += 1;
        }
        if let Some(f) = leading {
            m.set(i, j, f(u));
            j += 1;
        }
        for &c in covariates {
            m.set(i, j, u.x[c]);
            j += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn simulate(n: usize, beta: &[f64], seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = beta.len();
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = vec![1.0];
            for _ in 1..p {
                row.push(rng.gen_range(-1.0..1.0));
            }
            let pi = sigmoid(dot(beta, &row));
            y.push(if rng.gen_bool(pi) { 1.0 } else { 0.0 });
            rows.push(row);
        }
        (Matrix::from_rows(rows), y)
    }

    #[test]
    fn recovers_generating_coefficients() {
        let beta = [0.3, -0.8, 1.2];
        let (x, y) = simulate(20_000, &beta, 11);
        let fit = fit_logistic(&x, &y).unwrap();
        assert!(fit.converged);
        for (est, truth) in fit.coef.iter().zip(beta.iter()) {
            assert!(
                (est - truth).abs() < 0.08,
                "coef {est} too far from {truth}"
            );
        }
    }

    #[test]
    fn gradient_vanishes_at_solution() {
        let (x, y) = simulate(500, &[0.1, 0.5], 3);
        let fit = fit_logistic(&x, &y).unwrap();
        let mut grad = vec![0.0; 2];
        for i in 0..x.rows {
            let pi = fit.predict(x.row(i));
            for j in 0..2 {
                grad[j] += (y[i] - pi) * x.row(i)[j];
            }
        }
        assert!(grad.iter().all(|g| g.abs() < 1e-7));
    }

    #[test]
    fn flags_separation() {
        // perfectly separated data
        let rows = (0..20)
            .map(|i| vec![1.0, if i < 10 { -1.0 } else { 1.0 }])
            .collect();
        let x = Matrix::from_rows(rows);
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        let fit = fit_logistic(&x, &y).unwrap();
        assert!(fit.separation);
    }
}
