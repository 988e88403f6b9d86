//! Treatment-effect estimators: the recall-bias-aware joint MLE with its
//! plug-in ATE, the naive IPW/OR comparators that ignore misreporting, and
//! the dispatcher that runs any configured estimation pipeline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cells::joint_observed_prob_raw;
use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, Matrix};
use crate::logistic::{build_design, fit_logistic, SEPARATION_TOL};
use crate::model::{Dataset, RecallBiasSpec};
use crate::stratification::{
    build_blocks, fit_prognostic, fit_propensity_star, quantile_strata, stratified_estimate,
    StratMethod,
};

/// Which covariate columns enter the outcome and exposure models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub outcome_covariates: Vec<usize>,
    pub exposure_covariates: Vec<usize>,
    pub include_intercept: bool,
}

impl ModelSpec {
    /// Both models on every covariate, with an intercept.
    pub fn all(dim: usize) -> Self {
        ModelSpec {
            outcome_covariates: (0..dim).collect(),
            exposure_covariates: (0..dim).collect(),
            include_intercept: true,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        for &c in self
            .outcome_covariates
            .iter()
            .chain(&self.exposure_covariates)
        {
            if c >= dim {
                return Err(Error::CovariateIndex { index: c, dim });
            }
        }
        Ok(())
    }
}

/// Estimation methods surfaced by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ml,
    Prop,
    Prog,
    Block,
    NaiveIpw,
    NaiveOr,
}

impl Method {
    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "ml" => Some(Method::Ml),
            "prop" => Some(Method::Prop),
            "prog" => Some(Method::Prog),
            "block" => Some(Method::Block),
            "naive_ipw" | "naive-ipw" | "ipw" => Some(Method::NaiveIpw),
            "naive_or" | "naive-or" | "or" => Some(Method::NaiveOr),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Ml => "ml",
            Method::Prop => "prop",
            Method::Prog => "prog",
            Method::Block => "block",
            Method::NaiveIpw => "naive_ipw",
            Method::NaiveOr => "naive_or",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub separation: bool,
    pub merges: usize,
    pub strata: usize,
}

/// A point estimate of the ATE with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub tau_hat: f64,
    pub method: Method,
    pub spec: RecallBiasSpec,
    pub interval: Option<Interval>,
    pub diagnostics: Diagnostics,
}

/// Outcome-model coefficients: a single logistic model with a treatment
/// coefficient (the default), or fully separate models per arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutcomeCoefficients {
    /// Layout: [intercept?, gamma_z, covariate slopes...]
    Shared(Vec<f64>),
    /// Layout per arm: [intercept?, covariate slopes...]
    Separate { control: Vec<f64>, treated: Vec<f64> },
}

/// Jointly fitted outcome and exposure models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModels {
    pub outcome: OutcomeCoefficients,
    pub exposure: Vec<f64>,
    pub models: ModelSpec,
    pub loglik: f64,
    pub grad_max: f64,
    pub converged: bool,
    pub iterations: usize,
    pub separation: bool,
}

impl FittedModels {
    /// Fitted outcome probability m(z, x).
    pub fn outcome_prob(&self, z: u8, x: &[f64]) -> f64 {
        let covs = &self.models.outcome_covariates;
        match &self.outcome {
            OutcomeCoefficients::Shared(gamma) => {
                let mut idx = 0;
                let mut lin = 0.0;
                if self.models.include_intercept {
                    lin += gamma[0];
                    idx = 1;
                }
                lin += gamma[idx] * z as f64;
                idx += 1;
                for (&c, &g) in covs.iter().zip(&gamma[idx..]) {
                    lin += g * x[c];
                }
                sigmoid(lin)
            }
            OutcomeCoefficients::Separate { control, treated } => {
                let coefs = if z == 1 { treated } else { control };
                let mut idx = 0;
                let mut lin = 0.0;
                if self.models.include_intercept {
                    lin += coefs[0];
                    idx = 1;
                }
                for (&c, &g) in covs.iter().zip(&coefs[idx..]) {
                    lin += g * x[c];
                }
                sigmoid(lin)
            }
        }
    }

    /// Fitted true-exposure propensity e(x).
    pub fn propensity(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        let mut lin = 0.0;
        if self.models.include_intercept {
            lin += self.exposure[0];
            idx = 1;
        }
        for (&c, &b) in self
            .models
            .exposure_covariates
            .iter()
            .zip(&self.exposure[idx..])
        {
            lin += b * x[c];
        }
        sigmoid(lin)
    }

    /// Packed parameter vector [beta..., gamma...].
    pub fn theta(&self) -> Vec<f64> {
        let mut theta = self.exposure.clone();
        match &self.outcome {
            OutcomeCoefficients::Shared(g) => theta.extend_from_slice(g),
            OutcomeCoefficients::Separate { control, treated } => {
                theta.extend_from_slice(control);
                theta.extend_from_slice(treated);
            }
        }
        theta
    }
}

/// The observed-data log-likelihood of (Y, Z*) given X under the
/// under-reporting model, as a function of the packed parameter vector
/// [beta..., gamma...].
pub struct MleObjective {
    exposure_design: Matrix,
    outcome_base: Matrix, // [intercept?, covariates...]: no treatment column
    y: Vec<u8>,
    z_star: Vec<u8>,
    etas: (f64, f64),
    separate: bool,
    include_intercept: bool,
    pe: usize,
}

impl MleObjective {
    pub fn new(
        data: &Dataset,
        spec: &RecallBiasSpec,
        models: &ModelSpec,
        separate: bool,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        models.validate(data.dim())?;
        let etas = spec.as_constant().ok_or(Error::ConstantEtaRequired)?;
        let exposure_design = build_design(
            data.units(),
            &models.exposure_covariates,
            models.include_intercept,
            None,
        );
        let outcome_base = build_design(
            data.units(),
            &models.outcome_covariates,
            models.include_intercept,
            None,
        );
        Ok(MleObjective {
            exposure_design,
            outcome_base,
            y: data.units().iter().map(|u| u.y).collect(),
            z_star: data.units().iter().map(|u| u.z_star).collect(),
            etas,
            separate,
            include_intercept: models.include_intercept,
            pe: usize::from(models.include_intercept) + models.exposure_covariates.len(),
        })
    }

    /// Dimension of the packed parameter vector.
    pub fn dim(&self) -> usize {
        let po = self.outcome_base.cols;
        if self.separate {
            self.pe + 2 * po
        } else {
            self.pe + po + 1
        }
    }

    fn outcome_probs(&self, theta: &[f64], i: usize) -> (f64, f64) {
        let base_row = self.outcome_base.row(i);
        if self.separate {
            let po = self.outcome_base.cols;
            let g0 = &theta[self.pe..self.pe + po];
            let g1 = &theta[self.pe + po..self.pe + 2 * po];
            (sigmoid(dot(g0, base_row)), sigmoid(dot(g1, base_row)))
        } else {
            let gamma = &theta[self.pe..];
            let off = usize::from(self.include_intercept);
            let gamma_z = gamma[off];
            let mut lin = if self.include_intercept {
                gamma[0] * base_row[0]
            } else {
                0.0
            };
            for (k, &g) in gamma[off + 1..].iter().enumerate() {
                lin += g * base_row[off + k];
            }
            (sigmoid(lin), sigmoid(lin + gamma_z))
        }
    }

    pub fn loglik(&self, theta: &[f64]) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.y.len() {
            let e = sigmoid(dot(&theta[..self.pe], self.exposure_design.row(i)));
            let (m0, m1) = self.outcome_probs(theta, i);
            let p = joint_observed_prob_raw(
                m0,
                m1,
                e,
                self.etas.0,
                self.etas.1,
                self.y[i],
                self.z_star[i],
            );
            ll += p.max(1e-300).ln();
        }
        ll
    }

    /// Analytic gradient of [`Self::loglik`].
    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let (eta0, eta1) = self.etas;
        let po = self.outcome_base.cols;
        let off = usize::from(self.include_intercept);
        let mut grad = vec![0.0; self.dim()];
        for i in 0..self.y.len() {
            let w_row = self.exposure_design.row(i);
            let base_row = self.outcome_base.row(i);
            let e = sigmoid(dot(&theta[..self.pe], w_row));
            let (m0, m1) = self.outcome_probs(theta, i);
            let se = e * (1.0 - e);
            let s0 = m0 * (1.0 - m0);
            let s1 = m1 * (1.0 - m1);

            // scalar multipliers of the design rows for this unit's cell
            let (beta_scale, g1_scale, g0_scale);
            match (self.y[i], self.z_star[i]) {
                (1, 1) => {
                    beta_scale = 1.0 - e;
                    g1_scale = 1.0 - m1;
                    g0_scale = 0.0;
                }
                (0, 1) => {
                    beta_scale = 1.0 - e;
                    g1_scale = -m1;
                    g0_scale = 0.0;
                }
                (1, 0) => {
                    let p = (m1 * e * eta1 + m0 * (1.0 - e)).max(1e-300);
                    beta_scale = (m1 * eta1 - m0) * se / p;
                    g1_scale = eta1 * e * s1 / p;
                    g0_scale = (1.0 - e) * s0 / p;
                }
                (0, 0) => {
                    let q = ((1.0 - m1) * e * eta0 + (1.0 - m0) * (1.0 - e)).max(1e-300);
                    beta_scale = ((1.0 - m1) * eta0 - (1.0 - m0)) * se / q;
                    g1_scale = -eta0 * e * s1 / q;
                    g0_scale = -(1.0 - e) * s0 / q;
                }
                _ => unreachable!(),
            }
            for (j, &wv) in w_row.iter().enumerate() {
                grad[j] += beta_scale * wv;
            }
            if self.separate {
                for (k, &bv) in base_row.iter().enumerate() {
                    grad[self.pe + k] += g0_scale * bv;
                    grad[self.pe + po + k] += g1_scale * bv;
                }
            } else {
                // shared layout: [intercept?, gamma_z, slopes...]
                let combined = g0_scale + g1_scale;
                if self.include_intercept {
                    grad[self.pe] += combined * base_row[0];
                }
                grad[self.pe + off] += g1_scale; // z column is 1 only for m1
                for k in 0..po - off {
                    grad[self.pe + off + 1 + k] += combined * base_row[off + k];
                }
            }
        }
        grad
    }
}

/// Options controlling the joint MLE.
#[derive(Debug, Clone)]
pub struct MleOptions {
    pub separate_outcome_models: bool,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            separate_outcome_models: false,
            max_iter: 500,
            grad_tol: 1e-7,
        }
    }
}

/// Maximize the observed-data log-likelihood over the logistic outcome and
/// exposure models by BFGS with backtracking line search, starting from the
/// naive logistic fits (exact at eta = 0). Non-convergence after `max_iter`
/// returns the best iterate flagged, not an error.
pub fn fit_mle(
    data: &Dataset,
    spec: &RecallBiasSpec,
    models: &ModelSpec,
    opts: &MleOptions,
) -> Result<FittedModels> {
    let objective = MleObjective::new(data, spec, models, opts.separate_outcome_models)?;

    // initial values: logistic Z* ~ X and Y ~ (Z*, X)
    let beta0 = {
        let design = build_design(
            data.units(),
            &models.exposure_covariates,
            models.include_intercept,
            None,
        );
        let z: Vec<f64> = data.units().iter().map(|u| u.z_star as f64).collect();
        fit_logistic(&design, &z)?.coef
    };
    let gamma0 = {
        let design = build_design(
            data.units(),
            &models.outcome_covariates,
            models.include_intercept,
            Some(&|u: &crate::model::Unit| u.z_star as f64),
        );
        let y: Vec<f64> = data.units().iter().map(|u| u.y as f64).collect();
        fit_logistic(&design, &y)?.coef
    };
    let mut theta = beta0;
    if opts.separate_outcome_models {
        let off = usize::from(models.include_intercept);
        // the shared fit [int?, gz, slopes] seeds both arms
        let mut control = Vec::new();
        let mut treated = Vec::new();
        if models.include_intercept {
            control.push(gamma0[0]);
            treated.push(gamma0[0] + gamma0[1]);
        }
        control.extend_from_slice(&gamma0[off + 1..]);
        treated.extend_from_slice(&gamma0[off + 1..]);
        theta.extend_from_slice(&control);
        theta.extend_from_slice(&treated);
    } else {
        theta.extend_from_slice(&gamma0);
    }
    debug_assert_eq!(theta.len(), objective.dim());

    let (theta, loglik, grad_max, iterations, converged) =
        bfgs_maximize(&objective, theta, opts.max_iter, opts.grad_tol);

    let pe = objective.pe;
    let po = objective.outcome_base.cols;
    let exposure = theta[..pe].to_vec();
    let outcome = if opts.separate_outcome_models {
        OutcomeCoefficients::Separate {
            control: theta[pe..pe + po].to_vec(),
            treated: theta[pe + po..pe + 2 * po].to_vec(),
        }
    } else {
        OutcomeCoefficients::Shared(theta[pe..].to_vec())
    };
    let mut fitted = FittedModels {
        outcome,
        exposure,
        models: models.clone(),
        loglik,
        grad_max,
        converged,
        iterations,
        separation: false,
    };
    fitted.separation = data.units().iter().any(|u| {
        let e = fitted.propensity(&u.x);
        let m0 = fitted.outcome_prob(0, &u.x);
        let m1 = fitted.outcome_prob(1, &u.x);
        [e, m0, m1]
            .iter()
            .any(|&p| p < SEPARATION_TOL || p > 1.0 - SEPARATION_TOL)
    });
    Ok(fitted)
}

/// BFGS ascent on the log-likelihood (implemented as descent on its
/// negation). Accepted steps never decrease the likelihood.
fn bfgs_maximize(
    objective: &MleObjective,
    mut theta: Vec<f64>,
    max_iter: usize,
    grad_tol: f64,
) -> (Vec<f64>, f64, f64, usize, bool) {
    let dim = theta.len();
    let mut f = -objective.loglik(&theta);
    let mut g: Vec<f64> = objective.gradient(&theta).iter().map(|v| -v).collect();
    let mut h = identity(dim); // inverse Hessian approximation
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..max_iter {
        let grad_max = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if grad_max < grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut direction = neg_matvec(&h, &g);
        let mut slope = dot(&direction, &g);
        if slope >= 0.0 {
            h = identity(dim);
            direction = g.iter().map(|v| -v).collect();
            slope = dot(&direction, &g);
        }
        // Armijo backtracking
        let mut alpha = 1.0;
        let mut next = None;
        for _ in 0..60 {
            let trial: Vec<f64> = theta
                .iter()
                .zip(&direction)
                .map(|(t, d)| t + alpha * d)
                .collect();
            let f_trial = -objective.loglik(&trial);
            if f_trial.is_finite() && f_trial <= f + 1e-4 * alpha * slope {
                next = Some((trial, f_trial));
                break;
            }
            alpha *= 0.5;
        }
        let (theta_next, f_next) = match next {
            Some(v) => v,
            None => break, // no further progress possible
        };
        let g_next: Vec<f64> = objective
            .gradient(&theta_next)
            .iter()
            .map(|v| -v)
            .collect();
        let s: Vec<f64> = theta_next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            bfgs_update(&mut h, &s, &yv, sy);
        }
        theta = theta_next;
        f = f_next;
        g = g_next;
    }
    let grad_max = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if grad_max < grad_tol {
        converged = true;
    }
    (theta, -f, grad_max, iterations, converged)
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect()
}

fn neg_matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| -dot(row, v)).collect()
}

/// H <- (I - r s y')H(I - r y s') + r s s'  with r = 1/(y's)
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = h.iter().map(|row| dot(row, y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += rho * rho * yhy * s[i] * s[j] + rho * s[i] * s[j]
                - rho * (s[i] * hy[j] + hy[i] * s[j]);
        }
    }
}

/// Plug-in ATE from a joint fit: average of m(1, x) - m(0, x).
pub fn ate_ml(fit: &FittedModels, data: &Dataset, spec: &RecallBiasSpec) -> EstimateResult {
    let n = data.len() as f64;
    let tau = data
        .units()
        .iter()
        .map(|u| fit.outcome_prob(1, &u.x) - fit.outcome_prob(0, &u.x))
        .sum::<f64>()
        / n;
    EstimateResult {
        tau_hat: tau,
        method: Method::Ml,
        spec: spec.clone(),
        interval: None,
        diagnostics: Diagnostics {
            converged: fit.converged,
            iterations: fit.iterations,
            separation: fit.separation,
            merges: 0,
            strata: 0,
        },
    }
}

/// Hajek-weighted IPW contrast on the observed exposure, assuming no
/// misclassification.
pub fn naive_ipw(data: &Dataset, models: &ModelSpec) -> Result<EstimateResult> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    models.validate(data.dim())?;
    let design = build_design(
        data.units(),
        &models.exposure_covariates,
        models.include_intercept,
        None,
    );
    let z: Vec<f64> = data.units().iter().map(|u| u.z_star as f64).collect();
    let fit = fit_logistic(&design, &z)?;
    for (i, &e) in fit.fitted.iter().enumerate() {
        if !(1e-6..=1.0 - 1e-6).contains(&e) {
            return Err(Error::PositivityViolation { index: i, value: e });
        }
    }
    let (mut num1, mut den1, mut num0, mut den0) = (0.0, 0.0, 0.0, 0.0);
    for (u, &e) in data.units().iter().zip(&fit.fitted) {
        if u.z_star == 1 {
            num1 += u.y as f64 / e;
            den1 += 1.0 / e;
        } else {
            num0 += u.y as f64 / (1.0 - e);
            den0 += 1.0 / (1.0 - e);
        }
    }
    let tau = if den1 > 0.0 { num1 / den1 } else { 0.0 }
        - if den0 > 0.0 { num0 / den0 } else { 0.0 };
    Ok(EstimateResult {
        tau_hat: tau,
        method: Method::NaiveIpw,
        spec: RecallBiasSpec::none(),
        interval: None,
        diagnostics: Diagnostics {
            converged: fit.converged,
            iterations: fit.iterations,
            separation: fit.separation,
            ..Diagnostics::default()
        },
    })
}

/// Outcome-regression contrast on the observed exposure, assuming no
/// misclassification: logistic Y ~ (Z*, X), averaged plug-in difference.
pub fn naive_or(data: &Dataset, models: &ModelSpec) -> Result<EstimateResult> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    models.validate(data.dim())?;
    let design = build_design(
        data.units(),
        &models.outcome_covariates,
        models.include_intercept,
        Some(&|u: &crate::model::Unit| u.z_star as f64),
    );
    let y: Vec<f64> = data.units().iter().map(|u| u.y as f64).collect();
    let fit = fit_logistic(&design, &y)?;
    let off = usize::from(models.include_intercept);
    let gamma_z = fit.coef[off];
    let n = data.len() as f64;
    let tau = data
        .units()
        .iter()
        .map(|u| {
            let mut lin = if models.include_intercept {
                fit.coef[0]
            } else {
                0.0
            };
            for (&c, &g) in models.outcome_covariates.iter().zip(&fit.coef[off + 1..]) {
                lin += g * u.x[c];
            }
            sigmoid(lin + gamma_z) - sigmoid(lin)
        })
        .sum::<f64>()
        / n;
    Ok(EstimateResult {
        tau_hat: tau,
        method: Method::NaiveOr,
        spec: RecallBiasSpec::none(),
        interval: None,
        diagnostics: Diagnostics {
            converged: fit.converged,
            iterations: fit.iterations,
            separation: fit.separation,
            ..Diagnostics::default()
        },
    })
}

/// Full configuration of one estimation pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    pub models: ModelSpec,
    /// Stratum count for the score-based methods.
    pub n_strata: usize,
    /// Block size k for the blocking method.
    pub block_size: usize,
    /// Covariates used for the blocking distance; default all.
    pub block_covariates: Option<Vec<usize>>,
    pub separate_outcome_models: bool,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub block_max_rounds: usize,
}

impl EstimatorConfig {
    pub fn new(method: Method, dim: usize) -> Self {
        EstimatorConfig {
            method,
            models: ModelSpec::all(dim),
            n_strata: 10,
            block_size: 20,
            block_covariates: None,
            separate_outcome_models: false,
            max_iter: 500,
            grad_tol: 1e-7,
            block_max_rounds: 50,
        }
    }
}

/// Run the configured pipeline end to end on one dataset. Deterministic
/// given `(data, spec, config, seed)`; the seed only matters for blocking.
pub fn run_estimator(
    data: &Dataset,
    spec: &RecallBiasSpec,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<EstimateResult> {
    spec.validate_len(data.len())?;
    match config.method {
        Method::Ml => {
            let opts = MleOptions {
                separate_outcome_models: config.separate_outcome_models,
                max_iter: config.max_iter,
                grad_tol: config.grad_tol,
            };
            let fit = fit_mle(data, spec, &config.models, &opts)?;
            Ok(ate_ml(&fit, data, spec))
        }
        Method::NaiveIpw => naive_ipw(data, &config.models),
        Method::NaiveOr => naive_or(data, &config.models),
        Method::Prop | Method::Prog => {
            let (score_fit, method) = if config.method == Method::Prop {
                (fit_propensity_star(data, &config.models)?, StratMethod::Prop)
            } else {
                (fit_prognostic(data, &config.models)?, StratMethod::Prog)
            };
            let assignment = quantile_strata(&score_fit.scores, config.n_strata, method)?;
            let est = stratified_estimate(data, &assignment, spec)?;
            Ok(EstimateResult {
                tau_hat: est.tau,
                method: config.method,
                spec: spec.clone(),
                interval: None,
                diagnostics: Diagnostics {
                    converged: score_fit.converged,
                    iterations: 0,
                    separation: score_fit.separation,
                    merges: est.merges,
                    strata: est.stratum_sizes.len(),
                },
            })
        }
        Method::Block => {
            let covariates = config
                .block_covariates
                .clone()
                .unwrap_or_else(|| (0..data.dim()).collect());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let blocking = build_blocks(
                data,
                &covariates,
                config.block_size,
                &mut rng,
                config.block_max_rounds,
            )?;
            let est = stratified_estimate(data, &blocking.assignment, spec)?;
            Ok(EstimateResult {
                tau_hat: est.tau,
                method: Method::Block,
                spec: spec.clone(),
                interval: None,
                diagnostics: Diagnostics {
                    converged: blocking.converged,
                    iterations: blocking.rounds,
                    separation: false,
                    merges: est.merges,
                    strata: est.stratum_sizes.len(),
                },
            })
        }
    }
}
