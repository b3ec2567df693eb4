//! ARMA(1,1)-GARCH(1,1) with Gaussian innovations.
//!
//! ```text
//! r_t     = mu + phi (r_{t-1} - mu) + theta a_{t-1} + a_t
//! a_t     = sigma_t eps_t,   eps_t ~ iid N(0, 1)
//! sigma_t^2 = gamma + alpha a_{t-1}^2 + beta sigma_{t-1}^2
//! ```
//!
//! The recursion starts from `a_0 = 0`, `r_0 = mu` and `sigma_0^2` equal to
//! the sample variance of the series, so the first step gives
//! `a_1 = r_1 - mu` and `sigma_1^2 = gamma + beta * var`.
//!
//! Fitting minimizes the negative log-likelihood with Nelder-Mead over
//! unconstrained coordinates that map onto the admissible region by
//! construction (scaled tanh for the ARMA terms, exp for the intercept and a
//! softmax onto the simplex `alpha + beta < 1`).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{FactorPanel, IngestError, NamedSeries, YearMonth};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::series::{mean, sample_variance, ReturnSeries};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Largest magnitude the tanh map can produce for phi and theta.
const ARMA_BOUND: f64 = 1.0 - 1e-6;

/// Objective value substituted for a non-finite likelihood during search.
const PENALTY: f64 = 1e100;

/// Fitted persistence above this is clamped and flagged.
pub const MAX_PERSISTENCE: f64 = 0.999;

pub const MIN_FIT_LEN: usize = 30;
pub const MIN_LIKELIHOOD_LEN: usize = 10;
pub const BURN_IN: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("series {label} too short: {found} observations, need {required}")]
    TooShort {
        label: String,
        found: usize,
        required: usize,
    },
    #[error("degenerate input: series {0} has zero variance")]
    Degenerate(String),
    #[error("non-finite likelihood")]
    NonFinite,
    #[error(transparent)]
    Panel(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmaGarchParams {
    pub mu: f64,
    pub phi: f64,
    pub theta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ArmaGarchParams {
    pub const NAMES: [&'static str; 6] = ["mu", "phi", "theta", "gamma", "alpha", "beta"];

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidParams(format!("{m}: {self:?}")));
        if !self.to_array().iter().all(|v| v.is_finite()) {
            return bad("non-finite value");
        }
        if self.phi.abs() >= 1.0 || self.theta.abs() >= 1.0 {
            return bad("|phi| and |theta| must be below 1");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return bad("alpha and beta must be non-negative");
        }
        if self.alpha + self.beta >= 1.0 {
            return bad("alpha + beta must be below 1");
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.mu, self.phi, self.theta, self.gamma, self.alpha, self.beta]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            mu: v[0],
            phi: v[1],
            theta: v[2],
            gamma: v[3],
            alpha: v[4],
            beta: v[5],
        }
    }

    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta
    }

    /// `gamma / (1 - alpha - beta)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.gamma / (1.0 - self.persistence())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ArmaGarchFit {
    pub label: String,
    pub params: ArmaGarchParams,
    /// Asymptotic standard errors in [`ArmaGarchParams::NAMES`] order, from
    /// the inverse numerical Hessian. `None` when it is not positive definite.
    pub std_errors: Option<[f64; 6]>,
    pub log_likelihood: f64,
    pub conditional_sigma: Vec<f64>,
    pub shocks: Vec<f64>,
    pub innovations: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Jittered restarts on top of the default starting point.
    pub restarts: usize,
    pub seed: u64,
    pub f_tol: f64,
    pub x_tol: f64,
    pub std_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            restarts: 4,
            seed: 0,
            f_tol: 1e-8,
            x_tol: 1e-6,
            std_errors: true,
        }
    }
}

/// Runs the recursion, returning the negative log-likelihood. When `out` is
/// given, the shocks and conditional variances are written into it.
fn recursion(p: &ArmaGarchParams, r: &[f64], var0: f64, mut out: Option<(&mut [f64], &mut [f64])>) -> f64 {
    let mut nll = 0.0;
    let mut a_prev = 0.0;
    let mut dev_prev = 0.0;
    let mut s2_prev = var0;
    for (t, &rt) in r.iter().enumerate() {
        let s2 = p.gamma + p.alpha * a_prev * a_prev + p.beta * s2_prev;
        let dev = rt - p.mu;
        let a = dev - p.phi * dev_prev - p.theta * a_prev;
        nll += HALF_LN_2PI + 0.5 * s2.ln() + 0.5 * a * a / s2;
        if let Some((shocks, vars)) = out.as_mut() {
            shocks[t] = a;
            vars[t] = s2;
        }
        a_prev = a;
        dev_prev = dev;
        s2_prev = s2;
    }
    nll
}

fn check_len(series: &ReturnSeries, required: usize) -> Result<(), ModelError> {
    if series.len() < required {
        return Err(ModelError::TooShort {
            label: series.label().to_string(),
            found: series.len(),
            required,
        });
    }
    Ok(())
}

/// Negative Gaussian log-likelihood of the series under `params`.
pub fn neg_log_likelihood(params: &ArmaGarchParams, series: &ReturnSeries) -> Result<f64, ModelError> {
    params.validate()?;
    check_len(series, MIN_LIKELIHOOD_LEN)?;
    let v = recursion(params, series.values(), sample_variance(series.values()), None);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ModelError::NonFinite)
    }
}

/// Deterministic forward pass producing shocks, volatilities and innovations.
pub fn filter(params: &ArmaGarchParams, series: &ReturnSeries) -> Result<ArmaGarchFit, ModelError> {
    params.validate()?;
    Ok(filter_unchecked(params, series))
}

fn filter_unchecked(params: &ArmaGarchParams, series: &ReturnSeries) -> ArmaGarchFit {
    let r = series.values();
    let n = r.len();
    let mut shocks = vec![0.0; n];
    let mut vars = vec![0.0; n];
    let nll = recursion(params, r, sample_variance(r), Some((&mut shocks, &mut vars)));
    let sigma: Vec<f64> = vars.iter().map(|v| v.sqrt()).collect();
    let innovations = shocks.iter().zip(&sigma).map(|(a, s)| a / s).collect();
    ArmaGarchFit {
        label: series.label().to_string(),
        params: *params,
        std_errors: None,
        log_likelihood: -nll,
        conditional_sigma: sigma,
        shocks,
        innovations,
        converged: true,
        iterations: 0,
        note: None,
    }
}

/// Maps between natural parameters and unconstrained search coordinates.
/// The location and intercept are scaled by the data so that unit steps in
/// every coordinate have comparable effect.
struct Transform {
    center: f64,
    scale: f64,
    var: f64,
}

impl Transform {
    fn to_params(&self, u: &[f64]) -> ArmaGarchParams {
        // Softmax of (u4, u5, 0) without overflow.
        let m = u[4].max(u[5]).max(0.0);
        let (ea, eb, e0) = ((u[4] - m).exp(), (u[5] - m).exp(), (-m).exp());
        // Scaled below one so alpha + beta cannot round to exactly 1.
        let total = (ea + eb + e0) / ARMA_BOUND;
        ArmaGarchParams {
            mu: self.center + self.scale * u[0],
            phi: ARMA_BOUND * u[1].tanh(),
            theta: ARMA_BOUND * u[2].tanh(),
            gamma: self.var * u[3].exp(),
            alpha: ea / total,
            beta: eb / total,
        }
    }

    fn to_coords(&self, p: &ArmaGarchParams) -> Vec<f64> {
        let rest = ARMA_BOUND - p.alpha - p.beta;
        vec![
            (p.mu - self.center) / self.scale,
            (p.phi / ARMA_BOUND).atanh(),
            (p.theta / ARMA_BOUND).atanh(),
            (p.gamma / self.var).ln(),
            (p.alpha / rest).ln(),
            (p.beta / rest).ln(),
        ]
    }
}

/// Default starting point: sample mean, `phi = 0.1`, `theta = 0`,
/// variance-targeted `gamma = 0.05 var`, `alpha = 0.05`, `beta = 0.90`.
pub fn starting_params(series: &ReturnSeries) -> ArmaGarchParams {
    let var = sample_variance(series.values());
    ArmaGarchParams {
        mu: mean(series.values()),
        phi: 0.1,
        theta: 0.0,
        gamma: 0.05 * var,
        alpha: 0.05,
        beta: 0.90,
    }
}

const JITTER_SD: f64 = 0.5;

/// Fixed `(phi, theta)` and `(alpha, beta)` pairs crossed into extra starts.
/// The likelihood surface has separate basins for near-cancelling ARMA roots
/// and for a flat-variance corner, so a single start is easily trapped.
const ARMA_STARTS: [(f64, f64); 3] = [(0.1, 0.0), (0.5, -0.3), (-0.3, 0.3)];
const GARCH_STARTS: [(f64, f64); 3] = [(0.05, 0.90), (0.10, 0.80), (0.20, 0.60)];

/// Maximum-likelihood fit.
///
/// Runs Nelder-Mead from a fixed grid of starts (variance-targeted `gamma`)
/// and from `restarts` jittered copies of the default start, keeps the best,
/// then polishes the winner with one more simplex restart. Iteration-capped runs return the best point found with
/// `converged = false`.
pub fn fit(series: &ReturnSeries, options: &FitOptions) -> Result<ArmaGarchFit, ModelError> {
    check_len(series, MIN_FIT_LEN)?;
    let r = series.values();
    let var = sample_variance(r);
    // Rounding leaves a constant series with a tiny positive variance.
    if !(var.sqrt() > 1e-12 * mean(r).abs()) || !var.is_finite() {
        return Err(ModelError::Degenerate(series.label().to_string()));
    }
    let transform = Transform {
        center: mean(r),
        scale: var.sqrt(),
        var,
    };
    let objective = |u: &[f64]| {
        let p = transform.to_params(u);
        let v = recursion(&p, r, var, None);
        if v.is_finite() {
            v
        } else {
            PENALTY
        }
    };
    let nm = NelderMeadOptions {
        max_iter: options.max_iter,
        f_tol: options.f_tol,
        x_tol: options.x_tol,
        initial_step: 0.25,
        trace: false,
    };

    let start = transform.to_coords(&starting_params(series));
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let base = starting_params(series);
    let mut starts = Vec::with_capacity(ARMA_STARTS.len() * GARCH_STARTS.len() + options.restarts);
    for (phi, theta) in ARMA_STARTS {
        for (alpha, beta) in GARCH_STARTS {
            let p = ArmaGarchParams {
                phi,
                theta,
                gamma: var * (1.0 - alpha - beta),
                alpha,
                beta,
                ..base
            };
            starts.push(transform.to_coords(&p));
        }
    }
    for _ in 0..options.restarts {
        starts.push(
            start
                .iter()
                .map(|c| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    c + JITTER_SD * z
                })
                .collect(),
        );
    }

    let mut iterations = 0;
    let mut best = None;
    for x0 in &starts {
        let m = nelder_mead(objective, x0, &nm);
        iterations += m.iterations;
        if best.as_ref().is_none_or(|b: &crate::optim::Minimum| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let polish = nelder_mead(
        objective,
        &best.x,
        &NelderMeadOptions {
            initial_step: 0.05,
            ..nm
        },
    );
    iterations += polish.iterations;
    let (winner, converged) = if polish.value <= best.value {
        (polish.x, polish.converged)
    } else {
        (best.x, best.converged)
    };

    let mut params = transform.to_params(&winner);
    let mut converged = converged;
    let mut note = None;
    if params.persistence() > MAX_PERSISTENCE {
        let scale = MAX_PERSISTENCE / params.persistence();
        note = Some(format!(
            "alpha + beta = {:.6} exceeded {MAX_PERSISTENCE}; clamped",
            params.persistence()
        ));
        params.alpha *= scale;
        params.beta *= scale;
        converged = false;
    } else if !converged {
        note = Some(format!("no convergence within {} iterations per run", options.max_iter));
    }

    let mut out = filter_unchecked(&params, series);
    out.converged = converged;
    out.iterations = iterations;
    out.note = note;
    if options.std_errors {
        out.std_errors = standard_errors(&params, series);
    }
    Ok(out)
}

/// Asymptotic standard errors from the central-difference Hessian of the
/// negative log-likelihood in natural coordinates.
pub fn standard_errors(params: &ArmaGarchParams, series: &ReturnSeries) -> Option<[f64; 6]> {
    let r = series.values();
    let var = sample_variance(r);
    let x = params.to_array();
    let typical = [var.sqrt(), 1.0, 1.0, params.gamma, params.alpha.max(0.01), params.beta.max(0.01)];
    let h: Vec<f64> = typical.iter().map(|t| 1e-4 * t).collect();
    let f = |d: &[(usize, f64)]| {
        let mut y = x;
        for &(i, step) in d {
            y[i] += step;
        }
        recursion(&ArmaGarchParams::from_array(y), r, var, None)
    };
    let f0 = f(&[]);
    let mut hess = DMatrix::<f64>::zeros(6, 6);
    for i in 0..6 {
        let fp = f(&[(i, h[i])]);
        let fm = f(&[(i, -h[i])]);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let v = (f(&[(i, h[i]), (j, h[j])]) - f(&[(i, h[i]), (j, -h[j])]) - f(&[(i, -h[i]), (j, h[j])])
                + f(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return None;
    }
    // Scale to unit diagonal before inverting; the raw entries span many
    // orders of magnitude because gamma is tiny.
    let d: Vec<f64> = (0..6).map(|i| hess[(i, i)]).collect();
    if d.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let scale = DVector::from_iterator(6, d.iter().map(|v| 1.0 / v.sqrt()));
    let scaled = DMatrix::from_fn(6, 6, |i, j| hess[(i, j)] * scale[i] * scale[j]);
    let inv = scaled.cholesky()?.inverse();
    let mut se = [0.0; 6];
    for i in 0..6 {
        let v = inv[(i, i)] * scale[i] * scale[i];
        if !(v > 0.0) {
            return None;
        }
        se[i] = v.sqrt();
    }
    Some(se)
}

/// Simulates `n` observations after a burn-in of [`BURN_IN`] draws. The
/// variance recursion starts at its unconditional level.
pub fn simulate(params: &ArmaGarchParams, n: usize, seed: u64) -> Result<ReturnSeries, ModelError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a_prev = 0.0;
    let mut s2_prev = params.unconditional_variance();
    let mut r_prev = params.mu;
    let mut out = Vec::with_capacity(n);
    for t in 0..(n + BURN_IN) {
        let z: f64 = StandardNormal.sample(&mut rng);
        let s2 = params.gamma + params.alpha * a_prev * a_prev + params.beta * s2_prev;
        let a = s2.sqrt() * z;
        let r = params.mu + params.phi * (r_prev - params.mu) + params.theta * a_prev + a;
        if t >= BURN_IN {
            out.push(r);
        }
        a_prev = a;
        s2_prev = s2;
        r_prev = r;
    }
    // n = 1 is allowed here even though ReturnSeries normally needs two values.
    Ok(ReturnSeries::from_parts("simulated", out))
}

/// Assembles the innovation panel: the dependent series' innovations become
/// `<label>N` and each factor keeps its label. With `restandardize`, every
/// innovation series is divided by its sample standard deviation.
pub fn innovation_panel(
    dates: &[YearMonth],
    dependent: &ArmaGarchFit,
    factors: &[ArmaGarchFit],
    restandardize: bool,
) -> Result<FactorPanel, ModelError> {
    let prep = |fit: &ArmaGarchFit| {
        if restandardize {
            let sd = sample_variance(&fit.innovations).sqrt();
            fit.innovations.iter().map(|e| e / sd).collect()
        } else {
            fit.innovations.clone()
        }
    };
    let dep = NamedSeries::new(format!("{}N", dependent.label), prep(dependent));
    let fac = factors.iter().map(|f| NamedSeries::new(f.label.clone(), prep(f))).collect();
    Ok(FactorPanel::new(dates.to_vec(), dep, fac)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu: f64, phi: f64, theta: f64, gamma: f64, alpha: f64, beta: f64) -> ArmaGarchParams {
        ArmaGarchParams {
            mu,
            phi,
            theta,
            gamma,
            alpha,
            beta,
        }
    }

    /// Explicit three-step evaluation of the recursion.
    fn unrolled_nll(p: &ArmaGarchParams, r: [f64; 3]) -> (f64, [f64; 3], [f64; 3]) {
        let m = (r[0] + r[1] + r[2]) / 3.0;
        let var0 = ((r[0] - m).powi(2) + (r[1] - m).powi(2) + (r[2] - m).powi(2)) / 2.0;

        let s1 = p.gamma + p.beta * var0;
        let a1 = r[0] - p.mu;
        let s2 = p.gamma + p.alpha * a1 * a1 + p.beta * s1;
        let a2 = (r[1] - p.mu) - p.phi * (r[0] - p.mu) - p.theta * a1;
        let s3 = p.gamma + p.alpha * a2 * a2 + p.beta * s2;
        let a3 = (r[2] - p.mu) - p.phi * (r[1] - p.mu) - p.theta * a2;

        let term = |a: f64, s: f64| 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * s.ln() + a * a / (2.0 * s);
        (term(a1, s1) + term(a2, s2) + term(a3, s3), [a1, a2, a3], [s1, s2, s3])
    }

    #[test]
    fn three_step_recursion_matches_hand_unroll() {
        let r = [0.01, -0.02, 0.015];
        let series = ReturnSeries::new("x", r.to_vec()).unwrap();
        for p in [
            params(0.001, 0.3, -0.2, 1e-4, 0.1, 0.8),
            params(-0.004, -0.6, 0.5, 3e-4, 0.3, 0.1),
            params(0.0, 0.0, 0.0, 2e-4, 0.0, 0.0),
        ] {
            let (oracle, shocks, vars) = unrolled_nll(&p, r);
            let got = recursion(&p, &r, sample_variance(&r), None);
            assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
            let f = filter_unchecked(&p, &series);
            for t in 0..3 {
                assert!((f.shocks[t] - shocks[t]).abs() < 1e-15);
                assert!((f.conditional_sigma[t] - vars[t].sqrt()).abs() < 1e-15);
            }
            assert!((f.log_likelihood + oracle).abs() < 1e-12);
        }
    }

    fn white_noise(n: usize, seed: u64) -> ReturnSeries {
        simulate(&params(0.0, 0.0, 0.0, 1.0, 0.0, 0.0), n, seed).unwrap()
    }

    #[test]
    fn collapses_to_iid_gaussian() {
        let s = white_noise(200, 3);
        let m = mean(s.values());
        let v = sample_variance(s.values());
        let p = params(m, 0.0, 0.0, v, 0.0, 0.0);
        let oracle: f64 = s
            .values()
            .iter()
            .map(|r| 0.5 * (2.0 * std::f64::consts::PI * v).ln() + (r - m).powi(2) / (2.0 * v))
            .sum();
        let got = neg_log_likelihood(&p, &s).unwrap();
        assert!((got - oracle).abs() < 1e-9 * oracle.abs());
    }

    #[test]
    fn likelihood_worse_away_from_mle_variance() {
        let raw = white_noise(500, 11).into_values();
        let m = mean(&raw);
        let centered: Vec<f64> = raw.iter().map(|r| r - m).collect();
        let s = ReturnSeries::new("wn", centered).unwrap();
        // The Gaussian variance MLE uses the n divisor.
        let mle = s.values().iter().map(|r| r * r).sum::<f64>() / s.len() as f64;
        let at = neg_log_likelihood(&params(0.0, 0.0, 0.0, mle, 0.0, 0.0), &s).unwrap();
        let up = neg_log_likelihood(&params(0.0, 0.0, 0.0, mle * 1.1, 0.0, 0.0), &s).unwrap();
        let down = neg_log_likelihood(&params(0.0, 0.0, 0.0, mle * 0.9, 0.0, 0.0), &s).unwrap();
        assert!(up > at && down > at);
    }

    #[test]
    fn invalid_params_rejected() {
        let s = white_noise(50, 1);
        for p in [
            params(0.0, 1.0, 0.0, 1.0, 0.1, 0.1),
            params(0.0, 0.0, -1.2, 1.0, 0.1, 0.1),
            params(0.0, 0.0, 0.0, 0.0, 0.1, 0.1),
            params(0.0, 0.0, 0.0, 1.0, -0.1, 0.1),
            params(0.0, 0.0, 0.0, 1.0, 0.5, 0.5),
        ] {
            assert!(matches!(neg_log_likelihood(&p, &s), Err(ModelError::InvalidParams(_))));
            assert!(filter(&p, &s).is_err());
        }
        let short = ReturnSeries::new("s", vec![0.1; 5]).unwrap();
        assert!(matches!(
            neg_log_likelihood(&params(0.0, 0.0, 0.0, 1.0, 0.0, 0.0), &short),
            Err(ModelError::TooShort { .. })
        ));
    }

    #[test]
    fn homoskedastic_filter() {
        let s = white_noise(100, 5);
        let p = params(0.2, 0.3, 0.1, 4.0, 0.0, 0.0);
        let f = filter(&p, &s).unwrap();
        assert!(f.conditional_sigma.iter().all(|v| (v - 2.0).abs() < 1e-15));
        for (e, a) in f.innovations.iter().zip(&f.shocks) {
            assert!((e - a / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn transform_round_trip() {
        let t = Transform {
            center: 0.01,
            scale: 0.05,
            var: 0.0025,
        };
        let p = params(0.013, 0.5, -0.3, 1e-4, 0.1, 0.8);
        let back = t.to_params(&t.to_coords(&p));
        for (a, b) in p.to_array().iter().zip(back.to_array()) {
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
        // Extreme coordinates still map inside the admissible region.
        for u in [[50.0, 40.0, -40.0, 30.0, 800.0, 790.0], [-50.0; 6]] {
            t.to_params(&u).validate().unwrap();
        }
    }

    #[test]
    fn fit_rejects_degenerate_and_short() {
        let flat = ReturnSeries::new("flat", vec![0.01; 40]).unwrap();
        assert_eq!(fit(&flat, &FitOptions::default()), Err(ModelError::Degenerate("flat".into())));
        let short = ReturnSeries::new("short", (0..20).map(|i| i as f64).collect()).unwrap();
        assert!(matches!(fit(&short, &FitOptions::default()), Err(ModelError::TooShort { .. })));
    }

    #[test]
    fn fit_then_filter_reproduces_innovations() {
        let truth = params(0.0, 0.5, -0.3, 1e-5, 0.1, 0.8);
        let s = simulate(&truth, 600, 21).unwrap();
        let f = fit(&s, &FitOptions::default()).unwrap();
        let again = filter(&f.params, &s).unwrap();
        assert_eq!(again.innovations, f.innovations);
        assert_eq!(again.log_likelihood, f.log_likelihood);
        for ((e, s), a) in f.innovations.iter().zip(&f.conditional_sigma).zip(&f.shocks) {
            assert!((e * s - a).abs() < 1e-10);
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let truth = params(0.0, 0.5, -0.3, 1e-5, 0.1, 0.8);
        let s = simulate(&truth, 300, 4).unwrap();
        let opts = FitOptions {
            seed: 9,
            ..FitOptions::default()
        };
        assert_eq!(fit(&s, &opts).unwrap(), fit(&s, &opts).unwrap());
    }

    #[test]
    fn simulate_deterministic() {
        let p = params(0.0, 0.5, -0.3, 1e-5, 0.1, 0.8);
        assert_eq!(simulate(&p, 100, 7).unwrap(), simulate(&p, 100, 7).unwrap());
        assert_ne!(simulate(&p, 100, 7).unwrap(), simulate(&p, 100, 8).unwrap());
    }

    #[test]
    fn simulated_iid_variance_concentrates() {
        let gamma = 2.5e-3;
        for (n, seed) in [(2000, 1), (20_000, 2)] {
            let s = simulate(&params(0.0, 0.0, 0.0, gamma, 0.0, 0.0), n, seed).unwrap();
            let v = sample_variance(s.values());
            assert!((v - gamma).abs() < 3.0 * gamma * (2.0 / n as f64).sqrt(), "n={n} v={v}");
        }
    }

    #[test]
    fn simulated_garch_unconditional_variance() {
        let p = params(0.0, 0.0, 0.0, 1e-5, 0.1, 0.8);
        let s = simulate(&p, 200_000, 17).unwrap();
        let v = sample_variance(s.values());
        let target = p.unconditional_variance();
        assert!((v / target - 1.0).abs() < 0.05, "{v} vs {target}");

        // Long-run mean of the filtered sigma^2 approaches the same level.
        let f = filter(&p, &s).unwrap();
        let mean_s2 = f.conditional_sigma.iter().map(|s| s * s).sum::<f64>() / s.len() as f64;
        assert!((mean_s2 / target - 1.0).abs() < 0.05);
    }

    #[test]
    fn innovation_panel_labels_and_restandardize() {
        let p = params(0.0, 0.2, 0.0, 1e-4, 0.05, 0.9);
        let fits: Vec<_> = (0..3)
            .map(|i| {
                let mut f = filter(&p, &simulate(&p, 40, i).unwrap()).unwrap();
                f.label = ["EXR", "MRP", "SMB"][i as usize].into();
                f
            })
            .collect();
        let mut d = YearMonth::from_yyyymm(200001).unwrap();
        let dates: Vec<_> = (0..40)
            .map(|_| {
                let c = d;
                d = d.next();
                c
            })
            .collect();
        let panel = innovation_panel(&dates, &fits[0], &fits[1..], true).unwrap();
        assert_eq!(panel.labels(), vec!["EXRN", "MRP", "SMB"]);
        for s in panel.all_series() {
            assert!((sample_variance(&s.values) - 1.0).abs() < 1e-12);
        }
    }
}
