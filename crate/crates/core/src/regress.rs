//! Ordinary least squares with inference, influence measures and backward
//! elimination.
//!
//! Coefficients come from a Householder QR factorization of the
//! column-equilibrated design matrix; the normal equations are never formed.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::student_t_two_sided;
use crate::ingest::{FactorPanel, NamedSeries};

pub use crate::dist::student_t_cdf;

/// Diagonal entries of R smaller than this times the largest flag rank
/// deficiency.
pub const RANK_TOL: f64 = 1e-10;

pub const INTERCEPT: &str = "Intercept";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressError {
    #[error("rank deficiency: {} collinear with preceding columns", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("insufficient observations: n = {n} with {params} coefficients")]
    InsufficientObservations { n: usize, params: usize },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("column {0} has {1} rows, expected {2}")]
    LengthMismatch(String, usize, usize),
    #[error("non-finite value in column {0}")]
    NonFinite(String),
    #[error("dependent series {0} is constant")]
    ConstantDependent(String),
    #[error("observation {0} has leverage 1")]
    UnitLeverage(usize),
    #[error("excluded index {index} out of range for {n} rows")]
    BadExclusion { index: usize, n: usize },
}

/// Anything that can hand out labelled columns of equal length.
pub trait Columns {
    fn column(&self, label: &str) -> Option<&[f64]>;
    fn n_rows(&self) -> usize;
}

impl Columns for FactorPanel {
    fn column(&self, label: &str) -> Option<&[f64]> {
        self.series(label)
    }

    fn n_rows(&self) -> usize {
        self.len()
    }
}

/// A plain set of named columns with no length floor, for small problems
/// and tests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub columns: Vec<NamedSeries>,
}

impl Frame {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, label: impl Into<String>, values: Vec<f64>) -> Self {
        self.columns.push(NamedSeries::new(label, values));
        self
    }
}

impl Columns for Frame {
    fn column(&self, label: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.label == label).map(|c| c.values.as_slice())
    }

    fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DesignSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub intercept: bool,
}

impl DesignSpec {
    /// A spec with an intercept.
    pub fn new(dependent: impl Into<String>, regressors: &[&str]) -> Self {
        Self {
            dependent: dependent.into(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            intercept: true,
        }
    }

    pub fn validate(&self) -> Result<(), RegressError> {
        if self.regressors.is_empty() {
            return Err(RegressError::InvalidDesign("at least one regressor required".into()));
        }
        let mut seen = BTreeSet::new();
        for r in &self.regressors {
            if !seen.insert(r) {
                return Err(RegressError::InvalidDesign(format!("duplicate regressor {r}")));
            }
            if *r == self.dependent {
                return Err(RegressError::InvalidDesign(format!("{r} is also the dependent series")));
            }
        }
        Ok(())
    }

    fn without(&self, regressor: &str) -> Self {
        Self {
            regressors: self.regressors.iter().filter(|r| *r != regressor).cloned().collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OlsFit {
    pub dependent: String,
    /// `Intercept` first when present, then regressors in spec order.
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    #[serde(with = "crate::serde_float::vec")]
    pub std_errors: Vec<f64>,
    #[serde(with = "crate::serde_float::vec")]
    pub t_stats: Vec<f64>,
    #[serde(with = "crate::serde_float::vec")]
    pub p_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub leverage: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub multiple_r: f64,
    pub residual_se: f64,
    pub n: usize,
    /// Number of regressors, excluding the intercept.
    pub k: usize,
    pub intercept: bool,
}

impl OlsFit {
    /// Number of estimated coefficients.
    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }

    pub fn df_resid(&self) -> usize {
        self.n - self.n_params()
    }

    fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.term_index(term).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, term: &str) -> Option<f64> {
        self.term_index(term).map(|i| self.std_errors[i])
    }

    pub fn t_stat(&self, term: &str) -> Option<f64> {
        self.term_index(term).map(|i| self.t_stats[i])
    }

    pub fn p_value(&self, term: &str) -> Option<f64> {
        self.term_index(term).map(|i| self.p_values[i])
    }

    pub fn regressors(&self) -> &[String] {
        if self.intercept {
            &self.terms[1..]
        } else {
            &self.terms
        }
    }
}

/// Fits `y` on the given columns.
pub fn ols(dependent: &str, y: &[f64], regressors: &[(&str, &[f64])], intercept: bool) -> Result<OlsFit, RegressError> {
    let n = y.len();
    let p = regressors.len() + usize::from(intercept);
    if p == 0 {
        return Err(RegressError::InvalidDesign("no columns".into()));
    }
    if n <= p {
        return Err(RegressError::InsufficientObservations { n, params: p });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::NonFinite(dependent.to_string()));
    }
    for (label, col) in regressors {
        if col.len() != n {
            return Err(RegressError::LengthMismatch(label.to_string(), col.len(), n));
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(RegressError::NonFinite(label.to_string()));
        }
    }

    let mut terms = Vec::with_capacity(p);
    if intercept {
        terms.push(INTERCEPT.to_string());
    }
    terms.extend(regressors.iter().map(|(l, _)| l.to_string()));

    let x = DMatrix::from_fn(n, p, |i, j| {
        if intercept {
            if j == 0 {
                1.0
            } else {
                regressors[j - 1].1[i]
            }
        } else {
            regressors[j].1[i]
        }
    });

    // Equilibrate columns so the rank test is scale-free.
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm()).collect();
    let zero_cols: Vec<String> = (0..p).filter(|&j| norms[j] == 0.0).map(|j| terms[j].clone()).collect();
    if !zero_cols.is_empty() {
        return Err(RegressError::RankDeficient(zero_cols));
    }
    let mut xs = x.clone();
    for (j, norm) in norms.iter().enumerate() {
        xs.column_mut(j).scale_mut(1.0 / norm);
    }

    let qr = xs.qr();
    let q = qr.q();
    let r = qr.r();
    let diag_max = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    let deficient: Vec<String> = (0..p)
        .filter(|&j| r[(j, j)].abs() < RANK_TOL * diag_max)
        .map(|j| terms[j].clone())
        .collect();
    if !deficient.is_empty() {
        return Err(RegressError::RankDeficient(deficient));
    }

    let yv = DVector::from_column_slice(y);
    let qty = q.transpose() * &yv;
    let scaled_coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| RegressError::RankDeficient(terms.clone()))?;
    let coefficients: Vec<f64> = (0..p).map(|j| scaled_coef[j] / norms[j]).collect();

    let beta = DVector::from_column_slice(&coefficients);
    let fitted_v = &x * &beta;
    let fitted: Vec<f64> = fitted_v.iter().copied().collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let leverage: Vec<f64> = (0..n).map(|i| q.row(i).norm_squared()).collect();

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| RegressError::RankDeficient(terms.clone()))?;
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let df = (n - p) as f64;
    let s2 = ssr / df;
    let mut std_errors = Vec::with_capacity(p);
    for j in 0..p {
        // diag of (X'X)^{-1} = D R^{-1} R^{-T} D
        let row_norm2 = r_inv.row(j).norm_squared();
        std_errors.push((s2 * row_norm2).sqrt() / norms[j]);
    }
    let t_stats: Vec<f64> = coefficients.iter().zip(&std_errors).map(|(b, se)| b / se).collect();
    let p_values: Vec<f64> = t_stats.iter().map(|t| student_t_two_sided(*t, df)).collect();

    let ybar = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = if intercept {
        y.iter().map(|v| (v - ybar).powi(2)).sum()
    } else {
        y.iter().map(|v| v * v).sum()
    };
    if !(sst > 0.0) {
        return Err(RegressError::ConstantDependent(dependent.to_string()));
    }
    let r_squared = (1.0 - ssr / sst).clamp(0.0, 1.0);
    let df_total = if intercept { n - 1 } else { n } as f64;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * df_total / df;

    Ok(OlsFit {
        dependent: dependent.to_string(),
        terms,
        coefficients,
        std_errors,
        t_stats,
        p_values,
        residuals,
        fitted,
        leverage,
        r_squared,
        adj_r_squared,
        multiple_r: r_squared.sqrt(),
        residual_se: s2.sqrt(),
        n,
        k: regressors.len(),
        intercept,
    })
}

fn gather<'a, C: Columns>(data: &'a C, spec: &'a DesignSpec) -> Result<(&'a [f64], Vec<(&'a str, &'a [f64])>), RegressError> {
    spec.validate()?;
    let y = data
        .column(&spec.dependent)
        .ok_or_else(|| RegressError::UnknownColumn(spec.dependent.clone()))?;
    let mut xs = Vec::with_capacity(spec.regressors.len());
    for r in &spec.regressors {
        let col = data.column(r).ok_or_else(|| RegressError::UnknownColumn(r.clone()))?;
        xs.push((r.as_str(), col));
    }
    Ok((y, xs))
}

/// OLS of `spec.dependent` on `spec.regressors`.
pub fn ols_fit<C: Columns>(data: &C, spec: &DesignSpec) -> Result<OlsFit, RegressError> {
    let (y, xs) = gather(data, spec)?;
    ols(&spec.dependent, y, &xs, spec.intercept)
}

/// Cook's distances; observations with leverage 1 get `+inf` and are listed
/// in `exact_leverage`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CooksDistance {
    #[serde(with = "crate::serde_float::vec")]
    pub values: Vec<f64>,
    pub exact_leverage: Vec<usize>,
}

/// Leverage at or above this is treated as exactly 1.
const UNIT_LEVERAGE: f64 = 1.0 - 1e-12;

/// `D_t = e_t^2 h_t / (p s^2 (1 - h_t)^2)` with `p` coefficients.
pub fn cooks_distance(fit: &OlsFit) -> CooksDistance {
    let p = fit.n_params() as f64;
    let s2 = fit.residual_se * fit.residual_se;
    let mut exact_leverage = Vec::new();
    let values = fit
        .residuals
        .iter()
        .zip(&fit.leverage)
        .enumerate()
        .map(|(t, (e, h))| {
            if *h >= UNIT_LEVERAGE {
                exact_leverage.push(t);
                f64::INFINITY
            } else {
                e * e * h / (p * s2 * (1.0 - h).powi(2))
            }
        })
        .collect();
    CooksDistance { values, exact_leverage }
}

/// Internally studentized residuals `e_t / (s sqrt(1 - h_t))`.
pub fn standardized_residuals(fit: &OlsFit) -> Result<Vec<f64>, RegressError> {
    fit.residuals
        .iter()
        .zip(&fit.leverage)
        .enumerate()
        .map(|(t, (e, h))| {
            if *h >= UNIT_LEVERAGE {
                Err(RegressError::UnitLeverage(t))
            } else {
                Ok(e / (fit.residual_se * (1.0 - h).sqrt()))
            }
        })
        .collect()
}

/// Repeatedly drops the regressor with the largest p-value above
/// `alpha_out`. Returns every fit, initial first. The intercept is never a
/// candidate, and the last regressor is never dropped.
pub fn backward_eliminate<C: Columns>(data: &C, spec: &DesignSpec, alpha_out: f64) -> Result<Vec<OlsFit>, RegressError> {
    let mut spec = spec.clone();
    let mut trail = vec![ols_fit(data, &spec)?];
    loop {
        let fit = trail.last().expect("non-empty trail");
        if spec.regressors.len() <= 1 {
            break;
        }
        let offset = usize::from(fit.intercept);
        let worst = spec
            .regressors
            .iter()
            .enumerate()
            .map(|(i, r)| (r, fit.p_values[i + offset]))
            .filter(|(_, p)| *p > alpha_out)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((drop, _)) = worst else { break };
        spec = spec.without(&drop.clone());
        trail.push(ols_fit(data, &spec)?);
    }
    Ok(trail)
}

/// Refits without the listed observation indices.
pub fn exclude_and_refit<C: Columns>(data: &C, spec: &DesignSpec, excluded: &BTreeSet<usize>) -> Result<OlsFit, RegressError> {
    let (y, xs) = gather(data, spec)?;
    let n = y.len();
    if let Some(&index) = excluded.iter().find(|&&i| i >= n) {
        return Err(RegressError::BadExclusion { index, n });
    }
    let keep = |col: &[f64]| -> Vec<f64> {
        col.iter()
            .enumerate()
            .filter(|(i, _)| !excluded.contains(i))
            .map(|(_, v)| *v)
            .collect()
    };
    let y_kept = keep(y);
    let xs_kept: Vec<(&str, Vec<f64>)> = xs.iter().map(|(l, c)| (*l, keep(c))).collect();
    let borrowed: Vec<(&str, &[f64])> = xs_kept.iter().map(|(l, c)| (*l, c.as_slice())).collect();
    ols(&spec.dependent, &y_kept, &borrowed, spec.intercept)
}
