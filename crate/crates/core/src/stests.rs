//! Hypothesis tests: ADF, Ljung-Box, Engle-Granger, Durbin-Watson,
//! Jarque-Bera and variance inflation factors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::chi_square_sf;
use crate::regress::{ols, Columns, RegressError};
use crate::series::mean;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TestError {
    #[error("{test}: need at least {required} observations, got {found}")]
    TooShort {
        test: &'static str,
        found: usize,
        required: usize,
    },
    #[error("{0}: invalid arguments: {1}")]
    InvalidArgs(&'static str, String),
    #[error("{0}: zero variance")]
    ZeroVariance(&'static str),
    #[error("{0}: zero denominator")]
    ZeroDenominator(&'static str),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error(transparent)]
    Regress(#[from] RegressError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Reject,
    FailToReject,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestResult {
    pub name: String,
    #[serde(with = "crate::serde_float")]
    pub statistic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    /// Set when the p-value is only known to lie beyond a table edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value_note: Option<String>,
    pub aux: BTreeMap<String, f64>,
    pub verdict: Verdict,
    pub level: Option<f64>,
}

const BELOW: &str = "pValueBelow";
const ABOVE: &str = "pValueAbove";

impl TestResult {
    fn new(name: &str, statistic: f64) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            p_value: None,
            p_value_note: None,
            aux: BTreeMap::new(),
            verdict: Verdict::Indeterminate,
            level: None,
        }
    }

    fn with_aux(mut self, key: &str, value: f64) -> Self {
        self.aux.insert(key.to_string(), value);
        self
    }

    /// Re-derives the verdict at another significance level. Tests without a
    /// p-value or p-value bound keep their verdict.
    pub fn at_level(mut self, level: f64) -> Self {
        let verdict = if let Some(p) = self.p_value {
            Some(if p < level { Verdict::Reject } else { Verdict::FailToReject })
        } else if let Some(&below) = self.aux.get(BELOW) {
            Some(if level >= below { Verdict::Reject } else { Verdict::Indeterminate })
        } else if let Some(&above) = self.aux.get(ABOVE) {
            Some(if level <= above { Verdict::FailToReject } else { Verdict::Indeterminate })
        } else {
            None
        };
        if let Some(v) = verdict {
            if !self.statistic.is_nan() {
                self.verdict = v;
                self.level = Some(level);
            }
        }
        self
    }

    pub fn rejects(&self) -> bool {
        self.verdict == Verdict::Reject
    }
}

/// Response-surface critical values `b0 + b1/T + b2/T^2 + b3/T^3` at the
/// 1%, 5% and 10% levels (MacKinnon, 2010).
struct CriticalSurface([[f64; 4]; 3]);

/// Dickey-Fuller tau, constant, no trend.
const ADF_CONSTANT: CriticalSurface = CriticalSurface([
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
]);

/// Engle-Granger residual test, two variables, constant in the
/// cointegrating regression.
const EG_TWO_VARIABLE: CriticalSurface = CriticalSurface([
    [-3.89644, -10.9519, -33.527, 0.0],
    [-3.33613, -6.1101, -6.823, 0.0],
    [-3.04445, -4.2412, -2.720, 0.0],
]);

const TABLE_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

impl CriticalSurface {
    fn at(&self, nobs: usize) -> [f64; 3] {
        let t = 1.0 / nobs as f64;
        self.0.map(|b| b[0] + b[1] * t + b[2] * t * t + b[3] * t * t * t)
    }
}

/// Fills p-value, note, critical values and verdict for a left-tailed
/// statistic compared against table critical values. Inside the table the
/// p-value is linearly interpolated; outside it is reported as a bound.
fn table_verdict(mut result: TestResult, cv: [f64; 3], level: f64) -> TestResult {
    for (name, v) in ["cv1", "cv5", "cv10"].iter().zip(cv) {
        result.aux.insert(name.to_string(), v);
    }
    let s = result.statistic;
    if s < cv[0] {
        result.p_value_note = Some("< 0.01".into());
        result.aux.insert(BELOW.into(), TABLE_LEVELS[0]);
    } else if s > cv[2] {
        result.p_value_note = Some("> 0.10".into());
        result.aux.insert(ABOVE.into(), TABLE_LEVELS[2]);
    } else {
        let (lo, hi) = if s <= cv[1] { (0, 1) } else { (1, 2) };
        let w = (s - cv[lo]) / (cv[hi] - cv[lo]);
        result.p_value = Some(TABLE_LEVELS[lo] + w * (TABLE_LEVELS[hi] - TABLE_LEVELS[lo]));
    }
    result.at_level(level)
}

/// Lag choice for the augmented regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LagSelection {
    /// `floor(12 (n/100)^{1/4})` as the ceiling, pruned by AIC.
    Auto,
    /// AIC search over `0..=max`.
    MaxAic(usize),
    /// Exactly this many lagged differences.
    Fixed(usize),
}

struct DfRegression {
    statistic: f64,
    lags: usize,
    nobs: usize,
}

fn schwert(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// OLS of `dy_t` on `[c,] y_{t-1}, dy_{t-1..t-lags}` using targets
/// `dy[start..]`. Returns `(t of y_{t-1}, ssr, nobs, params)`.
fn df_ols(y: &[f64], dy: &[f64], lags: usize, start: usize, constant: bool) -> Result<(f64, f64, usize, usize), RegressError> {
    let target: Vec<f64> = dy[start..].to_vec();
    let mut cols: Vec<(String, Vec<f64>)> = vec![("level".into(), (start..dy.len()).map(|t| y[t]).collect())];
    for i in 1..=lags {
        cols.push((format!("dlag{i}"), (start..dy.len()).map(|t| dy[t - i]).collect()));
    }
    let borrowed: Vec<(&str, &[f64])> = cols.iter().map(|(l, c)| (l.as_str(), c.as_slice())).collect();
    let fit = ols("dy", &target, &borrowed, constant)?;
    let idx = usize::from(constant);
    let ssr = fit.residuals.iter().map(|e| e * e).sum();
    Ok((fit.t_stats[idx], ssr, fit.n, fit.n_params()))
}

fn dickey_fuller(y: &[f64], selection: LagSelection, constant: bool, test: &'static str) -> Result<DfRegression, TestError> {
    let n = y.len();
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let ntrend = usize::from(constant);
    let cap = (n / 2).saturating_sub(ntrend + 2);
    let (max_lag, search) = match selection {
        LagSelection::Auto => (schwert(n).min(cap), true),
        LagSelection::MaxAic(p) => (p, true),
        LagSelection::Fixed(p) => (p, false),
    };
    let fits = |lags: usize| {
        let nobs = dy.len().saturating_sub(lags);
        let params = lags + 1 + ntrend;
        nobs >= params + 2
    };
    if !fits(max_lag) {
        return Err(TestError::TooShort {
            test,
            found: n,
            required: 2 * max_lag + ntrend + 4,
        });
    }
    let lags = if search {
        // Common sample so AIC values are comparable across lag orders.
        let mut best = (f64::INFINITY, 0);
        for p in 0..=max_lag {
            let (_, ssr, nobs, params) = df_ols(y, &dy, p, max_lag, constant)?;
            let aic = nobs as f64 * (ssr / nobs as f64).ln() + 2.0 * params as f64;
            if aic < best.0 {
                best = (aic, p);
            }
        }
        best.1
    } else {
        max_lag
    };
    let (statistic, _, nobs, _) = df_ols(y, &dy, lags, lags, constant)?;
    Ok(DfRegression { statistic, lags, nobs })
}

/// Augmented Dickey-Fuller test with a constant and no trend.
pub fn adf_test(series: &[f64], selection: LagSelection) -> Result<TestResult, TestError> {
    const NAME: &str = "Augmented Dickey-Fuller";
    if series.len() < 20 {
        return Err(TestError::TooShort {
            test: NAME,
            found: series.len(),
            required: 20,
        });
    }
    let df = dickey_fuller(series, selection, true, NAME)?;
    let result = TestResult::new(NAME, df.statistic)
        .with_aux("lags", df.lags as f64)
        .with_aux("nobs", df.nobs as f64);
    Ok(table_verdict(result, ADF_CONSTANT.at(df.nobs), 0.05))
}

/// Ljung-Box portmanteau statistic over `lags` autocorrelations, with
/// `fitted_params` degrees of freedom removed.
pub fn ljung_box(series: &[f64], lags: usize, fitted_params: usize) -> Result<TestResult, TestError> {
    const NAME: &str = "Ljung-Box";
    let n = series.len();
    if lags < 1 || fitted_params >= lags {
        return Err(TestError::InvalidArgs(NAME, format!("lags = {lags}, fitted params = {fitted_params}")));
    }
    if n <= lags + 1 {
        return Err(TestError::TooShort {
            test: NAME,
            found: n,
            required: lags + 2,
        });
    }
    let m = mean(series);
    let dev: Vec<f64> = series.iter().map(|v| v - m).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if !(denom > 0.0) {
        return Err(TestError::ZeroVariance(NAME));
    }
    let nf = n as f64;
    let q = nf * (nf + 2.0)
        * (1..=lags)
            .map(|k| {
                let rho = dev[k..].iter().zip(&dev).map(|(a, b)| a * b).sum::<f64>() / denom;
                rho * rho / (nf - k as f64)
            })
            .sum::<f64>();
    let df = (lags - fitted_params) as f64;
    let mut result = TestResult::new(NAME, q).with_aux("lags", lags as f64).with_aux("df", df);
    result.p_value = Some(chi_square_sf(q, df));
    Ok(result.at_level(0.05))
}

pub const DW_LOWER: f64 = 1.5;
pub const DW_UPPER: f64 = 2.5;

/// Durbin-Watson statistic. The verdict is the interval rule: no
/// discernible autocorrelation when `1.5 <= d <= 2.5`.
pub fn durbin_watson(residuals: &[f64]) -> Result<TestResult, TestError> {
    const NAME: &str = "Durbin-Watson";
    if residuals.len() < 2 {
        return Err(TestError::TooShort {
            test: NAME,
            found: residuals.len(),
            required: 2,
        });
    }
    let denom: f64 = residuals.iter().map(|e| e * e).sum();
    if !(denom > 0.0) {
        return Err(TestError::ZeroDenominator(NAME));
    }
    let num: f64 = residuals.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let d = num / denom;
    let mut result = TestResult::new(NAME, d).with_aux("lower", DW_LOWER).with_aux("upper", DW_UPPER);
    result.verdict = if (DW_LOWER..=DW_UPPER).contains(&d) {
        Verdict::FailToReject
    } else {
        Verdict::Reject
    };
    Ok(result)
}

/// Sample skewness and kurtosis with `n`-divisor central moments.
pub fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = mean(values);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2))
}

/// Jarque-Bera normality test, `JB = n/6 (S^2 + (K-3)^2/4)`.
pub fn jarque_bera(residuals: &[f64]) -> Result<TestResult, TestError> {
    const NAME: &str = "Jarque-Bera";
    let n = residuals.len();
    if n < 8 {
        return Err(TestError::TooShort {
            test: NAME,
            found: n,
            required: 8,
        });
    }
    let m = mean(residuals);
    let scale = residuals.iter().map(|v| (v - m).abs()).fold(0.0, f64::max);
    if !(scale > 0.0) || scale <= 1e-14 * m.abs() {
        return Err(TestError::ZeroVariance(NAME));
    }
    let (skew, kurt) = moments(residuals);
    let jb = n as f64 / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0);
    let mut result = TestResult::new(NAME, jb)
        .with_aux("skewness", skew)
        .with_aux("kurtosis", kurt)
        .with_aux("df", 2.0);
    result.p_value = Some(chi_square_sf(jb, 2.0));
    Ok(result.at_level(0.05))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifEntry {
    pub label: String,
    #[serde(with = "crate::serde_float")]
    pub value: f64,
    /// Perfect collinearity; `value` is `+inf`.
    pub collinear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifReport {
    pub entries: Vec<VifEntry>,
}

impl VifReport {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.label == label).map(|e| e.value)
    }
}

/// Variance inflation factors `1 / (1 - R_j^2)` from auxiliary regressions
/// of each regressor on the others, with intercept.
pub fn vif<C: Columns>(data: &C, labels: &[String]) -> Result<VifReport, TestError> {
    const NAME: &str = "VIF";
    if labels.len() < 2 {
        return Err(TestError::InvalidArgs(NAME, "need at least two regressors".into()));
    }
    let cols: Vec<(&str, &[f64])> = labels
        .iter()
        .map(|l| {
            data.column(l)
                .map(|c| (l.as_str(), c))
                .ok_or_else(|| TestError::UnknownColumn(l.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut entries = Vec::with_capacity(labels.len());
    for (j, (label, y)) in cols.iter().enumerate() {
        let others: Vec<(&str, &[f64])> = cols.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, c)| *c).collect();
        let (value, collinear) = match ols(label, y, &others, true) {
            Ok(fit) if fit.r_squared < 1.0 => (1.0 / (1.0 - fit.r_squared), false),
            Ok(_) | Err(RegressError::RankDeficient(_)) | Err(RegressError::ConstantDependent(_)) => (f64::INFINITY, true),
            Err(e) => return Err(e.into()),
        };
        entries.push(VifEntry {
            label: label.to_string(),
            value,
            collinear,
        });
    }
    Ok(VifReport { entries })
}

/// Engle-Granger two-step cointegration test of `y` on `x`: OLS with
/// intercept, then a no-constant ADF regression on the residuals.
pub fn engle_granger(y: &[f64], x: &[f64]) -> Result<TestResult, TestError> {
    const NAME: &str = "Engle-Granger";
    if y.len() != x.len() {
        return Err(TestError::InvalidArgs(NAME, format!("lengths {} and {}", y.len(), x.len())));
    }
    if y.len() < 30 {
        return Err(TestError::TooShort {
            test: NAME,
            found: y.len(),
            required: 30,
        });
    }
    let step1 = ols("y", y, &[("x", x)], true)?;
    let ssr: f64 = step1.residuals.iter().map(|e| e * e).sum();
    let sst: f64 = {
        let m = mean(y);
        y.iter().map(|v| (v - m).powi(2)).sum()
    };
    if ssr <= 1e-20 * sst.max(f64::MIN_POSITIVE) {
        let mut r = TestResult::new(NAME, f64::NAN).with_aux("degenerateResidual", 1.0);
        r.verdict = Verdict::Indeterminate;
        r.aux.insert("slope".into(), step1.coefficients[1]);
        return Ok(r);
    }
    let df = dickey_fuller(&step1.residuals, LagSelection::Auto, false, NAME)?;
    let result = TestResult::new(NAME, df.statistic)
        .with_aux("lags", df.lags as f64)
        .with_aux("nobs", df.nobs as f64)
        .with_aux("slope", step1.coefficients[1])
        .with_aux("intercept", step1.coefficients[0]);
    Ok(table_verdict(result, EG_TWO_VARIABLE.at(df.nobs), 0.05))
}
