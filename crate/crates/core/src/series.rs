//! Return transforms, descriptive statistics and correlation structure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("non-positive price {value} at index {index}")]
    NonPositivePrice { index: usize, value: f64 },
    #[error("need at least {required} values, got {found}")]
    TooShort { found: usize, required: usize },
    #[error("non-finite value in series {0}")]
    NonFinite(String),
    #[error("zero-variance series {0}")]
    ZeroVariance(String),
    #[error("length mismatch: {0} has {1} values, expected {2}")]
    LengthMismatch(String, usize, usize),
}

/// An ordered, labelled list of finite returns with at least two values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    label: String,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self, SeriesError> {
        let label = label.into();
        if values.len() < 2 {
            return Err(SeriesError::TooShort {
                found: values.len(),
                required: 2,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite(label));
        }
        Ok(Self { label, values })
    }

    /// Skips the length check; values must already be finite.
    pub(crate) fn from_parts(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `r_t = ln(S_t / S_{t-1})`.
pub fn log_returns(label: impl Into<String>, prices: &[f64]) -> Result<ReturnSeries, SeriesError> {
    if prices.len() < 2 {
        return Err(SeriesError::TooShort {
            found: prices.len(),
            required: 2,
        });
    }
    if let Some((index, &value)) = prices.iter().enumerate().find(|(_, p)| !(**p > 0.0)) {
        return Err(SeriesError::NonPositivePrice { index, value });
    }
    let label = label.into();
    let values: Vec<f64> = prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SeriesError::NonFinite(label));
    }
    // Two prices give a single return; that is still a valid transform.
    Ok(ReturnSeries::from_parts(label, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SummaryStats {
    pub mean: f64,
    /// Sample standard deviation, `n - 1` divisor.
    pub std_dev: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with the `n - 1` divisor, two-pass.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)
}

pub fn summary_stats(series: &ReturnSeries) -> SummaryStats {
    SummaryStats {
        mean: mean(&series.values),
        std_dev: sample_variance(&series.values).sqrt(),
    }
}

/// Summary statistics for a raw slice; errors below two observations.
pub fn summarize(values: &[f64]) -> Result<SummaryStats, SeriesError> {
    if values.len() < 2 {
        return Err(SeriesError::TooShort {
            found: values.len(),
            required: 2,
        });
    }
    Ok(SummaryStats {
        mean: mean(values),
        std_dev: sample_variance(values).sqrt(),
    })
}

/// Square matrix of Pearson coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.entries[i][j])
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

/// Pearson correlation matrix of equally long series.
pub fn correlation_matrix(series: &[ReturnSeries]) -> Result<CorrelationMatrix, SeriesError> {
    let columns: Vec<(&str, &[f64])> = series.iter().map(|s| (s.label(), s.values())).collect();
    correlation_of(&columns)
}

/// Same as [`correlation_matrix`] over borrowed `(label, values)` columns.
pub fn correlation_of(columns: &[(&str, &[f64])]) -> Result<CorrelationMatrix, SeriesError> {
    let n = columns.first().map_or(0, |c| c.1.len());
    if n < 3 {
        return Err(SeriesError::TooShort { found: n, required: 3 });
    }
    let mut centered = Vec::with_capacity(columns.len());
    for (label, values) in columns {
        if values.len() != n {
            return Err(SeriesError::LengthMismatch(label.to_string(), values.len(), n));
        }
        let m = mean(values);
        let dev: Vec<f64> = values.iter().map(|v| v - m).collect();
        let ss: f64 = dev.iter().map(|d| d * d).sum();
        if !(ss > 0.0) || !ss.is_finite() {
            return Err(SeriesError::ZeroVariance(label.to_string()));
        }
        centered.push((dev, ss.sqrt()));
    }
    let k = columns.len();
    let mut entries = vec![vec![0.0; k]; k];
    for i in 0..k {
        entries[i][i] = 1.0;
        for j in (i + 1)..k {
            let (a, na) = &centered[i];
            let (b, nb) = &centered[j];
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let r = (dot / (na * nb)).clamp(-1.0, 1.0);
            entries[i][j] = r;
            entries[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        labels: columns.iter().map(|c| c.0.to_string()).collect(),
        entries,
    })
}
