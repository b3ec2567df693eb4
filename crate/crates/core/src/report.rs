//! Plot-data builders, model comparison and table rendering.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::normal_quantile;
use crate::ingest::{FactorPanel, YearMonth};
use crate::regress::{cooks_distance, standardized_residuals, Columns, CooksDistance, OlsFit, RegressError};
use crate::series::{correlation_of, mean, sample_variance, CorrelationMatrix, SeriesError, SummaryStats};
use crate::stests::{durbin_watson, jarque_bera, vif, TestError, TestResult, VifReport};
use crate::tsmodel::{ArmaGarchFit, ArmaGarchParams};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("need at least {required} residuals, got {found}")]
    TooShort { found: usize, required: usize },
    #[error("zero-variance residuals")]
    ZeroVariance,
    #[error("regressor labels differ: {0:?} vs {1:?}")]
    LabelMismatch(Vec<String>, Vec<String>),
    #[error("plot data line {line}: {message}")]
    PlotParse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Test(#[from] TestError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    Qq,
    ResidualsVsFitted,
    ScaleLocation,
    ResidualsVsLeverage,
    CooksBar,
    ScatterMatrix,
    Heatmap,
}

impl PlotKind {
    pub const ALL: [PlotKind; 7] = [
        PlotKind::Qq,
        PlotKind::ResidualsVsFitted,
        PlotKind::ScaleLocation,
        PlotKind::ResidualsVsLeverage,
        PlotKind::CooksBar,
        PlotKind::ScatterMatrix,
        PlotKind::Heatmap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::Qq => "qq",
            PlotKind::ResidualsVsFitted => "residuals-vs-fitted",
            PlotKind::ScaleLocation => "scale-location",
            PlotKind::ResidualsVsLeverage => "residuals-vs-leverage",
            PlotKind::CooksBar => "cooks-bar",
            PlotKind::ScatterMatrix => "scatter-matrix",
            PlotKind::Heatmap => "heatmap",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown plot kind {s:?}"))
    }
}

/// A named block of numeric records sharing one field layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub label: String,
    pub fields: Vec<String>,
    #[serde(with = "crate::serde_float::matrix")]
    pub records: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn column(&self, field: &str) -> Option<Vec<f64>> {
        let j = self.fields.iter().position(|f| f == field)?;
        Some(self.records.iter().map(|r| r[j]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLine {
    pub label: String,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlotData {
    pub kind: PlotKind,
    /// Category labels, e.g. the series behind heatmap rows and columns.
    pub labels: Vec<String>,
    pub groups: Vec<PointSet>,
    pub reference_lines: Vec<ReferenceLine>,
    /// Observation indices singled out (influential or non-finite points).
    pub flagged: Vec<usize>,
}

impl PlotData {
    fn new(kind: PlotKind) -> Self {
        Self {
            kind,
            labels: Vec::new(),
            groups: Vec::new(),
            reference_lines: Vec::new(),
            flagged: Vec::new(),
        }
    }

    pub fn group(&self, label: &str) -> Option<&PointSet> {
        self.groups.iter().find(|g| g.label == label)
    }
}

/// Renders plot data as CSV blocks introduced by `#` comment lines. Values
/// use the shortest representation that parses back to the same `f64`.
pub fn render_plot_csv(plot: &PlotData) -> String {
    let mut out = format!("# kind: {}\n", plot.kind);
    if !plot.labels.is_empty() {
        out.push_str(&format!("# labels: {}\n", plot.labels.join(",")));
    }
    for line in &plot.reference_lines {
        out.push_str(&format!("# reference: {},{},{}\n", line.label, line.slope, line.intercept));
    }
    let flagged: Vec<String> = plot.flagged.iter().map(|i| i.to_string()).collect();
    out.push_str(&format!("# flagged: {}\n", flagged.join(",")));
    for group in &plot.groups {
        out.push_str(&format!("# group: {}\n", group.label));
        out.push_str(&group.fields.join(","));
        out.push('\n');
        for record in &group.records {
            let cells: Vec<String> = record.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    out
}

/// Inverse of [`render_plot_csv`].
pub fn parse_plot_csv(text: &str) -> Result<PlotData, ReportError> {
    let err = |line: usize, message: String| ReportError::PlotParse { line, message };
    let mut kind = None;
    let mut plot = PlotData::new(PlotKind::Qq);
    let mut expect_header = false;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(comment) = line.strip_prefix("# ") {
            let (key, value) = comment
                .split_once(": ")
                .or_else(|| comment.strip_suffix(':').map(|k| (k, "")))
                .ok_or_else(|| err(lineno, format!("malformed comment {line:?}")))?;
            match key {
                "kind" => kind = Some(value.parse::<PlotKind>().map_err(|m| err(lineno, m))?),
                "labels" => plot.labels = value.split(',').map(str::to_string).collect(),
                "reference" => {
                    let parts: Vec<&str> = value.rsplitn(3, ',').collect();
                    let [intercept, slope, label] = parts[..] else {
                        return Err(err(lineno, "reference needs label,slope,intercept".into()));
                    };
                    let num = |s: &str| s.parse::<f64>().map_err(|_| err(lineno, format!("bad number {s:?}")));
                    plot.reference_lines.push(ReferenceLine {
                        label: label.to_string(),
                        slope: num(slope)?,
                        intercept: num(intercept)?,
                    });
                }
                "flagged" => {
                    if !value.is_empty() {
                        plot.flagged = value
                            .split(',')
                            .map(|s| s.parse().map_err(|_| err(lineno, format!("bad index {s:?}"))))
                            .collect::<Result<_, _>>()?;
                    }
                }
                "group" => {
                    plot.groups.push(PointSet {
                        label: value.to_string(),
                        fields: Vec::new(),
                        records: Vec::new(),
                    });
                    expect_header = true;
                }
                other => return Err(err(lineno, format!("unknown key {other:?}"))),
            }
            continue;
        }
        let group = plot
            .groups
            .last_mut()
            .ok_or_else(|| err(lineno, "data before first group".into()))?;
        if expect_header {
            group.fields = line.split(',').map(str::to_string).collect();
            expect_header = false;
            continue;
        }
        let record: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>().map_err(|_| err(lineno, format!("bad number {s:?}"))))
            .collect::<Result<_, _>>()?;
        if record.len() != group.fields.len() {
            return Err(err(lineno, format!("expected {} fields, got {}", group.fields.len(), record.len())));
        }
        group.records.push(record);
    }
    plot.kind = kind.ok_or_else(|| err(0, "missing kind line".into()))?;
    Ok(plot)
}

/// Type-7 sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Standard-normal quantiles at plotting positions `(i - 0.5)/n`. The lower
/// half is computed and mirrored, so the result is exactly antisymmetric.
pub fn normal_plotting_positions(n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n];
    for i in 0..n / 2 {
        let v = normal_quantile((i as f64 + 0.5) / n as f64);
        q[i] = v;
        q[n - 1 - i] = -v;
    }
    q
}

/// Normal QQ data: z-scored, sorted residuals against theoretical quantiles,
/// plus a reference line through the first and third quartile pairs.
pub fn qq_plot_data(residuals: &[f64]) -> Result<PlotData, ReportError> {
    let n = residuals.len();
    if n < 3 {
        return Err(ReportError::TooShort { found: n, required: 3 });
    }
    let m = mean(residuals);
    let sd = sample_variance(residuals).sqrt();
    if !(sd > 0.0) {
        return Err(ReportError::ZeroVariance);
    }
    let mut z: Vec<f64> = residuals.iter().map(|e| (e - m) / sd).collect();
    z.sort_by(f64::total_cmp);
    let theoretical = normal_plotting_positions(n);

    let (t25, t75) = (normal_quantile(0.25), normal_quantile(0.75));
    let (s25, s75) = (quantile_sorted(&z, 0.25), quantile_sorted(&z, 0.75));
    let slope = (s75 - s25) / (t75 - t25);

    let mut plot = PlotData::new(PlotKind::Qq);
    plot.groups.push(PointSet {
        label: "residuals".into(),
        fields: vec!["theoretical".into(), "sample".into()],
        records: theoretical.into_iter().zip(z).map(|(t, s)| vec![t, s]).collect(),
    });
    plot.reference_lines.push(ReferenceLine {
        label: "quartiles".into(),
        slope,
        intercept: s25 - slope * t25,
    });
    Ok(plot)
}

/// Cook's distance levels drawn on the residuals-vs-leverage plot.
pub const COOKS_CONTOURS: [f64; 2] = [0.5, 1.0];
const CONTOUR_POINTS: usize = 50;

/// Influence threshold `4/n` for the Cook's distance bar chart.
pub fn influence_threshold(n: usize) -> f64 {
    4.0 / n as f64
}

/// Standardized residual on the Cook's distance contour `d` at leverage `h`
/// for a model with `p` coefficients: `r = sqrt(d p (1 - h) / h)`.
pub fn cooks_contour(d: f64, p: usize, h: f64) -> f64 {
    (d * p as f64 * (1.0 - h) / h).sqrt()
}

/// Residuals-vs-fitted, scale-location, residuals-vs-leverage (with Cook's
/// contours) and Cook's distance bars for one fit.
pub fn residual_diagnostic_data(fit: &OlsFit) -> Result<Vec<PlotData>, ReportError> {
    let n = fit.n;
    let cooks = cooks_distance(fit);
    // Unit-leverage points have no standardized residual; they are emitted
    // as NaN and flagged.
    let standardized: Vec<f64> = match standardized_residuals(fit) {
        Ok(r) => r,
        Err(RegressError::UnitLeverage(_)) => fit
            .residuals
            .iter()
            .zip(&fit.leverage)
            .enumerate()
            .map(|(t, (e, h))| {
                if cooks.exact_leverage.contains(&t) {
                    f64::NAN
                } else {
                    e / (fit.residual_se * (1.0 - h).sqrt())
                }
            })
            .collect(),
        Err(e) => return Err(e.into()),
    };
    let index = |t: usize| t as f64;

    let mut rvf = PlotData::new(PlotKind::ResidualsVsFitted);
    rvf.groups.push(PointSet {
        label: "observations".into(),
        fields: vec!["index".into(), "fitted".into(), "residual".into()],
        records: (0..n).map(|t| vec![index(t), fit.fitted[t], fit.residuals[t]]).collect(),
    });
    rvf.reference_lines.push(ReferenceLine {
        label: "zero".into(),
        slope: 0.0,
        intercept: 0.0,
    });

    let mut sl = PlotData::new(PlotKind::ScaleLocation);
    sl.groups.push(PointSet {
        label: "observations".into(),
        fields: vec!["index".into(), "fitted".into(), "sqrtAbsStdResidual".into()],
        records: (0..n)
            .map(|t| vec![index(t), fit.fitted[t], standardized[t].abs().sqrt()])
            .collect(),
    });
    sl.flagged = cooks.exact_leverage.clone();

    let mut rvl = PlotData::new(PlotKind::ResidualsVsLeverage);
    rvl.groups.push(PointSet {
        label: "observations".into(),
        fields: vec!["index".into(), "leverage".into(), "stdResidual".into()],
        records: (0..n).map(|t| vec![index(t), fit.leverage[t], standardized[t]]).collect(),
    });
    let finite_h: Vec<f64> = fit.leverage.iter().copied().filter(|h| *h > 0.0 && *h < 1.0).collect();
    if let (Some(lo), Some(hi)) = (
        finite_h.iter().copied().reduce(f64::min),
        finite_h.iter().copied().reduce(f64::max),
    ) {
        let grid: Vec<f64> = (0..CONTOUR_POINTS)
            .map(|i| lo + (hi - lo) * i as f64 / (CONTOUR_POINTS - 1) as f64)
            .collect();
        let p = fit.n_params();
        for d in COOKS_CONTOURS {
            for (side, sign) in [("upper", 1.0), ("lower", -1.0)] {
                rvl.groups.push(PointSet {
                    label: format!("cooks-{d}-{side}"),
                    fields: vec!["leverage".into(), "stdResidual".into()],
                    records: grid.iter().map(|&h| vec![h, sign * cooks_contour(d, p, h)]).collect(),
                });
            }
        }
    }
    rvl.flagged = cooks.exact_leverage.clone();

    let bar = cooks_bar_data(&cooks, n);
    Ok(vec![rvf, sl, rvl, bar])
}

fn cooks_bar_data(cooks: &CooksDistance, n: usize) -> PlotData {
    let threshold = influence_threshold(n);
    let mut bar = PlotData::new(PlotKind::CooksBar);
    bar.groups.push(PointSet {
        label: "observations".into(),
        fields: vec!["index".into(), "cooksDistance".into()],
        records: cooks.values.iter().enumerate().map(|(t, d)| vec![t as f64, *d]).collect(),
    });
    bar.reference_lines.push(ReferenceLine {
        label: "threshold".into(),
        slope: 0.0,
        intercept: threshold,
    });
    bar.flagged = cooks
        .values
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > threshold)
        .map(|(t, _)| t)
        .collect();
    bar
}

pub const HISTOGRAM_BINS: usize = 20;

/// Equal-width bin counts over `min..=max`; a constant series lands in the
/// first bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in values {
        let b = if width > 0.0 {
            (((v - lo) / width).floor() as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let upper = if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 };
            (lo + width * i as f64, upper, c)
        })
        .collect()
}

/// Pairwise scatter sets (upper triangle) and per-series histograms.
pub fn scatter_matrix_data(panel: &FactorPanel) -> PlotData {
    let series: Vec<_> = panel.all_series().collect();
    let mut plot = PlotData::new(PlotKind::ScatterMatrix);
    plot.labels = series.iter().map(|s| s.label.clone()).collect();
    for i in 0..series.len() {
        for j in (i + 1)..series.len() {
            let (a, b) = (series[i], series[j]);
            plot.groups.push(PointSet {
                label: format!("pair:{}:{}", a.label, b.label),
                fields: vec![a.label.clone(), b.label.clone()],
                records: a.values.iter().zip(&b.values).map(|(x, y)| vec![*x, *y]).collect(),
            });
        }
    }
    for s in &series {
        plot.groups.push(PointSet {
            label: format!("hist:{}", s.label),
            fields: vec!["binLower".into(), "binUpper".into(), "count".into()],
            records: histogram(&s.values, HISTOGRAM_BINS)
                .into_iter()
                .map(|(lo, hi, c)| vec![lo, hi, c as f64])
                .collect(),
        });
    }
    plot
}

/// One cell per matrix entry, row-major.
pub fn heatmap_data(matrix: &CorrelationMatrix) -> PlotData {
    let mut plot = PlotData::new(PlotKind::Heatmap);
    plot.labels = matrix.labels.clone();
    let k = matrix.dim();
    plot.groups.push(PointSet {
        label: "cells".into(),
        fields: vec!["row".into(), "col".into(), "value".into()],
        records: (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| vec![i as f64, j as f64, matrix.entries[i][j]])
            .collect(),
    });
    plot
}

/// Correlation matrix over every series of a panel, dependent first.
pub fn panel_correlations(panel: &FactorPanel) -> Result<CorrelationMatrix, ReportError> {
    let cols: Vec<(&str, &[f64])> = panel.all_series().map(|s| (s.label.as_str(), s.values.as_slice())).collect();
    Ok(correlation_of(&cols)?)
}

/// A fit together with its residual diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelDiagnostics {
    pub fit: OlsFit,
    pub durbin_watson: TestResult,
    pub jarque_bera: TestResult,
    pub vif: VifReport,
    pub cooks: CooksDistance,
}

impl ModelDiagnostics {
    pub fn compute<C: Columns>(data: &C, fit: OlsFit) -> Result<Self, ReportError> {
        let durbin_watson = durbin_watson(&fit.residuals)?;
        let jarque_bera = jarque_bera(&fit.residuals)?;
        let vif = vif(data, fit.regressors())?;
        let cooks = cooks_distance(&fit);
        Ok(Self {
            fit,
            durbin_watson,
            jarque_bera,
            vif,
            cooks,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Paired {
    #[serde(with = "crate::serde_float")]
    pub factors: f64,
    #[serde(with = "crate::serde_float")]
    pub innovations: f64,
    /// `factors - innovations`.
    #[serde(with = "crate::serde_float")]
    pub delta: f64,
}

impl Paired {
    fn new(factors: f64, innovations: f64) -> Self {
        Self {
            factors,
            innovations,
            delta: factors - innovations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelComparison {
    pub coefficients: BTreeMap<String, Paired>,
    pub r_squared: Paired,
    pub durbin_watson: Paired,
    pub jarque_bera: Paired,
    pub vif: BTreeMap<String, Paired>,
    /// Set when either model's residuals reject normality at 1%.
    pub heavy_tail_advisory: bool,
}

pub const HEAVY_TAIL_LEVEL: f64 = 0.01;

/// Side-by-side comparison of the factor and innovation models.
pub fn compare_models(factors: &ModelDiagnostics, innovations: &ModelDiagnostics) -> Result<ModelComparison, ReportError> {
    let (a, b) = (&factors.fit, &innovations.fit);
    if a.terms != b.terms {
        return Err(ReportError::LabelMismatch(a.terms.clone(), b.terms.clone()));
    }
    let coefficients = a
        .terms
        .iter()
        .zip(a.coefficients.iter().zip(&b.coefficients))
        .map(|(t, (x, y))| (t.clone(), Paired::new(*x, *y)))
        .collect();
    let vif = factors
        .vif
        .entries
        .iter()
        .zip(&innovations.vif.entries)
        .map(|(x, y)| (x.label.clone(), Paired::new(x.value, y.value)))
        .collect();
    let heavy = |d: &ModelDiagnostics| d.jarque_bera.p_value.is_some_and(|p| p < HEAVY_TAIL_LEVEL);
    Ok(ModelComparison {
        coefficients,
        r_squared: Paired::new(a.r_squared, b.r_squared),
        durbin_watson: Paired::new(factors.durbin_watson.statistic, innovations.durbin_watson.statistic),
        jarque_bera: Paired::new(factors.jarque_bera.statistic, innovations.jarque_bera.statistic),
        vif,
        heavy_tail_advisory: heavy(factors) || heavy(innovations),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportMeta {
    pub start: YearMonth,
    pub end: YearMonth,
    pub n: usize,
    pub dependent: String,
    pub factors: Vec<String>,
    pub seed: u64,
    pub restandardized_innovations: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LabelledStats {
    pub label: String,
    #[serde(flatten)]
    pub stats: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub factors: CorrelationMatrix,
    pub innovations: CorrelationMatrix,
}

/// Fit summary without the per-observation arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GarchSummary {
    pub label: String,
    pub params: ArmaGarchParams,
    pub std_errors: Option<[f64; 6]>,
    pub log_likelihood: f64,
    pub persistence: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl From<&ArmaGarchFit> for GarchSummary {
    fn from(f: &ArmaGarchFit) -> Self {
        Self {
            label: f.label.clone(),
            params: f.params,
            std_errors: f.std_errors,
            log_likelihood: f.log_likelihood,
            persistence: f.params.persistence(),
            converged: f.converged,
            iterations: f.iterations,
            note: f.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTest {
    pub series: String,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub y: String,
    pub x: String,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestsSection {
    pub adf: Vec<SeriesTest>,
    pub ljung_box: Vec<SeriesTest>,
    /// Ljung-Box on innovations and on squared innovations.
    pub ljung_box_innovations: Vec<SeriesTest>,
    pub engle_granger: Vec<PairTest>,
    pub comparison: ModelComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BackwardStep {
    pub terms: Vec<String>,
    #[serde(with = "crate::serde_float::vec")]
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
}

impl From<&OlsFit> for BackwardStep {
    fn from(f: &OlsFit) -> Self {
        Self {
            terms: f.terms.clone(),
            p_values: f.p_values.clone(),
            r_squared: f.r_squared,
            adj_r_squared: f.adj_r_squared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BackwardSection {
    pub alpha_out: f64,
    pub factors: Vec<BackwardStep>,
    pub innovations: Vec<BackwardStep>,
}

/// Everything the pipeline produces, paired between the factor and the
/// innovation analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub meta: ReportMeta,
    pub summary_stats: Vec<LabelledStats>,
    pub correlations: Correlations,
    pub garch_fits: Vec<GarchSummary>,
    pub factor_model: ModelDiagnostics,
    pub innovation_model: ModelDiagnostics,
    pub tests: TestsSection,
    pub backward: BackwardSection,
    pub plots: BTreeMap<String, PlotData>,
}

/// Diagnostic plot set for one model, keyed `<prefix>-<kind>`.
pub fn model_plots(prefix: &str, fit: &OlsFit) -> Result<BTreeMap<String, PlotData>, ReportError> {
    let mut plots = BTreeMap::new();
    plots.insert(format!("{prefix}-{}", PlotKind::Qq), qq_plot_data(&fit.residuals)?);
    for p in residual_diagnostic_data(fit)? {
        plots.insert(format!("{prefix}-{}", p.kind), p);
    }
    Ok(plots)
}

/// Fixed-point rendering with negative zero folded to zero.
pub fn fixed(value: f64, decimals: usize) -> String {
    if !value.is_finite() {
        return "NA".into();
    }
    let s = format!("{value:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub const COEFFICIENT_HEADER: &str = "term,Coefficients,Standard Error,t Stat,P-value";

pub fn coefficient_table(fit: &OlsFit, decimals: usize) -> String {
    let mut out = format!("{COEFFICIENT_HEADER}\n");
    for (i, term) in fit.terms.iter().enumerate() {
        let row = [fit.coefficients[i], fit.std_errors[i], fit.t_stats[i], fit.p_values[i]].map(|v| fixed(v, decimals));
        out.push_str(&format!("{term},{}\n", row.join(",")));
    }
    out
}

pub fn statistics_table(fit: &OlsFit, decimals: usize) -> String {
    let mut out = String::from("Regression Statistics,value\n");
    for (name, v) in [
        ("Multiple R", fit.multiple_r),
        ("R Square", fit.r_squared),
        ("Adjusted R Square", fit.adj_r_squared),
        ("Standard Error", fit.residual_se),
    ] {
        out.push_str(&format!("{name},{}\n", fixed(v, decimals)));
    }
    out.push_str(&format!("Observations,{}\n", fit.n));
    out
}

pub fn correlation_table(m: &CorrelationMatrix, decimals: usize) -> String {
    let mut out = format!(",{}\n", m.labels.join(","));
    for (label, row) in m.labels.iter().zip(&m.entries) {
        let cells: Vec<String> = row.iter().map(|v| fixed(*v, decimals)).collect();
        out.push_str(&format!("{label},{}\n", cells.join(",")));
    }
    out
}

pub fn summary_table(stats: &[LabelledStats], decimals: usize) -> String {
    let labels: Vec<&str> = stats.iter().map(|s| s.label.as_str()).collect();
    let means: Vec<String> = stats.iter().map(|s| fixed(s.stats.mean, decimals)).collect();
    let sds: Vec<String> = stats.iter().map(|s| fixed(s.stats.std_dev, decimals)).collect();
    format!(
        ",{}\nMean,{}\nStandard deviation,{}\n",
        labels.join(","),
        means.join(","),
        sds.join(",")
    )
}

/// File name and contents of every table, in order.
pub fn table_files(report: &AnalysisReport) -> Vec<(String, String)> {
    vec![
        ("table1.csv".into(), summary_table(&report.summary_stats, 4)),
        ("table2.csv".into(), correlation_table(&report.correlations.factors, 3)),
        ("table3.csv".into(), coefficient_table(&report.factor_model.fit, 3)),
        ("table4.csv".into(), statistics_table(&report.factor_model.fit, 3)),
        ("table5.csv".into(), correlation_table(&report.correlations.innovations, 3)),
        ("table6.csv".into(), coefficient_table(&report.innovation_model.fit, 4)),
        ("table7.csv".into(), statistics_table(&report.innovation_model.fit, 4)),
    ]
}

/// Writes through a sibling temporary file so readers never see a partial
/// file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// Writes `table1.csv`..`table7.csv`, `report.json` and `plots/<name>.csv`
/// under `dir`. Returns the written paths in write order.
pub fn render_tables(report: &AnalysisReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let plot_dir = dir.join("plots");
    fs::create_dir_all(&plot_dir).map_err(|source| ReportError::Io {
        path: plot_dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    for (name, body) in table_files(report) {
        let path = dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        written.push(path);
    }
    for (name, plot) in &report.plots {
        let path = plot_dir.join(format!("{name}.csv"));
        write_atomic(&path, render_plot_csv(plot).as_bytes())?;
        written.push(path);
    }
    let path = dir.join("report.json");
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    write_atomic(&path, &json)?;
    written.push(path);
    Ok(written)
}
