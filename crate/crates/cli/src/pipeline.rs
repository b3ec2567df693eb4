//! Stage implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use factorlab::ingest::{
    align_monthly, build_panel, parse_factor_csv, parse_price_csv, parse_yield_csv, DatasetConfig, FactorPanel, RawTable,
};
use factorlab::regress::{backward_eliminate, ols_fit, DesignSpec, OlsFit};
use factorlab::report::{
    compare_models, heatmap_data, model_plots, panel_correlations, render_tables, scatter_matrix_data, AnalysisReport,
    BackwardSection, BackwardStep, Correlations, GarchSummary, LabelledStats, ModelComparison, ModelDiagnostics,
    PairTest, PlotData, ReportError, ReportMeta, SeriesTest, TestsSection,
};
use factorlab::series::{summarize, CorrelationMatrix};
use factorlab::stests::{adf_test, engle_granger, ljung_box, LagSelection};
use factorlab::tsmodel::{fit, innovation_panel, ArmaGarchFit, FitOptions};
use factorlab::ReturnSeries;
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::manifest::{sha256_file, FileDigest, RunManifest, StageRecord};
use crate::{CliError, Command, Options};

pub const INGEST: &str = "ingest";
pub const SUMMARIZE: &str = "summarize";
pub const FIT_GARCH: &str = "fit-garch";
pub const REGRESS: &str = "regress";
pub const DIAGNOSE: &str = "diagnose";
pub const REPORT: &str = "report";

pub const STAGE_ORDER: [&str; 6] = [INGEST, SUMMARIZE, FIT_GARCH, REGRESS, DIAGNOSE, REPORT];

pub const PANEL_FILE: &str = "panel.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const GARCH_FILE: &str = "garch.json";
pub const REGRESS_FILE: &str = "regress.json";
pub const DIAGNOSE_FILE: &str = "diagnostics.json";

/// ARMA coefficients removed from the Ljung-Box degrees of freedom when the
/// test runs on filtered innovations.
const ARMA_PARAMS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelArtifact {
    pub config: DatasetConfig,
    pub panel: FactorPanel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SummaryArtifact {
    pub summary_stats: Vec<LabelledStats>,
    pub correlations: CorrelationMatrix,
    pub adf: Vec<SeriesTest>,
    pub ljung_box: Vec<SeriesTest>,
    pub engle_granger: Vec<PairTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegressArtifact {
    pub regressors: Vec<String>,
    pub alpha_out: f64,
    pub factor: OlsFit,
    pub factor_backward: Vec<BackwardStep>,
    pub innovation: Option<OlsFit>,
    pub innovation_backward: Option<Vec<BackwardStep>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnoseArtifact {
    pub factor: ModelDiagnostics,
    pub innovation: ModelDiagnostics,
    pub comparison: ModelComparison,
    pub innovation_correlations: CorrelationMatrix,
    pub ljung_box_innovations: Vec<SeriesTest>,
    pub plots: BTreeMap<String, PlotData>,
}

pub fn run(command: Command, options: &Options) -> Result<(), CliError> {
    let started = Instant::now();
    match command {
        Command::Ingest => ingest(options)?,
        Command::Summarize => summarize_stage(options)?,
        Command::FitGarch => fit_garch(options)?,
        Command::Regress => regress(options, options.use_innovations)?,
        Command::Diagnose => diagnose(options)?,
        Command::Report => report(options)?,
        Command::All => {
            ingest(options)?;
            summarize_stage(options)?;
            fit_garch(options)?;
            regress(options, true)?;
            diagnose(options)?;
            report(options)?;
        }
    }
    info!("done in {:.2?}", started.elapsed());
    Ok(())
}

fn timed<T>(stage: &'static str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    let t = Instant::now();
    info!("{stage}: start");
    let out = f()?;
    info!("{stage}: finished in {:.2?}", t.elapsed());
    Ok(out)
}

fn ensure_out(stage: &'static str, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(stage, out, e))
}

/// Loads the manifest and re-verifies input hashes.
fn resume(stage: &'static str, options: &Options) -> Result<RunManifest, CliError> {
    let manifest = RunManifest::load(stage, &options.out)?;
    manifest.verify_inputs(stage)?;
    Ok(manifest)
}

fn finish(
    stage: &'static str,
    options: &Options,
    mut manifest: RunManifest,
    artifacts: Vec<(String, String)>,
) -> Result<(), CliError> {
    manifest.complete(
        stage,
        &STAGE_ORDER,
        StageRecord {
            artifacts: artifacts.into_iter().collect(),
            seed: options.seed,
        },
    );
    manifest.save(stage, &options.out)?;
    for name in manifest.stages[stage].artifacts.keys() {
        println!("{stage}: wrote {}", options.out.join(name).display());
    }
    Ok(())
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_text(stage: &'static str, path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(stage, path, e))
}

/// Clips all three tables to their common months inside the window. The
/// month before the window's first common month is kept for prices when
/// present, since the first return consumes it.
pub fn align_inputs(
    prices: &RawTable,
    riskfree: &RawTable,
    factors: &RawTable,
    config: &DatasetConfig,
) -> Result<[RawTable; 3], factorlab::ingest::IngestError> {
    let aligned = align_monthly(
        &[prices.clone(), riskfree.clone(), factors.clone()],
        (config.start, config.end),
    )?;
    let [mut p, rf, f]: [RawTable; 3] = aligned.try_into().expect("three tables in, three out");
    let lead = p.rows[0].date.prev();
    if let Some(row) = prices.rows.iter().find(|r| r.date == lead) {
        p.rows.insert(0, row.clone());
    }
    Ok([p, rf, f])
}

fn ingest(options: &Options) -> Result<(), CliError> {
    const STAGE: &str = INGEST;
    timed(STAGE, || {
        let config_path = options
            .config
            .as_ref()
            .ok_or_else(|| CliError::data(STAGE, "--config is required"))?;
        let mut config = DatasetConfig::parse(&read_text(STAGE, config_path)?)
            .map_err(|e| CliError::data(STAGE, format!("{}: {e}", config_path.display())))?;
        if let Some(regressors) = &options.factors {
            config.regressors = regressors.clone();
            config.validate().map_err(|e| CliError::data(STAGE, e))?;
        }
        let base = config_path.parent().unwrap_or(Path::new("."));
        let path_of = |field: &Option<String>, key: &str| {
            field
                .as_deref()
                .map(|p| resolve(base, p))
                .ok_or_else(|| CliError::data(STAGE, format!("config has no `{key}` path")))
        };
        let prices_path = path_of(&config.prices_path, "prices")?;
        let rf_path = path_of(&config.riskfree_path, "riskfree")?;
        let factors_path = path_of(&config.factors_path, "factors_file")?;

        let named = |what: &str, path: &Path, e: factorlab::ingest::IngestError| {
            CliError::data(STAGE, format!("{what} {}: {e}", path.display()))
        };
        let prices = parse_price_csv(&read_text(STAGE, &prices_path)?).map_err(|e| named("prices", &prices_path, e))?;
        let riskfree = parse_yield_csv(&read_text(STAGE, &rf_path)?).map_err(|e| named("risk-free", &rf_path, e))?;
        let factors = parse_factor_csv(&read_text(STAGE, &factors_path)?, config.factor_scale)
            .map_err(|e| named("factors", &factors_path, e))?;
        let [p, rf, f] = align_inputs(&prices, &riskfree, &factors, &config).map_err(|e| CliError::data(STAGE, e))?;
        let panel = build_panel(&p, &rf, &f, &config).map_err(|e| CliError::data(STAGE, e))?;
        info!(
            "{STAGE}: {} months {}..{}, series {:?}",
            panel.len(),
            panel.dates[0],
            panel.dates[panel.len() - 1],
            panel.labels()
        );

        ensure_out(STAGE, &options.out)?;
        let mut inputs = BTreeMap::new();
        for (role, path) in [
            ("config", config_path.clone()),
            ("prices", prices_path),
            ("riskfree", rf_path),
            ("factors", factors_path),
        ] {
            let sha256 = sha256_file(STAGE, &path)?;
            inputs.insert(role.to_string(), FileDigest { path, sha256 });
        }
        let manifest = RunManifest {
            config: Some(config_path.clone()),
            inputs,
            seed: options.seed,
            out: options.out.clone(),
            stages: BTreeMap::new(),
        };
        let artifact = RunManifest::write_artifact(STAGE, &options.out, PANEL_FILE, &PanelArtifact { config, panel })?;
        finish(STAGE, options, manifest, vec![artifact])
    })
}

fn load_panel(stage: &'static str, options: &Options, manifest: &RunManifest) -> Result<PanelArtifact, CliError> {
    manifest.read_artifact(stage, &options.out, INGEST, PANEL_FILE)
}

fn lag_selection(options: &Options) -> LagSelection {
    options.adf_maxlag.map_or(LagSelection::Auto, LagSelection::MaxAic)
}

fn summarize_stage(options: &Options) -> Result<(), CliError> {
    const STAGE: &str = SUMMARIZE;
    timed(STAGE, || {
        let manifest = resume(STAGE, options)?;
        let PanelArtifact { panel, .. } = load_panel(STAGE, options, &manifest)?;
        let num = |label: &str, e: &dyn std::fmt::Display| CliError::numerical(STAGE, format!("series {label}: {e}"));

        let mut summary_stats = Vec::new();
        let mut adf = Vec::new();
        let mut lb = Vec::new();
        for s in panel.all_series() {
            let stats = summarize(&s.values).map_err(|e| num(&s.label, &e))?;
            summary_stats.push(LabelledStats {
                label: s.label.clone(),
                stats,
            });
            adf.push(SeriesTest {
                series: s.label.clone(),
                result: adf_test(&s.values, lag_selection(options)).map_err(|e| num(&s.label, &e))?,
            });
            lb.push(SeriesTest {
                series: s.label.clone(),
                result: ljung_box(&s.values, options.lb_lags, 0).map_err(|e| num(&s.label, &e))?,
            });
        }
        let series: Vec<_> = panel.all_series().collect();
        let mut eg = Vec::new();
        for i in 0..series.len() {
            for j in (i + 1)..series.len() {
                let (y, x) = (series[i], series[j]);
                let result = engle_granger(&y.values, &x.values)
                    .map_err(|e| num(&format!("{} ~ {}", y.label, x.label), &e))?;
                eg.push(PairTest {
                    y: y.label.clone(),
                    x: x.label.clone(),
                    result,
                });
            }
        }
        let correlations = panel_correlations(&panel).map_err(|e| CliError::numerical(STAGE, e))?;
        let artifact = SummaryArtifact {
            summary_stats,
            correlations,
            adf,
            ljung_box: lb,
            engle_granger: eg,
        };
        let written = RunManifest::write_artifact(STAGE, &options.out, SUMMARY_FILE, &artifact)?;
        finish(STAGE, options, manifest, vec![written])
    })
}

/// Per-series optimizer seed: independent of scheduling, distinct per index.
pub fn series_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn fit_garch(options: &Options) -> Result<(), CliError> {
    const STAGE: &str = FIT_GARCH;
    timed(STAGE, || {
        let manifest = resume(STAGE, options)?;
        let PanelArtifact { panel, .. } = load_panel(STAGE, options, &manifest)?;
        let series: Vec<_> = panel.all_series().cloned().collect();
        let fits: Vec<Result<ArmaGarchFit, CliError>> = series
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let t = Instant::now();
                let rs = ReturnSeries::new(s.label.clone(), s.values.clone())
                    .map_err(|e| CliError::data(STAGE, format!("series {}: {e}", s.label)))?;
                let opts = FitOptions {
                    seed: series_seed(options.seed, i),
                    ..FitOptions::default()
                };
                let f = fit(&rs, &opts).map_err(|e| CliError::numerical(STAGE, format!("series {}: {e}", s.label)))?;
                info!(
                    "{STAGE}: {} alpha+beta {:.4} loglik {:.3} in {:.2?}",
                    s.label,
                    f.params.persistence(),
                    f.log_likelihood,
                    t.elapsed()
                );
                Ok(f)
            })
            .collect();
        let fits = fits.into_iter().collect::<Result<Vec<_>, _>>()?;
        let unconverged: Vec<String> = fits
            .iter()
            .filter(|f| !f.converged)
            .map(|f| match &f.note {
                Some(note) => format!("{} ({note})", f.label),
                None => f.label.clone(),
            })
            .collect();
        if !unconverged.is_empty() {
            let message = format!("GARCH fit did not converge for {}", unconverged.join(", "));
            if options.allow_unconverged {
                log::warn!("{STAGE}: {message}; continuing (--allow-unconverged)");
            } else {
                return Err(CliError::numerical(STAGE, format!("{message}; pass --allow-unconverged to continue")));
            }
        }
        let written = RunManifest::write_artifact(STAGE, &options.out, GARCH_FILE, &fits)?;
        finish(STAGE, options, manifest, vec![written])
    })
}

fn build_innovation_panel(stage: &'static str, panel: &FactorPanel, fits: &[ArmaGarchFit]) -> Result<FactorPanel, CliError> {
    let by_label = |label: &str| {
        fits.iter()
            .find(|f| f.label == label)
            .ok_or_else(|| CliError::data(stage, format!("no GARCH fit for series {label}; rerun fit-garch")))
    };
    let dep = by_label(&panel.dependent.label)?;
    let factors = panel
        .factors
        .iter()
        .map(|s| by_label(&s.label).cloned())
        .collect::<Result<Vec<_>, _>>()?;
    innovation_panel(&panel.dates, dep, &factors, false).map_err(|e| CliError::numerical(stage, e))
}

fn regress(options: &Options, use_innovations: bool) -> Result<(), CliError> {
    const STAGE: &str = REGRESS;
    timed(STAGE, || {
        let manifest = resume(STAGE, options)?;
        let PanelArtifact { config, panel } = load_panel(STAGE, options, &manifest)?;
        let regressors = options.factors.clone().unwrap_or(config.regressors);
        let labels: Vec<&str> = regressors.iter().map(String::as_str).collect();
        let num = |what: &str, e: &dyn std::fmt::Display| CliError::numerical(STAGE, format!("{what}: {e}"));

        let spec = DesignSpec::new(panel.dependent.label.clone(), &labels);
        let factor = ols_fit(&panel, &spec).map_err(|e| num("factor model", &e))?;
        let factor_backward = backward_eliminate(&panel, &spec, options.alpha_out)
            .map_err(|e| num("factor backward elimination", &e))?
            .iter()
            .map(BackwardStep::from)
            .collect();

        let (innovation, innovation_backward) = if use_innovations {
            if !manifest.stages.contains_key(FIT_GARCH) {
                return Err(CliError::data(
                    STAGE,
                    "--use-innovations needs GARCH artifacts; run fit-garch first",
                ));
            }
            let fits: Vec<ArmaGarchFit> = manifest.read_artifact(STAGE, &options.out, FIT_GARCH, GARCH_FILE)?;
            let ipanel = build_innovation_panel(STAGE, &panel, &fits)?;
            let ispec = DesignSpec::new(ipanel.dependent.label.clone(), &labels);
            let fit = ols_fit(&ipanel, &ispec).map_err(|e| num("innovation model", &e))?;
            let trail = backward_eliminate(&ipanel, &ispec, options.alpha_out)
                .map_err(|e| num("innovation backward elimination", &e))?
                .iter()
                .map(BackwardStep::from)
                .collect();
            (Some(fit), Some(trail))
        } else {
            (None, None)
        };
        info!("{STAGE}: factor R^2 {:.4}", factor.r_squared);
        if let Some(f) = &innovation {
            info!("{STAGE}: innovation R^2 {:.4}", f.r_squared);
        }
        let artifact = RegressArtifact {
            regressors,
            alpha_out: options.alpha_out,
            factor,
            factor_backward,
            innovation,
            innovation_backward,
        };
        let written = RunManifest::write_artifact(STAGE, &options.out, REGRESS_FILE, &artifact)?;
        finish(STAGE, options, manifest, vec![written])
    })
}

fn report_err(stage: &'static str, e: ReportError) -> CliError {
    match e {
        ReportError::Io { path, source } => CliError::io(stage, path, source),
        other => CliError::numerical(stage, other),
    }
}

fn diagnose(options: &Options) -> Result<(), CliError> {
    const STAGE: &str = DIAGNOSE;
    timed(STAGE, || {
        let manifest = resume(STAGE, options)?;
        let PanelArtifact { panel, .. } = load_panel(STAGE, options, &manifest)?;
        let reg: RegressArtifact = manifest.read_artifact(STAGE, &options.out, REGRESS, REGRESS_FILE)?;
        let innovation_fit = reg
            .innovation
            .ok_or_else(|| CliError::data(STAGE, "no innovation model; run regress --use-innovations first"))?;
        let fits: Vec<ArmaGarchFit> = manifest.read_artifact(STAGE, &options.out, FIT_GARCH, GARCH_FILE)?;
        let ipanel = build_innovation_panel(STAGE, &panel, &fits)?;
        let rerr = |e| report_err(STAGE, e);

        let factor = ModelDiagnostics::compute(&panel, reg.factor).map_err(rerr)?;
        let innovation = ModelDiagnostics::compute(&ipanel, innovation_fit).map_err(rerr)?;
        let comparison = compare_models(&factor, &innovation).map_err(rerr)?;

        let mut lb = Vec::new();
        for f in &fits {
            let squared: Vec<f64> = f.innovations.iter().map(|e| e * e).collect();
            for (label, values) in [(f.label.clone(), &f.innovations), (format!("{}^2", f.label), &squared)] {
                let result = ljung_box(values, options.lb_lags, ARMA_PARAMS)
                    .map_err(|e| CliError::numerical(STAGE, format!("series {label}: {e}")))?;
                lb.push(SeriesTest { series: label, result });
            }
        }

        let factor_corr = panel_correlations(&panel).map_err(rerr)?;
        let innovation_corr = panel_correlations(&ipanel).map_err(rerr)?;
        let mut plots = model_plots("factor", &factor.fit).map_err(rerr)?;
        plots.extend(model_plots("innovation", &innovation.fit).map_err(rerr)?);
        plots.insert("factor-scatter-matrix".into(), scatter_matrix_data(&panel));
        plots.insert("innovation-scatter-matrix".into(), scatter_matrix_data(&ipanel));
        plots.insert("factor-heatmap".into(), heatmap_data(&factor_corr));
        plots.insert("innovation-heatmap".into(), heatmap_data(&innovation_corr));

        info!(
            "{STAGE}: DW {:.4} / {:.4}, heavy-tail advisory {}",
            factor.durbin_watson.statistic, innovation.durbin_watson.statistic, comparison.heavy_tail_advisory
        );
        let artifact = DiagnoseArtifact {
            factor,
            innovation,
            comparison,
            innovation_correlations: innovation_corr,
            ljung_box_innovations: lb,
            plots,
        };
        let written = RunManifest::write_artifact(STAGE, &options.out, DIAGNOSE_FILE, &artifact)?;
        finish(STAGE, options, manifest, vec![written])
    })
}

fn report(options: &Options) -> Result<(), CliError> {
    const STAGE: &str = REPORT;
    timed(STAGE, || {
        let manifest = resume(STAGE, options)?;
        let out = &options.out;
        let PanelArtifact { panel, .. } = load_panel(STAGE, options, &manifest)?;
        let summary: SummaryArtifact = manifest.read_artifact(STAGE, out, SUMMARIZE, SUMMARY_FILE)?;
        let fits: Vec<ArmaGarchFit> = manifest.read_artifact(STAGE, out, FIT_GARCH, GARCH_FILE)?;
        let reg: RegressArtifact = manifest.read_artifact(STAGE, out, REGRESS, REGRESS_FILE)?;
        let diag: DiagnoseArtifact = manifest.read_artifact(STAGE, out, DIAGNOSE, DIAGNOSE_FILE)?;
        let innovation_backward = reg
            .innovation_backward
            .ok_or_else(|| CliError::data(STAGE, "no innovation model; run regress --use-innovations first"))?;

        let report = AnalysisReport {
            meta: ReportMeta {
                start: panel.dates[0],
                end: panel.dates[panel.len() - 1],
                n: panel.len(),
                dependent: panel.dependent.label.clone(),
                factors: reg.regressors.clone(),
                seed: manifest.stages[FIT_GARCH].seed,
                restandardized_innovations: false,
            },
            summary_stats: summary.summary_stats,
            correlations: Correlations {
                factors: summary.correlations,
                innovations: diag.innovation_correlations,
            },
            garch_fits: fits.iter().map(GarchSummary::from).collect(),
            factor_model: diag.factor,
            innovation_model: diag.innovation,
            tests: TestsSection {
                adf: summary.adf,
                ljung_box: summary.ljung_box,
                ljung_box_innovations: diag.ljung_box_innovations,
                engle_granger: summary.engle_granger,
                comparison: diag.comparison,
            },
            backward: BackwardSection {
                alpha_out: reg.alpha_out,
                factors: reg.factor_backward,
                innovations: innovation_backward,
            },
            plots: diag.plots,
        };
        let written = render_tables(&report, out).map_err(|e| report_err(STAGE, e))?;
        let mut artifacts = Vec::new();
        for path in written {
            let name = path
                .strip_prefix(out)
                .unwrap_or(&path)
                .to_string_lossy()
                .replace('\\', "/");
            artifacts.push((name, sha256_file(STAGE, &path)?));
        }
        finish(STAGE, options, manifest, artifacts)
    })
}
