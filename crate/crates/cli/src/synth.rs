//! Synthetic input files with a known data-generating process.
//!
//! Factors are independent ARMA(1,1)-GARCH(1,1) paths; the excess return is
//! a fixed linear combination of the first three plus GARCH noise. The files
//! mimic the real layouts: a factor-library CSV with a preamble and an
//! annual block, and dated price and yield CSVs with two observations per
//! month (mid-month and month-end).

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use factorlab::tsmodel::{simulate, ArmaGarchParams};
use factorlab::YearMonth;

pub const FIRST_MONTH: u32 = 198001;
pub const MONTHS: usize = 492;
pub const DEFAULT_SEED: u64 = 2024;

/// Intercept and loadings on MRP, SMB, HML used to build excess returns.
pub const TRUE_INTERCEPT: f64 = 0.003;
pub const TRUE_BETAS: [f64; 3] = [0.5, -0.14, -0.37];

const FACTOR_NAMES: [&str; 5] = ["Mkt-RF", "SMB", "HML", "RMW", "CMA"];

fn garch(mu: f64, phi: f64, gamma: f64) -> ArmaGarchParams {
    ArmaGarchParams {
        mu,
        phi,
        theta: 0.0,
        gamma,
        alpha: 0.15,
        beta: 0.75,
    }
}

/// Percent values rounded to two decimals, as the factor library prints.
fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub struct SyntheticData {
    pub months: Vec<YearMonth>,
    /// Factor values in percent, already rounded.
    pub factors_pct: Vec<[f64; 5]>,
    pub yields_pct: Vec<f64>,
    pub month_end_prices: Vec<f64>,
    pub mid_month_prices: Vec<f64>,
}

pub fn generate(seed: u64) -> SyntheticData {
    let specs = [
        garch(0.006, 0.05, 1.6e-4),
        garch(0.0, 0.05, 1.0e-4),
        garch(0.001, 0.10, 8.5e-5),
        garch(0.003, 0.05, 6.0e-5),
        garch(0.002, 0.05, 4.0e-5),
    ];
    let paths: Vec<Vec<f64>> = specs
        .iter()
        .enumerate()
        .map(|(k, p)| {
            simulate(p, MONTHS, seed.wrapping_add(k as u64))
                .expect("valid simulation parameters")
                .into_values()
        })
        .collect();
    let noise = simulate(&garch(0.0, 0.10, 9.0e-5), MONTHS, seed.wrapping_add(99))
        .expect("valid simulation parameters")
        .into_values();

    let mut months = Vec::with_capacity(MONTHS);
    let mut m = YearMonth::from_yyyymm(FIRST_MONTH).expect("valid month");
    for _ in 0..MONTHS {
        months.push(m);
        m = m.next();
    }
    let factors_pct: Vec<[f64; 5]> = (0..MONTHS)
        .map(|t| std::array::from_fn(|k| round2(100.0 * paths[k][t])))
        .collect();
    let yields_pct: Vec<f64> = (0..MONTHS)
        .map(|t| {
            let x = t as f64;
            round2(7.5 - 5.5 * x / MONTHS as f64 + 0.3 * (x / 7.0).sin())
        })
        .collect();

    let mut log_price = 20f64.ln();
    let mut month_end_prices = Vec::with_capacity(MONTHS);
    let mut mid_month_prices = Vec::with_capacity(MONTHS);
    for t in 0..MONTHS {
        let f = factors_pct[t].map(|v| v / 100.0);
        let exr = TRUE_INTERCEPT + TRUE_BETAS[0] * f[0] + TRUE_BETAS[1] * f[1] + TRUE_BETAS[2] * f[2] + noise[t];
        let step = exr + yields_pct[t] / 1200.0;
        mid_month_prices.push(round6((log_price + 0.37 * step).exp()));
        log_price += step;
        month_end_prices.push(round6(log_price.exp()));
    }
    SyntheticData {
        months,
        factors_pct,
        yields_pct,
        month_end_prices,
        mid_month_prices,
    }
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

pub fn factors_csv(data: &SyntheticData) -> String {
    let mut out = String::from("Synthetic factor file in the factor-library layout.\nValues are monthly percent returns.\n\n");
    let _ = writeln!(out, ",{},RF", FACTOR_NAMES.join(","));
    for (t, m) in data.months.iter().enumerate() {
        let cells: Vec<String> = data.factors_pct[t].iter().map(|v| format!("{v:7.2}")).collect();
        let _ = writeln!(out, "{m},{},{:7.2}", cells.join(","), data.yields_pct[t] / 12.0);
    }
    out.push_str("\n Annual Factors: January-December \n");
    let _ = writeln!(out, ",{},RF", FACTOR_NAMES.join(","));
    for year in data.months.chunks(12) {
        let y = year[0].year();
        let _ = writeln!(out, "{y},   1.00,   1.00,   1.00,   1.00,   1.00,   1.00");
    }
    out
}

pub fn prices_csv(data: &SyntheticData) -> String {
    let mut out = String::from("date,adj_close\n");
    for (t, m) in data.months.iter().enumerate() {
        let _ = writeln!(out, "{:04}-{:02}-15,{:.6}", m.year(), m.month(), data.mid_month_prices[t]);
        let _ = writeln!(out, "{:04}-{:02}-28,{:.6}", m.year(), m.month(), data.month_end_prices[t]);
    }
    out
}

pub fn yields_csv(data: &SyntheticData) -> String {
    let mut out = String::from("date,yield\n");
    for (t, m) in data.months.iter().enumerate() {
        let _ = writeln!(out, "{:04}-{:02}-28,{:.2}", m.year(), m.month(), data.yields_pct[t]);
    }
    out
}

pub fn config_text(seed: u64) -> String {
    format!(
        "# Synthetic dataset, generator seed {seed}.\n\
         start = 198603\n\
         end = 202002\n\
         factors = MRP=Mkt-RF, SMB, HML, RMW, CMA\n\
         regressors = MRP, SMB, HML\n\
         factor_scale = 100\n\
         riskfree_divisor = 1200\n\
         asset = SYNTH\n\
         prices = prices.csv\n\
         riskfree = yields.csv\n\
         factors_file = factors.csv\n"
    )
}

/// Writes `factors.csv`, `prices.csv`, `yields.csv` and `config.txt`.
pub fn write_dataset(dir: &Path, seed: u64) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let data = generate(seed);
    fs::write(dir.join("factors.csv"), factors_csv(&data))?;
    fs::write(dir.join("prices.csv"), prices_csv(&data))?;
    fs::write(dir.join("yields.csv"), yields_csv(&data))?;
    fs::write(dir.join("config.txt"), config_text(seed))?;
    Ok(())
}
