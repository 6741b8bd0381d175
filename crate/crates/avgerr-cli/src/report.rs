//! Structured reports.
//!
//! Reports are JSON documents (schema_version 1) carrying the input digest,
//! what the pipeline did, and wall-clock timings. `--format csv` flattens the
//! same document into `key,value` lines for spreadsheet-side consumption.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use avgerr_core::{AcfModelParams, FitDiagnostics, UqEstimate};
use serde::Serialize;

use crate::fail::{numeric, CmdResult, Failure};
use crate::io::atomic_write;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rejects non-finite values before they can reach a report. JSON has no
/// lossless encoding for them, and a NaN inside a report means the pipeline
/// failed numerically anyway.
pub fn fin(value: f64, what: &str) -> CmdResult<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(numeric(anyhow::anyhow!("{what} is not finite ({value})")))
    }
}

#[derive(Serialize)]
pub struct InputMeta {
    pub path: String,
    pub sha256: String,
    pub n_samples: usize,
    pub sampling_interval: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Serialize)]
pub struct TransientReport {
    pub k_hat: usize,
    pub stationary_start_index: usize,
    pub objective: f64,
    pub zero_variance_tail: bool,
}

#[derive(Serialize)]
pub struct ParamsReport {
    pub amplitudes: Vec<f64>,
    pub rates: Vec<f64>,
    pub sigma_hat: f64,
    pub mu_hat: f64,
}

impl ParamsReport {
    pub fn new(p: &AcfModelParams) -> CmdResult<Self> {
        for (i, &a) in p.amplitudes.iter().enumerate() {
            fin(a, &format!("amplitude[{i}]"))?;
        }
        for (i, &t) in p.rates.iter().enumerate() {
            fin(t, &format!("rate[{i}]"))?;
        }
        Ok(Self {
            amplitudes: p.amplitudes.clone(),
            rates: p.rates.clone(),
            sigma_hat: fin(p.sigma_hat, "sigma_hat")?,
            mu_hat: fin(p.mu_hat, "mu_hat")?,
        })
    }
}

#[derive(Serialize)]
pub struct DiagnosticsReport {
    pub degenerate: bool,
    pub acf_exceeds_unity: bool,
    pub n_feasible: usize,
    pub monotone_filter_fallback: bool,
    pub clamped_nonnegative: bool,
}

impl From<&FitDiagnostics> for DiagnosticsReport {
    fn from(d: &FitDiagnostics) -> Self {
        Self {
            degenerate: d.degenerate,
            acf_exceeds_unity: d.acf_exceeds_unity,
            n_feasible: d.n_feasible,
            monotone_filter_fallback: d.monotone_filter_fallback,
            clamped_nonnegative: d.clamped_nonnegative,
        }
    }
}

#[derive(Serialize)]
pub struct MultiscaleReport {
    pub m: usize,
    pub converged: bool,
    /// Expected squared averaging error at the full series length.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps2_n: Option<f64>,
    /// Its square root, the error in the units of the data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_n: Option<f64>,
    /// Asymptote of `s · eps2_s`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_hat: Option<f64>,
    pub params: ParamsReport,
    /// Final sum of squared profile residuals; absent when the fit failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    pub equality_residual: f64,
    pub n_starts_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsReport>,
}

impl MultiscaleReport {
    pub fn from_estimate(m: usize, e: &UqEstimate) -> CmdResult<Self> {
        Ok(Self {
            m,
            converged: e.converged,
            eps2_n: Some(fin(e.eps2_n, "eps2_n")?),
            eps_n: Some(fin(e.eps2_n.sqrt(), "eps_n")?),
            q_hat: Some(fin(e.q_hat, "q_hat")?),
            params: ParamsReport::new(&e.params)?,
            objective: Some(fin(e.objective_value, "objective")?),
            equality_residual: fin(e.equality_residual, "equality_residual")?,
            n_starts_used: e.n_starts_used,
            diagnostics: Some(DiagnosticsReport::from(&e.diagnostics)),
        })
    }
}

#[derive(Serialize)]
pub struct BaselineReport {
    pub order: usize,
    pub coeffs: Vec<f64>,
    pub noise_variance: f64,
    pub mean: f64,
    pub log_likelihood: f64,
    pub init_log_likelihood: f64,
    pub converged: bool,
    pub eps2_n: f64,
    pub eps_n: f64,
}

#[derive(Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub input: InputMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transient: Option<TransientReport>,
    /// Samples actually fed to the estimators after transient removal.
    pub n_used: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub multiscale: Option<MultiscaleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineReport>,
    /// Resolved configuration, defaults filled in.
    pub config: serde_json::Value,
    pub timings_ms: BTreeMap<String, f64>,
}

/// Wall-clock bookkeeping for the timings_ms block.
pub struct Timer {
    started: Instant,
    last: Instant,
    marks: BTreeMap<String, f64>,
}

impl Timer {
    pub fn new() -> Self {
        let now = Instant::now();
        Self {
            started: now,
            last: now,
            marks: BTreeMap::new(),
        }
    }

    /// Records the time since the previous mark under `name`.
    pub fn mark(&mut self, name: &str) {
        let now = Instant::now();
        let ms = now.duration_since(self.last).as_secs_f64() * 1e3;
        self.last = now;
        *self.marks.entry(name.to_string()).or_insert(0.0) += ms;
    }

    pub fn finish(mut self) -> BTreeMap<String, f64> {
        let total = self.started.elapsed().as_secs_f64() * 1e3;
        self.marks.insert("total".to_string(), total);
        self.marks
    }
}

fn flatten(value: &serde_json::Value, prefix: &str, rows: &mut Vec<(String, String)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(v, &key, rows);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, &format!("{prefix}.{i}"), rows);
            }
        }
        serde_json::Value::Null => rows.push((prefix.to_string(), String::new())),
        serde_json::Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        serde_json::Value::Number(n) => rows.push((prefix.to_string(), n.to_string())),
        serde_json::Value::String(s) => {
            let quoted = if s.contains(',') || s.contains('"') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            };
            rows.push((prefix.to_string(), quoted));
        }
    }
}

pub fn render(report: &Report, format: Format) -> Result<String> {
    let value = serde_json::to_value(report)?;
    match format {
        Format::Json => Ok(format!("{}\n", serde_json::to_string_pretty(&value)?)),
        Format::Csv => {
            let mut rows = Vec::new();
            flatten(&value, "", &mut rows);
            let mut out = String::from("key,value\n");
            for (k, v) in rows {
                out.push_str(&k);
                out.push(',');
                out.push_str(&v);
                out.push('\n');
            }
            Ok(out)
        }
    }
}

/// Writes the report to `--out` (atomically) or stdout.
pub fn emit(report: &Report, out: Option<&Path>, format: Format) -> CmdResult<()> {
    let text = render(report, format).map_err(Failure::Input)?;
    match out {
        Some(path) => atomic_write(path, text.as_bytes()).map_err(Failure::Input),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
