//! `detect-transient`: locate the initial transient of a series.

use std::fmt::Write as _;

use avgerr_core::detect_transient;
use serde_json::json;

use crate::args::{DetectArgs, Global};
use crate::fail::{input, Classify, CmdResult};
use crate::io::{atomic_write, read_series};
use crate::report::{emit, fin, Format, InputMeta, Report, Timer, TransientReport, SCHEMA_VERSION};

pub fn run(g: &Global, a: &DetectArgs) -> CmdResult<()> {
    let mut timer = Timer::new();
    let loaded = read_series(&a.input).map_err(input)?;
    timer.mark("read");

    let tr = detect_transient(&loaded.series).classify()?;
    timer.mark("detect");

    if let Some(curve_path) = &a.curve_out {
        let mut text = String::from("k,objective\n");
        for (i, v) in tr.objective_curve.iter().enumerate() {
            let _ = writeln!(text, "{},{}", i + 1, v);
        }
        atomic_write(curve_path, text.as_bytes()).map_err(input)?;
        timer.mark("curve_out");
    }

    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: "detect-transient".to_string(),
        input: InputMeta {
            path: a.input.display().to_string(),
            sha256: loaded.sha256,
            n_samples: loaded.series.len(),
            sampling_interval: loaded.series.sampling_interval(),
            label: loaded.series.label().map(str::to_string),
        },
        transient: Some(TransientReport {
            k_hat: tr.k_hat,
            stationary_start_index: tr.stationary_start_index,
            objective: fin(tr.objective_curve[tr.k_hat - 1], "objective at k_hat")?,
            zero_variance_tail: tr.zero_variance_tail,
        }),
        n_used: loaded.series.len() - tr.k_hat,
        multiscale: None,
        baseline: None,
        config: json!({
            "input": a.input.display().to_string(),
            "curve_out": a.curve_out.as_ref().map(|p| p.display().to_string()),
        }),
        timings_ms: timer.finish(),
    };
    emit(&report, g.out.as_deref(), g.format.unwrap_or(Format::Json))
}
