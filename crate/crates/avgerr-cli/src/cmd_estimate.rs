//! `estimate`: transient removal, multiscale error estimate, optional
//! MLE-AR baseline on the same stationary tail.

use anyhow::anyhow;
use avgerr_ar::{ar_error_estimate, fit_ar_mle};
use avgerr_core::{detect_transient, estimate, split_at_transient, CoreError, FitConfig};
use serde_json::json;

use crate::args::{EstimateArgs, Global};
use crate::fail::{input, numeric, Classify, CmdResult, Failure};
use crate::io::read_series;
use crate::report::{
    emit, fin, BaselineReport, Format, InputMeta, MultiscaleReport, ParamsReport, Report, Timer,
    TransientReport, SCHEMA_VERSION,
};

/// Parses `--baseline ar:<p>`.
fn parse_baseline(text: &str) -> CmdResult<usize> {
    text.strip_prefix("ar:")
        .and_then(|p| p.parse().ok())
        .ok_or_else(|| {
            input(anyhow!(
                "--baseline must look like ar:<order>, got {text:?}"
            ))
        })
}

pub fn run(g: &Global, a: &EstimateArgs) -> CmdResult<()> {
    let baseline_order = a.baseline.as_deref().map(parse_baseline).transpose()?;
    let mut timer = Timer::new();
    let loaded = read_series(&a.input).map_err(input)?;
    timer.mark("read");

    let (tail, transient) = if a.skip_transient {
        (loaded.series.clone(), None)
    } else {
        let tr = detect_transient(&loaded.series).classify()?;
        let tail = split_at_transient(&loaded.series, &tr).classify()?;
        let rep = TransientReport {
            k_hat: tr.k_hat,
            stationary_start_index: tr.stationary_start_index,
            objective: fin(tr.objective_curve[tr.k_hat - 1], "objective at k_hat")?,
            zero_variance_tail: tr.zero_variance_tail,
        };
        (tail, Some(rep))
    };
    timer.mark("transient");
    let n_used = tail.len();

    let fit_cfg = FitConfig {
        n_starts: a.n_starts.unwrap_or_else(|| FitConfig::default().n_starts),
        tol_eq: a.tol_eq,
        tau_ceiling_delta: a.tau_ceiling_delta,
        max_outer_iters: a
            .max_outer
            .unwrap_or_else(|| FitConfig::default().max_outer_iters),
        max_inner_iters: a
            .max_inner
            .unwrap_or_else(|| FitConfig::default().max_inner_iters),
        seed: g.seed.unwrap_or(0),
    };
    let config = json!({
        "input": a.input.display().to_string(),
        "m": a.m,
        "skip_transient": a.skip_transient,
        "baseline": a.baseline,
        "n_starts": fit_cfg.n_starts,
        "tol_eq": fit_cfg.tol_eq,
        "tau_ceiling_delta": fit_cfg.tau_ceiling_delta,
        "max_outer": fit_cfg.max_outer_iters,
        "max_inner": fit_cfg.max_inner_iters,
        "seed": fit_cfg.seed,
    });

    // A failed fit still produces a report (converged = false) so the run
    // leaves a machine-readable trace; the exit code stays nonzero.
    let (multiscale, fit_error) = match estimate(&tail, a.m, &fit_cfg) {
        Ok(e) => (MultiscaleReport::from_estimate(a.m, &e)?, None),
        Err(CoreError::FitFailure {
            n_starts,
            residual,
            best,
        }) => {
            let ms = MultiscaleReport {
                m: a.m,
                converged: false,
                eps2_n: None,
                eps_n: None,
                q_hat: None,
                params: ParamsReport::new(&best)?,
                objective: None,
                equality_residual: fin(residual, "equality_residual")?,
                n_starts_used: n_starts,
                diagnostics: None,
            };
            let err = numeric(anyhow!(
                "no feasible fit in {n_starts} starts (best equality residual {residual:.3e})"
            ));
            (ms, Some(err))
        }
        Err(other) => return Err(Failure::Input(other.into())),
    };
    timer.mark("fit");

    // The baseline is skipped when the main fit failed: the report then
    // documents the failure, not a half-comparison.
    let baseline = match (baseline_order, fit_error.is_none()) {
        (Some(p), true) => {
            let mfit = fit_ar_mle(&tail, p).classify()?;
            let eps2 = ar_error_estimate(&mfit.model, n_used).classify()?;
            let rep = BaselineReport {
                order: p,
                coeffs: mfit.model.coeffs().to_vec(),
                noise_variance: fin(mfit.model.noise_variance(), "baseline noise_variance")?,
                mean: fin(mfit.model.mean(), "baseline mean")?,
                log_likelihood: fin(mfit.log_likelihood, "baseline log_likelihood")?,
                init_log_likelihood: fin(mfit.init_log_likelihood, "baseline init_log_likelihood")?,
                converged: mfit.converged,
                eps2_n: fin(eps2, "baseline eps2_n")?,
                eps_n: fin(eps2.sqrt(), "baseline eps_n")?,
            };
            timer.mark("baseline");
            Some(rep)
        }
        _ => None,
    };

    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: "estimate".to_string(),
        input: InputMeta {
            path: a.input.display().to_string(),
            sha256: loaded.sha256,
            n_samples: loaded.series.len(),
            sampling_interval: loaded.series.sampling_interval(),
            label: loaded.series.label().map(str::to_string),
        },
        transient,
        n_used,
        multiscale: Some(multiscale),
        baseline,
        config,
        timings_ms: timer.finish(),
    };
    emit(&report, g.out.as_deref(), g.format.unwrap_or(Format::Json))?;

    match fit_error {
        Some(err) => Err(err),
        None => Ok(()),
    }
}
