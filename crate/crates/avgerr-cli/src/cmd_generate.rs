//! `generate`: simulate a series and write it as a series file.

use avgerr_ar::simulate_ar;
use avgerr_ks::{ks_run, KsConfig};
use serde_json::json;

use crate::args::{GenerateArArgs, GenerateKsArgs, Global};
use crate::cfg;
use crate::fail::{input, Classify, CmdResult};
use crate::{armodel, io};

/// Resolved-config echo. Goes to stdout when the series goes to a file, and
/// to stderr when the series itself occupies stdout.
fn echo(doc: &serde_json::Value, series_on_stdout: bool) {
    let text = serde_json::to_string_pretty(doc).expect("config echo serializes");
    if series_on_stdout {
        eprintln!("{text}");
    } else {
        println!("{text}");
    }
}

pub fn run_ar(g: &Global, a: &GenerateArArgs) -> CmdResult<()> {
    let file = match &a.config {
        Some(p) => cfg::load(p).map_err(input)?,
        None => cfg::empty(),
    };
    let preset = a.preset.clone().or_else(|| file.get_str("preset"));
    let coeffs = match &a.coeffs {
        Some(c) => Some(c.clone()),
        None => file.get_f64_list("coeffs").map_err(input)?,
    };
    let noise_variance = match a.noise_variance {
        Some(v) => Some(v),
        None => file.get_f64("noise_variance").map_err(input)?,
    };
    let mean = match a.mean {
        Some(v) => Some(v),
        None => file.get_f64("mean").map_err(input)?,
    };
    let n = match a.n {
        Some(v) => v,
        None => file.get_usize("n").map_err(input)?.unwrap_or(16_384),
    };
    let init = match a.init {
        Some(v) => v,
        None => file.get_f64("init").map_err(input)?.unwrap_or(0.0),
    };
    let seed = match g.seed {
        Some(v) => v,
        None => file.get_u64("seed").map_err(input)?.unwrap_or(0),
    };

    let (model, label) = armodel::resolve(preset.as_deref(), coeffs, noise_variance, mean)?;
    let series = simulate_ar(&model, n, &vec![init; model.order()], seed)
        .classify()?
        .with_label(label.clone());
    io::save_series(g.out.as_deref(), &series, a.binary).map_err(input)?;

    echo(
        &json!({
            "command": "generate",
            "kind": "ar",
            "label": label,
            "coeffs": model.coeffs(),
            "noise_variance": model.noise_variance(),
            "mean": model.mean(),
            "n": n,
            "init": init,
            "seed": seed,
            "binary": a.binary,
            "out": g.out.as_ref().map(|p| p.display().to_string()),
        }),
        g.out.is_none(),
    );
    Ok(())
}

pub fn run_ks(g: &Global, a: &GenerateKsArgs) -> CmdResult<()> {
    let file = match &a.config {
        Some(p) => cfg::load(p).map_err(input)?,
        None => cfg::empty(),
    };
    let defaults = KsConfig::default();
    let lookup_steps = match file.get_usize("n_steps").map_err(input)? {
        Some(v) => Some(v),
        None => file.get_usize("steps").map_err(input)?,
    };
    let ks = KsConfig {
        domain_length: match a.domain_length {
            Some(v) => v,
            None => file
                .get_f64("domain_length")
                .map_err(input)?
                .unwrap_or(defaults.domain_length),
        },
        n_modes: match a.n_modes {
            Some(v) => v,
            None => file
                .get_usize("n_modes")
                .map_err(input)?
                .unwrap_or(defaults.n_modes),
        },
        dt: match a.dt {
            Some(v) => v,
            None => file.get_f64("dt").map_err(input)?.unwrap_or(defaults.dt),
        },
        n_steps: match a.steps {
            Some(v) => v,
            None => lookup_steps.unwrap_or(defaults.n_steps),
        },
        seed: match g.seed {
            Some(v) => v,
            None => file
                .get_u64("seed")
                .map_err(input)?
                .unwrap_or(defaults.seed),
        },
        sample_stride: match a.stride {
            Some(v) => v,
            None => file
                .get_usize("sample_stride")
                .map_err(input)?
                .unwrap_or(defaults.sample_stride),
        },
    };

    let series = ks_run(&ks).classify()?;
    io::save_series(g.out.as_deref(), &series, a.binary).map_err(input)?;

    echo(
        &json!({
            "command": "generate",
            "kind": "ks",
            "domain_length": ks.domain_length,
            "n_modes": ks.n_modes,
            "dt": ks.dt,
            "n_steps": ks.n_steps,
            "seed": ks.seed,
            "sample_stride": ks.sample_stride,
            "n_samples": series.len(),
            "binary": a.binary,
            "out": g.out.as_ref().map(|p| p.display().to_string()),
        }),
        g.out.is_none(),
    );
    Ok(())
}
