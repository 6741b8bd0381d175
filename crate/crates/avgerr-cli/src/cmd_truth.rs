//! `truth`: reference averaging-error curves.
//!
//! For AR models the curve is exact (Yule-Walker statistics); for the KS
//! energy signal it is built empirically from a run `--multiplier` times
//! longer than the target experiment.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::anyhow;
use avgerr_core::{
    detect_transient, empirical_autocorrelation, exact_sq_averaging_error, split_at_transient,
    ExactStatistics,
};
use avgerr_ks::{ks_run, KsConfig};
use serde_json::json;

use crate::args::{Global, TruthArArgs, TruthKsArgs};
use crate::fail::{input, Classify, CmdResult};
use crate::io::atomic_write;
use crate::report::Format;
use crate::{armodel, cfg};

/// Powers of two up to `s_max`, with `s_max` itself always included.
fn pow2_grid(s_max: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut s = 1usize;
    while s <= s_max {
        grid.push(s);
        match s.checked_mul(2) {
            Some(next) => s = next,
            None => break,
        }
    }
    if *grid.last().unwrap() != s_max {
        grid.push(s_max);
    }
    grid
}

struct Curve {
    header: Vec<(String, String)>,
    rows: Vec<(usize, f64, f64)>, // (s, eps2, eps)
}

fn curve_rows(stats: &ExactStatistics, grid: &[usize]) -> CmdResult<Vec<(usize, f64, f64)>> {
    let mut rows = Vec::with_capacity(grid.len());
    for &s in grid {
        let eps2 = exact_sq_averaging_error(stats, s).classify()?;
        rows.push((s, eps2, eps2.sqrt()));
    }
    Ok(rows)
}

fn emit_curve(curve: &Curve, out: Option<&Path>, format: Format) -> CmdResult<()> {
    let text = match format {
        Format::Csv => {
            let mut text = String::new();
            for (k, v) in &curve.header {
                let _ = writeln!(text, "# {k}={v}");
            }
            text.push_str("s,eps2,eps\n");
            for (s, eps2, eps) in &curve.rows {
                let _ = writeln!(text, "{s},{eps2},{eps}");
            }
            text
        }
        Format::Json => {
            let meta: serde_json::Map<String, serde_json::Value> = curve
                .header
                .iter()
                .map(|(k, v)| {
                    let value = v
                        .parse::<f64>()
                        .ok()
                        .and_then(serde_json::Number::from_f64)
                        .map(serde_json::Value::Number)
                        .unwrap_or_else(|| serde_json::Value::String(v.clone()));
                    (k.clone(), value)
                })
                .collect();
            let rows: Vec<_> = curve
                .rows
                .iter()
                .map(|(s, eps2, eps)| json!({"s": s, "eps2": eps2, "eps": eps}))
                .collect();
            let mut doc = serde_json::Map::new();
            doc.insert("meta".into(), serde_json::Value::Object(meta));
            doc.insert("rows".into(), serde_json::Value::Array(rows));
            format!(
                "{}\n",
                serde_json::to_string_pretty(&serde_json::Value::Object(doc))
                    .map_err(|e| input(anyhow!("serializing curve: {e}")))?
            )
        }
    };
    match out {
        Some(path) => atomic_write(path, text.as_bytes()).map_err(input),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run_ar(g: &Global, a: &TruthArArgs) -> CmdResult<()> {
    if a.s_max == 0 {
        return Err(input(anyhow!("--s-max must be at least 1")));
    }
    let preset = a.preset.as_deref().or(if a.coeffs.is_none() {
        Some("paper-ar6")
    } else {
        None
    });
    let (model, label) = armodel::resolve(preset, a.coeffs.clone(), a.noise_variance, a.mean)?;
    let stats = avgerr_ar::yule_walker_truth(&model, a.s_max.saturating_sub(1)).classify()?;

    let grid: Vec<usize> = if a.dense {
        (1..=a.s_max).collect()
    } else {
        pow2_grid(a.s_max)
    };
    let curve = Curve {
        header: vec![
            ("model".into(), format!("{label}({})", model.order())),
            ("mu".into(), format!("{}", stats.mu)),
            ("sigma".into(), format!("{}", stats.sigma2.sqrt())),
        ],
        rows: curve_rows(&stats, &grid)?,
    };
    emit_curve(&curve, g.out.as_deref(), g.format.unwrap_or(Format::Csv))
}

pub fn run_ks(g: &Global, a: &TruthKsArgs) -> CmdResult<()> {
    if a.multiplier == 0 {
        return Err(input(anyhow!("--multiplier must be at least 1")));
    }
    if a.s_max == 0 {
        return Err(input(anyhow!("--s-max must be at least 1")));
    }
    let file = match &a.config {
        Some(p) => cfg::load(p).map_err(input)?,
        None => cfg::empty(),
    };
    let defaults = KsConfig::default();
    let base_steps = match a.steps {
        Some(v) => v,
        None => file
            .get_usize("n_steps")
            .map_err(input)?
            .unwrap_or(defaults.n_steps),
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
        n_steps: base_steps.saturating_mul(a.multiplier),
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
    log::info!(
        "truth ks: running {} steps ({}x{base_steps}) for the reference curve",
        ks.n_steps,
        a.multiplier
    );

    let series = ks_run(&ks).classify()?;
    let tr = detect_transient(&series).classify()?;
    let tail = split_at_transient(&series, &tr).classify()?;
    if tail.len() <= a.s_max {
        return Err(input(anyhow!(
            "stationary tail has {} samples, too short for --s-max {}; raise --multiplier",
            tail.len(),
            a.s_max
        )));
    }
    let stats = empirical_autocorrelation(&tail, a.s_max - 1).classify()?;

    let curve = Curve {
        header: vec![
            ("model".into(), "ks-energy".into()),
            ("n_steps".into(), format!("{}", ks.n_steps)),
            ("k_hat".into(), format!("{}", tr.k_hat)),
            ("n_tail".into(), format!("{}", tail.len())),
            ("dt".into(), format!("{}", series.sampling_interval())),
            ("mu".into(), format!("{}", stats.mu)),
            ("sigma".into(), format!("{}", stats.sigma2.sqrt())),
        ],
        rows: curve_rows(&stats, &pow2_grid(a.s_max))?,
    };
    emit_curve(&curve, g.out.as_deref(), g.format.unwrap_or(Format::Csv))
}
