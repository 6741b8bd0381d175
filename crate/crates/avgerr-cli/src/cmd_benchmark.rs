//! `benchmark`: ensemble study of the multiscale estimator and the MLE-AR
//! baseline against the exact error curve, across realization lengths.
//!
//! Rows are written and flushed after each grid length, so an interrupted or
//! failed run still leaves the completed rows behind. Member seeds depend
//! only on (master seed, grid index, member index), never on --jobs, so the
//! output is identical at any parallelism.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use avgerr_ar::{ar_error_estimate, fit_ar_mle, simulate_ar, ArModel};
use avgerr_core::sum::cmean;
use avgerr_core::{estimate, split_seed, FitConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{BenchmarkArArgs, Global};
use crate::armodel;
use crate::fail::{input, Classify, CmdResult, Failure};
use crate::report::Format;

#[derive(Serialize)]
struct BenchRow {
    n: usize,
    truth: f64,
    ms_mean: f64,
    ms_var: f64,
    mle_mean: f64,
    mle_var: f64,
}

struct MemberOut {
    eps_ms: f64,
    eps_mle: f64,
}

/// `a..b` doubles from a to b inclusive; otherwise a comma list.
fn parse_n_grid(text: &str) -> CmdResult<Vec<usize>> {
    let parse_one = |s: &str| -> CmdResult<usize> {
        s.trim()
            .parse()
            .map_err(|_| input(anyhow!("bad length {s:?} in --n-grid")))
    };
    let grid: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (parse_one(a)?, parse_one(b)?);
        if a == 0 || b < a {
            return Err(input(anyhow!(
                "--n-grid range must satisfy 0 < start <= end"
            )));
        }
        let mut v = Vec::new();
        let mut n = a;
        while n <= b {
            v.push(n);
            match n.checked_mul(2) {
                Some(next) => n = next,
                None => break,
            }
        }
        v
    } else {
        text.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(parse_one)
            .collect::<CmdResult<_>>()?
    };
    if grid.is_empty() {
        return Err(input(anyhow!("--n-grid is empty")));
    }
    Ok(grid)
}

fn sample_mean_var(xs: &[f64]) -> (f64, f64) {
    let mean = cmean(xs);
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (xs.len() as f64 - 1.0))
}

fn member(
    model: &ArModel,
    n: usize,
    m: usize,
    baseline_order: usize,
    seed: u64,
) -> CmdResult<MemberOut> {
    let series = simulate_ar(model, n, &vec![0.0; model.order()], seed).classify()?;
    let fit_cfg = FitConfig {
        seed: split_seed(seed, 1),
        ..FitConfig::default()
    };
    let est = estimate(&series, m, &fit_cfg).classify()?;
    let mfit = fit_ar_mle(&series, baseline_order).classify()?;
    let eps2_mle = ar_error_estimate(&mfit.model, n).classify()?;
    Ok(MemberOut {
        eps_ms: est.eps2_n.sqrt(),
        eps_mle: eps2_mle.sqrt(),
    })
}

/// Destination that can flush incrementally and finish atomically.
enum Sink {
    File {
        tmp: tempfile::NamedTempFile,
        dest: PathBuf,
    },
    Stdout,
}

impl Sink {
    fn new(out: Option<&Path>) -> CmdResult<Self> {
        match out {
            Some(dest) => {
                let dir = match dest.parent() {
                    Some(p) if !p.as_os_str().is_empty() => p,
                    _ => Path::new("."),
                };
                let tmp = tempfile::NamedTempFile::new_in(dir)
                    .with_context(|| format!("creating temp file in {}", dir.display()))
                    .map_err(input)?;
                Ok(Sink::File {
                    tmp,
                    dest: dest.to_path_buf(),
                })
            }
            None => Ok(Sink::Stdout),
        }
    }

    fn write(&mut self, text: &str) -> CmdResult<()> {
        let r = match self {
            Sink::File { tmp, .. } => tmp.write_all(text.as_bytes()),
            Sink::Stdout => std::io::stdout().write_all(text.as_bytes()),
        };
        r.map_err(|e| input(anyhow!("writing output: {e}")))
    }

    fn flush(&mut self) -> CmdResult<()> {
        let r = match self {
            Sink::File { tmp, .. } => tmp.flush(),
            Sink::Stdout => std::io::stdout().flush(),
        };
        r.map_err(|e| input(anyhow!("flushing output: {e}")))
    }

    /// Renames the temp file over the destination; called even after a
    /// failed run so completed rows survive.
    fn finish(self) -> CmdResult<()> {
        match self {
            Sink::File { tmp, dest } => {
                tmp.persist(&dest)
                    .with_context(|| format!("replacing {}", dest.display()))
                    .map_err(input)?;
                Ok(())
            }
            Sink::Stdout => Ok(()),
        }
    }
}

pub fn run_ar(g: &Global, a: &BenchmarkArArgs) -> CmdResult<()> {
    let grid = parse_n_grid(&a.n_grid)?;
    if a.ensemble == 0 {
        return Err(input(anyhow!("--ensemble must be at least 1")));
    }
    let preset = a.preset.as_deref().or(if a.coeffs.is_none() {
        Some("paper-ar6")
    } else {
        None
    });
    let (model, label) = armodel::resolve(preset, a.coeffs.clone(), a.noise_variance, None)?;
    let master = g.seed.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(g.jobs)
        .build()
        .map_err(|e| input(anyhow!("building thread pool: {e}")))?;
    log::info!(
        "benchmark ar: model={label} grid={grid:?} ensemble={} m={} baseline=ar:{} seed={master}",
        a.ensemble,
        a.m,
        a.baseline_order
    );

    let format = g.format.unwrap_or(Format::Csv);
    let mut sink = Sink::new(g.out.as_deref())?;
    let result = run_grid(&mut sink, format, &grid, a, &model, master, &pool);
    // persist whatever was produced, then surface the first failure
    let finished = sink.finish();
    result.and(finished)
}

fn run_grid(
    sink: &mut Sink,
    format: Format,
    grid: &[usize],
    a: &BenchmarkArArgs,
    model: &ArModel,
    master: u64,
    pool: &rayon::ThreadPool,
) -> CmdResult<()> {
    if format == Format::Csv {
        sink.write("N,truth,ms_mean,ms_var,mle_mean,mle_var\n")?;
        sink.flush()?;
    }
    let mut json_rows = Vec::new();

    for (gi, &n) in grid.iter().enumerate() {
        let members: Vec<CmdResult<MemberOut>> = pool.install(|| {
            (0..a.ensemble)
                .into_par_iter()
                .map(|j| {
                    let seed = split_seed(master, (gi * a.ensemble + j) as u64);
                    member(model, n, a.m, a.baseline_order, seed)
                })
                .collect()
        });
        let mut eps_ms = Vec::with_capacity(a.ensemble);
        let mut eps_mle = Vec::with_capacity(a.ensemble);
        for r in members {
            let out = r.map_err(|f| match f {
                Failure::Input(e) => Failure::Input(e.context(format!("member at N={n}"))),
                Failure::Numeric(e) => Failure::Numeric(e.context(format!("member at N={n}"))),
            })?;
            eps_ms.push(out.eps_ms);
            eps_mle.push(out.eps_mle);
        }
        let truth = ar_error_estimate(model, n).classify()?.sqrt();
        let (ms_mean, ms_var) = sample_mean_var(&eps_ms);
        let (mle_mean, mle_var) = sample_mean_var(&eps_mle);

        match format {
            Format::Csv => {
                let mut row = String::new();
                let _ = writeln!(row, "{n},{truth},{ms_mean},{ms_var},{mle_mean},{mle_var}");
                sink.write(&row)?;
                sink.flush()?;
            }
            Format::Json => json_rows.push(BenchRow {
                n,
                truth,
                ms_mean,
                ms_var,
                mle_mean,
                mle_var,
            }),
        }
        log::info!("benchmark ar: N={n} done");
    }

    if format == Format::Json {
        let text = serde_json::to_string_pretty(&json_rows)
            .map_err(|e| input(anyhow!("serializing rows: {e}")))?;
        sink.write(&text)?;
        sink.write("\n")?;
        sink.flush()?;
    }
    Ok(())
}
