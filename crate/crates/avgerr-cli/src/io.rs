//! Series files and atomic output.
//!
//! Two on-disk layouts share one reader (sniffed by magic):
//!
//! * text: `# dt=<float>` and `# label=<text>` comment headers, then one
//!   sample per line. Floats are printed with Rust's shortest round-trip
//!   formatting, so write-then-read is value-exact.
//! * binary: 8-byte magic `AVGERRS1`, little-endian f64 dt, then raw
//!   little-endian f64 samples. The fast path for large ensembles.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use avgerr_core::TimeSeries;
use sha2::{Digest, Sha256};

pub const MAGIC: &[u8; 8] = b"AVGERRS1";

/// A series plus the content digest of the bytes it was read from.
#[derive(Debug)]
pub struct LoadedSeries {
    pub series: TimeSeries,
    pub sha256: String,
}

pub fn read_series(path: &Path) -> Result<LoadedSeries> {
    let bytes =
        fs::read(path).with_context(|| format!("reading series file {}", path.display()))?;
    let sha256 = hex_digest(&bytes);
    let series = if bytes.len() >= MAGIC.len() && &bytes[..MAGIC.len()] == MAGIC {
        parse_binary(&bytes)
    } else {
        parse_text(&bytes)
    }
    .with_context(|| format!("parsing series file {}", path.display()))?;
    if series.len() < 2 {
        bail!(
            "series file {} has {} sample(s); need at least 2",
            path.display(),
            series.len()
        );
    }
    Ok(LoadedSeries { series, sha256 })
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(64);
    for b in Sha256::digest(bytes) {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn parse_binary(bytes: &[u8]) -> Result<TimeSeries> {
    if bytes.len() < 16 {
        bail!("binary header truncated ({} bytes, need 16)", bytes.len());
    }
    let dt = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let body = &bytes[16..];
    if !body.len().is_multiple_of(8) {
        bail!(
            "binary payload of {} bytes is not a whole number of f64s",
            body.len()
        );
    }
    let samples: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(TimeSeries::new(samples, dt)?)
}

fn parse_text(bytes: &[u8]) -> Result<TimeSeries> {
    let text = std::str::from_utf8(bytes).context("series file is not valid UTF-8")?;
    let mut dt = 1.0;
    let mut label: Option<String> = None;
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((key, value)) = rest.split_once('=') {
                match key.trim() {
                    "dt" => {
                        dt = value
                            .trim()
                            .parse()
                            .with_context(|| format!("bad dt header on line {}", i + 1))?;
                    }
                    "label" => {
                        let v = value.trim();
                        if !v.is_empty() {
                            label = Some(v.to_string());
                        }
                    }
                    _ => {} // unknown headers pass through silently
                }
            }
            continue;
        }
        let v: f64 = line
            .parse()
            .with_context(|| format!("bad sample {line:?} on line {}", i + 1))?;
        samples.push(v);
    }
    let mut series = TimeSeries::new(samples, dt)?;
    if let Some(l) = label {
        series = series.with_label(l);
    }
    Ok(series)
}

pub fn series_to_text(x: &TimeSeries) -> String {
    // `{}` on f64 prints the shortest digits that parse back to the same
    // value, which is what makes the round trip exact.
    let mut out = String::with_capacity(x.len() * 20 + 64);
    let _ = writeln!(out, "# dt={}", x.sampling_interval());
    let _ = writeln!(out, "# label={}", x.label().unwrap_or(""));
    for v in x.samples() {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn series_to_binary(x: &TimeSeries) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * x.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&x.sampling_interval().to_le_bytes());
    for v in x.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Write via a temp file in the destination directory plus an atomic rename,
/// so readers never observe a half-written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

/// Write a series to a file (atomically) or to stdout when no path is given.
pub fn save_series(path: Option<&Path>, x: &TimeSeries, binary: bool) -> Result<()> {
    let bytes = if binary {
        series_to_binary(x)
    } else {
        series_to_text(x).into_bytes()
    };
    match path {
        Some(p) => atomic_write(p, &bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
