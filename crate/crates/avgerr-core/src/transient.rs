//! Initial-transient detection.
//!
//! The split point is chosen by minimizing, over k in 1..=N/2, the tail
//! variance statistic
//!
//! ```text
//! J(k) = (1/(N-k-1)^2) * sum_{i=k+1}^{N} (X_i - mean(X_{k+1..N}))^2
//! ```
//!
//! which penalizes keeping transient samples (inflated tail variance) and
//! discarding too many (small N-k blows up the prefactor). All candidates are
//! evaluated in one O(N) pass over suffix sums.

use crate::error::{CoreError, Result};
use crate::series::TimeSeries;
use crate::sum::{cmean, CompensatedSum};

#[derive(Debug, Clone)]
pub struct TransientResult {
    /// Number of initial samples to discard; in 1..=N/2.
    pub k_hat: usize,
    /// `objective_curve[i]` is J(k) at k = i+1, for k in 1..=N/2.
    pub objective_curve: Vec<f64>,
    /// 1-based index of the first stationary sample, `k_hat + 1`.
    pub stationary_start_index: usize,
    /// Set when the winning tail has zero variance (e.g. constant input);
    /// the detector then falls back to k̂ = 1 via the smallest-k tie break.
    pub zero_variance_tail: bool,
}

/// Scan all candidate split points and return the argmin with the full
/// objective curve. Ties are broken toward the smallest k (discard least).
pub fn detect_transient(x: &TimeSeries) -> Result<TransientResult> {
    let n = x.len();
    if n < 4 {
        return Err(CoreError::TooShort { got: n, need: 4 });
    }
    // Subtracting the global mean leaves J(k) unchanged (the tail mean shifts
    // by the same constant) but keeps the suffix sums of squares small enough
    // that the Σx² − (Σx)²/(N−k) form does not cancel catastrophically.
    let mu = cmean(x.samples());
    let y: Vec<f64> = x.samples().iter().map(|v| v - mu).collect();

    let k_cap = n / 2;
    // suffix accumulation from the end; record sums for tails starting at k+1
    // (0-based index k), for k = 1..=k_cap
    let mut s1 = vec![0.0; k_cap + 1]; // s1[k] = sum y[k..]
    let mut s2 = vec![0.0; k_cap + 1]; // s2[k] = sum y[k..]^2
    let mut a1 = CompensatedSum::new();
    let mut a2 = CompensatedSum::new();
    for i in (0..n).rev() {
        a1.add(y[i]);
        a2.add(y[i] * y[i]);
        if i <= k_cap {
            s1[i] = a1.value();
            s2[i] = a2.value();
        }
    }

    let mut curve = Vec::with_capacity(k_cap);
    let mut best_k = 1usize;
    let mut best_v = f64::INFINITY;
    for k in 1..=k_cap {
        let tail_len = (n - k) as f64;
        let ss = s2[k] - s1[k] * s1[k] / tail_len;
        let ss = ss.max(0.0); // guard tiny negative rounding
        let denom = (n - k) as f64 - 1.0;
        let v = ss / (denom * denom);
        curve.push(v);
        if v < best_v {
            best_v = v;
            best_k = k;
        }
    }

    Ok(TransientResult {
        k_hat: best_k,
        zero_variance_tail: best_v == 0.0,
        stationary_start_index: best_k + 1,
        objective_curve: curve,
    })
}

/// Return the stationary tail `X_{k̂+1}..X_N`, preserving the sampling
/// interval and label.
pub fn split_at_transient(x: &TimeSeries, r: &TransientResult) -> Result<TimeSeries> {
    let n = x.len();
    if r.objective_curve.len() != n / 2 || r.k_hat == 0 || r.k_hat > n / 2 {
        return Err(CoreError::BadBlockLength { s: r.k_hat, n });
    }
    let tail = x.samples()[r.k_hat..].to_vec();
    let mut out = TimeSeries::new(tail, x.sampling_interval())?;
    if let Some(l) = x.label() {
        out = out.with_label(l);
    }
    Ok(out)
}
