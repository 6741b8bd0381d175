//! Core time-series statistics: block means over non-overlapping blocks,
//! the multiscale profile they form, and the exact squared-averaging-error
//! formula for processes with known autocorrelation.

use crate::error::{CoreError, Result};
use crate::sum::{cmean, dot_blocked, prefix_sums, CompensatedSum};

/// Uniformly sampled scalar signal.
///
/// Construction validates that every sample is finite and the sampling
/// interval is positive, so downstream estimators never re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    sampling_interval: f64,
    label: Option<String>,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, sampling_interval: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(CoreError::EmptySeries);
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteSample { index });
        }
        if !(sampling_interval.is_finite() && sampling_interval > 0.0) {
            return Err(CoreError::BadSamplingInterval(sampling_interval));
        }
        Ok(Self {
            samples,
            sampling_interval,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty sample vectors
    }

    pub fn sampling_interval(&self) -> f64 {
        self.sampling_interval
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }
}

/// Mean-squared block means for every block length `s = 1..=q`, `q = ⌊√N⌋`.
#[derive(Debug, Clone)]
pub struct MultiscaleProfile {
    n: usize,
    q: usize,
    msq: Vec<f64>,
    block_counts: Vec<usize>,
}

impl MultiscaleProfile {
    /// Build a profile from externally computed values. `msq` must hold one
    /// entry per block length `s = 1..=⌊√n⌋`, each finite and nonnegative.
    pub fn from_values(n: usize, msq: Vec<f64>) -> Result<Self> {
        if n < 4 {
            return Err(CoreError::TooShort { got: n, need: 4 });
        }
        let q = (n as f64).sqrt().floor() as usize;
        if msq.len() != q {
            return Err(CoreError::BadBlockLength { s: msq.len(), n });
        }
        if let Some(index) = msq.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(CoreError::NonFiniteSample { index });
        }
        let block_counts = (1..=q).map(|s| n / s).collect();
        Ok(Self {
            n,
            q,
            msq,
            block_counts,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest block length in the profile, `⌊√N⌋`.
    pub fn q(&self) -> usize {
        self.q
    }

    /// `msq()[s-1]` is the mean of squared block means at block length `s`.
    pub fn msq(&self) -> &[f64] {
        &self.msq
    }

    /// `block_counts()[s-1] = ⌊N/s⌋`, the number of full blocks at length `s`.
    pub fn block_counts(&self) -> &[usize] {
        &self.block_counts
    }
}

/// Known (or independently measured) statistics of a stationary process:
/// mean, variance, and autocorrelations `rho[k]` for `k = 0, 1, …`.
#[derive(Debug, Clone)]
pub struct ExactStatistics {
    pub mu: f64,
    pub sigma2: f64,
    pub rho: Vec<f64>,
}

impl ExactStatistics {
    /// Validating constructor: `rho[0] = 1`, `|rho[k]| <= 1`, `sigma2 >= 0`.
    pub fn new(mu: f64, sigma2: f64, rho: Vec<f64>) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(CoreError::InfeasibleParams(format!(
                "variance must be nonnegative, got {sigma2}"
            )));
        }
        if rho.first().is_none_or(|&r0| (r0 - 1.0).abs() > 1e-12) {
            return Err(CoreError::InfeasibleParams(
                "autocorrelation must start with rho[0] = 1".into(),
            ));
        }
        if let Some(k) = rho
            .iter()
            .position(|r| !r.is_finite() || r.abs() > 1.0 + 1e-12)
        {
            return Err(CoreError::InfeasibleParams(format!(
                "autocorrelation rho[{k}] outside [-1, 1]"
            )));
        }
        Ok(Self { mu, sigma2, rho })
    }
}

/// Arithmetic mean of the series.
pub fn sample_mean(x: &TimeSeries) -> f64 {
    cmean(x.samples())
}

/// Means of the `⌊N/s⌋` non-overlapping length-`s` blocks; trailing
/// `N mod s` samples are discarded.
pub fn shifted_sample_means(x: &TimeSeries, s: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if s == 0 || s > n {
        return Err(CoreError::BadBlockLength { s, n });
    }
    let p = n / s;
    let mut out = Vec::with_capacity(p);
    for b in 0..p {
        out.push(cmean(&x.samples()[b * s..(b + 1) * s]));
    }
    Ok(out)
}

/// Mean of squared block means at block length `s`.
pub fn mean_squared_shifted_sample_mean(x: &TimeSeries, s: usize) -> Result<f64> {
    let n = x.len();
    if s == 0 || s > n {
        return Err(CoreError::BadBlockLength { s, n });
    }
    let prefix = prefix_sums(x.samples());
    Ok(msq_at_scale(x.samples(), &prefix, s))
}

/// Shared kernel for the squared-block-mean statistic. `s = 1` bypasses the
/// prefix array so the result is exactly the mean of the squared samples.
fn msq_at_scale(x: &[f64], prefix: &[f64], s: usize) -> f64 {
    let n = x.len();
    if s == 1 {
        let mut acc = CompensatedSum::new();
        for &v in x {
            acc.add(v * v);
        }
        return acc.value() / n as f64;
    }
    let p = n / s;
    let mut acc = CompensatedSum::new();
    for b in 0..p {
        let m = (prefix[(b + 1) * s] - prefix[b * s]) / s as f64;
        acc.add(m * m);
    }
    acc.value() / p as f64
}

/// Mean-squared block means for every `s = 1..=⌊√N⌋`, computed from a single
/// prefix-sum pass: O(N log N) total instead of the naive O(N·√N).
pub fn multiscale_profile(x: &TimeSeries) -> Result<MultiscaleProfile> {
    let n = x.len();
    if n < 4 {
        return Err(CoreError::TooShort { got: n, need: 4 });
    }
    let q = (n as f64).sqrt().floor() as usize;
    let prefix = prefix_sums(x.samples());
    let mut msq = Vec::with_capacity(q);
    let mut block_counts = Vec::with_capacity(q);
    for s in 1..=q {
        msq.push(msq_at_scale(x.samples(), &prefix, s));
        block_counts.push(n / s);
    }
    Ok(MultiscaleProfile {
        n,
        q,
        msq,
        block_counts,
    })
}

/// Expected squared error of an `s`-sample average for a process with the
/// given variance and autocorrelation:
/// `eps2_s = (sigma^2/s) * [1 + 2 * sum_{k=1}^{s-1} (1 - k/s) * rho(k)]`.
pub fn exact_sq_averaging_error(stats: &ExactStatistics, s: usize) -> Result<f64> {
    if s == 0 {
        return Err(CoreError::BadBlockLength { s, n: usize::MAX });
    }
    if stats.rho.len() < s {
        return Err(CoreError::MissingAcf {
            have: stats.rho.len().saturating_sub(1),
            need: s - 1,
        });
    }
    let sf = s as f64;
    let mut acc = CompensatedSum::new();
    for k in 1..s {
        acc.add((1.0 - k as f64 / sf) * stats.rho[k]);
    }
    Ok(stats.sigma2 / sf * (1.0 + 2.0 * acc.value()))
}

/// Sample autocorrelation with the biased 1/N normalization (guarantees a
/// positive-semidefinite estimate and `|rho[k]| <= 1`). Direct summation;
/// intended for building truth models from long reference runs, not for use
/// inside the multiscale fit.
pub fn empirical_autocorrelation(x: &TimeSeries, k_max: usize) -> Result<ExactStatistics> {
    let n = x.len();
    if k_max >= n {
        return Err(CoreError::BadLag { k_max, n });
    }
    let mu = sample_mean(x);
    let centered: Vec<f64> = x.samples().iter().map(|v| v - mu).collect();
    let gamma0 = dot_blocked(&centered, &centered) / n as f64;
    if gamma0 <= 0.0 {
        return Err(CoreError::DegenerateVariance);
    }
    let mut rho = Vec::with_capacity(k_max + 1);
    rho.push(1.0);
    for k in 1..=k_max {
        let g = dot_blocked(&centered[..n - k], &centered[k..]) / n as f64;
        rho.push(g / gamma0);
    }
    ExactStatistics::new(mu, gamma0, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(v, 1.0).unwrap()
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            TimeSeries::new(vec![], 1.0),
            Err(CoreError::EmptySeries)
        ));
        assert!(matches!(
            TimeSeries::new(vec![1.0, f64::NAN], 1.0),
            Err(CoreError::NonFiniteSample { index: 1 })
        ));
        assert!(matches!(
            TimeSeries::new(vec![1.0, 2.0], 0.0),
            Err(CoreError::BadSamplingInterval(_))
        ));
    }

    #[test]
    fn sample_mean_basics() {
        assert_eq!(sample_mean(&ts(vec![1.0, 2.0, 3.0, 4.0])), 2.5);
        assert_eq!(sample_mean(&ts(vec![7.5; 13])), 7.5);
    }

    #[test]
    fn shifted_means_block_rule() {
        let x = ts(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(shifted_sample_means(&x, 2).unwrap(), vec![1.5, 3.5]);
        // remainder discarded
        let x5 = ts(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(shifted_sample_means(&x5, 2).unwrap(), vec![1.5, 3.5]);
        // s = 1 is the identity
        assert_eq!(
            shifted_sample_means(&x, 1).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert!(shifted_sample_means(&x, 0).is_err());
        assert!(shifted_sample_means(&x, 5).is_err());
    }

    #[test]
    fn block_means_average_to_sample_mean_when_s_divides_n() {
        let x = ts((1..=24).map(|i| (i * i % 17) as f64).collect());
        for s in [1usize, 2, 3, 4, 6, 8, 12] {
            let bm = shifted_sample_means(&x, s).unwrap();
            let m = cmean(&bm);
            assert!((m - sample_mean(&x)).abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn msq_examples() {
        let x = ts(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mean_squared_shifted_sample_mean(&x, 2).unwrap(), 7.25);
        let c = ts(vec![3.25; 30]);
        for s in [1, 3, 7, 30] {
            let v = mean_squared_shifted_sample_mean(&c, s).unwrap();
            assert!((v - 3.25f64 * 3.25).abs() < 1e-14);
        }
    }

    #[test]
    fn profile_shape_and_degenerate_scale() {
        let x = ts((0..17).map(|i| i as f64).collect());
        let p = multiscale_profile(&x).unwrap();
        assert_eq!(p.q(), 4); // floor(sqrt(17))
        assert_eq!(p.msq().len(), 4);
        assert_eq!(p.block_counts(), &[17, 8, 5, 4]);

        let x4 = ts(vec![1.0, 2.0, 3.0, 4.0]);
        let p4 = multiscale_profile(&x4).unwrap();
        assert_eq!(p4.q(), 2);
        assert_eq!(p4.msq()[0], 7.5); // exactly the mean of squares
        assert_eq!(p4.msq()[1], 7.25);

        assert!(multiscale_profile(&ts(vec![1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn profile_msq1_is_exactly_mean_of_squares() {
        // the s = 1 entry must bypass prefix-sum rounding entirely
        let vals: Vec<f64> = (0..1000)
            .map(|i| ((i * 2654435761u64 as usize) % 1000) as f64 * 1e-3 + 1e6)
            .collect();
        let x = ts(vals.clone());
        let p = multiscale_profile(&x).unwrap();
        let mut acc = CompensatedSum::new();
        for v in &vals {
            acc.add(v * v);
        }
        assert_eq!(p.msq()[0], acc.value() / 1000.0);
    }

    #[test]
    fn jensen_holds_across_scales() {
        let x = ts((0..100).map(|i| ((i * 37) % 11) as f64 - 5.0).collect());
        let p = multiscale_profile(&x).unwrap();
        for s in 1..=p.q() {
            let bm = shifted_sample_means(&x, s).unwrap();
            let mean_bm = cmean(&bm);
            assert!(p.msq()[s - 1] >= mean_bm * mean_bm - 1e-12);
        }
    }

    #[test]
    fn exact_error_white_noise_reduction() {
        let mut rho = vec![0.0; 1_000_001];
        rho[0] = 1.0;
        let stats = ExactStatistics::new(0.0, 2.0, rho).unwrap();
        for s in [1usize, 10, 1000, 1_000_000] {
            let v = exact_sq_averaging_error(&stats, s).unwrap();
            assert_eq!(v, 2.0 / s as f64);
        }
    }

    #[test]
    fn exact_error_ar1_closed_form() {
        // rho(k) = a^k gives
        // eps2_s = sigma2/s * [1 + 2a/(1-a) - (2a/s) * (1-a^s)/(1-a)^2]
        let a = 0.9f64;
        let sigma2 = 1.0 / (1.0 - a * a);
        let s = 100usize;
        let rho: Vec<f64> = (0..s).map(|k| a.powi(k as i32)).collect();
        let stats = ExactStatistics::new(0.0, sigma2, rho).unwrap();
        let got = exact_sq_averaging_error(&stats, s).unwrap();
        let sf = s as f64;
        let expect = sigma2 / sf
            * (1.0 + 2.0 * a / (1.0 - a)
                - 2.0 * a * (1.0 - a.powi(s as i32)) / (sf * (1.0 - a) * (1.0 - a)));
        assert!((got - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn exact_error_needs_enough_lags() {
        let stats = ExactStatistics::new(0.0, 1.0, vec![1.0, 0.5]).unwrap();
        assert!(exact_sq_averaging_error(&stats, 2).is_ok());
        assert!(matches!(
            exact_sq_averaging_error(&stats, 3),
            Err(CoreError::MissingAcf { .. })
        ));
    }

    #[test]
    fn empirical_acf_properties() {
        // alternating series: rho(1) -> -1
        let x = ts((0..4000)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect());
        let st = empirical_autocorrelation(&x, 3).unwrap();
        assert_eq!(st.rho[0], 1.0);
        assert!((st.rho[1] + 1.0).abs() < 1e-3);
        assert!(st.rho.iter().all(|r| r.abs() <= 1.0 + 1e-12));

        let c = ts(vec![5.0; 50]);
        assert!(matches!(
            empirical_autocorrelation(&c, 5),
            Err(CoreError::DegenerateVariance)
        ));
        assert!(matches!(
            empirical_autocorrelation(&x, 4000),
            Err(CoreError::BadLag { .. })
        ));
    }
}
