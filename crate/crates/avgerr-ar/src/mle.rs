//! Exact Gaussian maximum-likelihood AR(p) fitting.
//!
//! The likelihood is evaluated in innovations form: the first `p` one-step
//! prediction errors use the model's own lower-order predictors (obtained
//! from its reflection coefficients), the rest use the full recursion, and
//! the innovation variance is profiled out, leaving a concentrated
//! log-likelihood over shape parameters only. Optimization runs in
//! `atanh`-reflection coordinates, which maps the whole of R^p onto the
//! stationary region — no iterate can leave it.

use crate::error::{ArError, Result};
use crate::{step_up_levels, white_noise, ArModel};
use avgerr_core::optim::{minimize_bounded, Bounds};
use avgerr_core::series::{empirical_autocorrelation, sample_mean, TimeSeries};
use avgerr_core::sum::CompensatedSum;

/// Result of [`fit_ar_mle`]. `converged = false` means the quasi-Newton
/// iteration stopped without meeting its tolerance; the returned model is
/// then whichever of (final iterate, Yule-Walker initializer) scores the
/// higher likelihood, so `log_likelihood ≥ init_log_likelihood` always holds.
#[derive(Debug, Clone)]
pub struct MleFit {
    pub model: ArModel,
    pub log_likelihood: f64,
    pub init_log_likelihood: f64,
    pub converged: bool,
}

/// Concentrated negative log-likelihood per sample, and the profiled
/// innovation variance, for demeaned data `z` and reflection coefficients
/// `kappa`.
fn neg_loglik_per_sample(z: &[f64], kappa: &[f64]) -> (f64, f64) {
    let n = z.len();
    let p = kappa.len();
    let levels = step_up_levels(kappa);
    let phi: &[f64] = levels.last().map(|v| v.as_slice()).unwrap_or(&[]);

    // suffix products Π_{i=t..p} (1 - κ_i²); r_t = 1/suffix[t-1]
    let mut suffix = vec![1.0; p + 1];
    for t in (0..p).rev() {
        suffix[t] = suffix[t + 1] * (1.0 - kappa[t] * kappa[t]);
    }

    let mut sse = CompensatedSum::new(); // Σ e_t² / r_t
    let mut log_r = CompensatedSum::new(); // Σ ln r_t
    for t in 1..=n.min(p) {
        let mut e = z[t - 1];
        if t >= 2 {
            let coef = &levels[t - 2];
            for (j, c) in coef.iter().enumerate() {
                e -= c * z[t - 2 - j];
            }
        }
        let s = suffix[t - 1];
        if s <= 0.0 {
            return (f64::INFINITY, f64::NAN);
        }
        sse.add(e * e * s); // e²/r with r = 1/s
        log_r.add(-s.ln());
    }
    for t in p + 1..=n {
        let mut e = z[t - 1];
        for (j, c) in phi.iter().enumerate() {
            e -= c * z[t - 2 - j];
        }
        sse.add(e * e);
    }

    let s2e = sse.value() / n as f64;
    if !(s2e.is_finite() && s2e > 0.0) {
        return (f64::INFINITY, s2e.max(0.0));
    }
    let nf = n as f64;
    let nll = 0.5 * ((2.0 * std::f64::consts::PI * s2e).ln() + 1.0) + 0.5 * log_r.value() / nf;
    (nll, s2e)
}

/// Levinson-Durbin on sample autocovariances: reflection coefficients of the
/// Yule-Walker estimator, clamped strictly inside (-1, 1).
fn levinson_from_acov(gamma: &[f64], p: usize) -> Vec<f64> {
    const KMAX: f64 = 1.0 - 1e-6;
    let mut kappa = Vec::with_capacity(p);
    let mut phi: Vec<f64> = Vec::with_capacity(p);
    let mut v = gamma[0];
    for m in 1..=p {
        let mut acc = gamma[m];
        for j in 1..m {
            acc -= phi[j - 1] * gamma[m - j];
        }
        let k = if v > 0.0 {
            (acc / v).clamp(-KMAX, KMAX)
        } else {
            0.0
        };
        let mut next = vec![0.0; m];
        for j in 0..m - 1 {
            next[j] = phi[j] - k * phi[m - 2 - j];
        }
        next[m - 1] = k;
        phi = next;
        v *= 1.0 - k * k;
        kappa.push(k);
    }
    kappa
}

/// Gaussian MLE fit of an AR(p) model to the series (mean removed by the
/// sample mean first). Initialized at the Yule-Walker estimate and refined by
/// quasi-Newton iteration on the concentrated likelihood.
pub fn fit_ar_mle(x: &TimeSeries, p: usize) -> Result<MleFit> {
    let n = x.len();
    if n <= 10 * p {
        return Err(ArError::TooShort { n, p, need: 10 * p });
    }
    let mean = sample_mean(x);
    let z: Vec<f64> = x.samples().iter().map(|v| v - mean).collect();

    // sample autocovariances through the shared biased estimator
    let emp = empirical_autocorrelation(x, p)?;
    let gamma: Vec<f64> = emp.rho.iter().map(|r| r * emp.sigma2).collect();

    let kappa0 = levinson_from_acov(&gamma, p);
    let (nll0, _) = neg_loglik_per_sample(&z, &kappa0);
    let init_log_likelihood = -(n as f64) * nll0;

    if p == 0 {
        let (nll, s2e) = neg_loglik_per_sample(&z, &[]);
        let model = white_noise(s2e)?.with_mean(mean);
        return Ok(MleFit {
            model,
            log_likelihood: -(n as f64) * nll,
            init_log_likelihood,
            converged: true,
        });
    }

    let theta0: Vec<f64> = kappa0.iter().map(|k| k.atanh()).collect();
    let bounds = Bounds::new(vec![f64::NEG_INFINITY; p], vec![f64::INFINITY; p]);

    let objective = |theta: &[f64]| -> f64 {
        let kappa: Vec<f64> = theta.iter().map(|t| t.tanh()).collect();
        neg_loglik_per_sample(&z, &kappa).0
    };
    let result = minimize_bounded(
        |theta, grad| {
            let f0 = objective(theta);
            let mut th = theta.to_vec();
            for j in 0..p {
                let h = 1e-5 * (1.0 + theta[j].abs());
                th[j] = theta[j] + h;
                let fp = objective(&th);
                th[j] = theta[j] - h;
                let fm = objective(&th);
                th[j] = theta[j];
                grad[j] = (fp - fm) / (2.0 * h);
            }
            f0
        },
        &theta0,
        &bounds,
        300,
        1e-8,
        1e-14,
    );

    let kappa_final: Vec<f64> = result.x.iter().map(|t| t.tanh()).collect();
    let (nll_final, _) = neg_loglik_per_sample(&z, &kappa_final);

    // never return anything scoring below the initializer
    let improved = nll_final <= nll0;
    let (kappa_best, nll_best) = if improved {
        (kappa_final, nll_final)
    } else {
        (kappa0, nll0)
    };
    let converged = result.converged && improved;

    let coeffs = step_up_levels(&kappa_best).pop().unwrap_or_default();
    let (_, s2e) = neg_loglik_per_sample(&z, &kappa_best);
    if !(s2e.is_finite() && s2e > 0.0) {
        return Err(ArError::Core(avgerr_core::CoreError::DegenerateVariance));
    }
    let model = ArModel::new(coeffs, s2e)?.with_mean(mean);
    Ok(MleFit {
        model,
        log_likelihood: -(n as f64) * nll_best,
        init_log_likelihood,
        converged,
    })
}
