//! Pseudospectral solver for the Kuramoto-Sivashinsky equation
//!
//! ```text
//! u_t + u_xxxx + u_xx + u u_x = 0,   x ∈ [0, L) periodic
//! ```
//!
//! used as a generator of chaotic energy time series. The spatial
//! discretization is Fourier collocation on `x_j = jL/N_x` with wavenumbers
//! `k_n = 2πn/L` (signed), the nonlinear term in divergence form
//! `u u_x = ½ ∂_x(u²)` evaluated pseudospectrally with 2/3-rule dealiasing,
//! and time stepping by the three-stage, stiffly accurate IMEX Runge-Kutta
//! pair of Ascher, Ruuth & Spiteri (their (2,2,2) scheme, `γ = 1 - √2/2`,
//! `δ = -√2/2`): the stiff linear operator `k² - k⁴` is treated implicitly
//! (diagonal in spectral space), the nonlinearity explicitly.
//!
//! Spectral coefficients are stored normalized, `û_n = (1/N_x) Σ_j u_j
//! e^{-i k_n x_j}`, so the physical field is recovered by the plain inverse
//! DFT and the spatially averaged energy is `e = (1/L)∫u² dx = Σ_n |û_n|²`.
//! The `k = 0` mode has no linear growth and no divergence-form forcing, so
//! the spatial mean stays frozen at its initial value.

use avgerr_core::series::TimeSeries;
use avgerr_core::sum::CompensatedSum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KsError {
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("solution blew up (non-finite spectral coefficient) at step {step}")]
    BlowUp { step: u64 },
    #[error(transparent)]
    Core(#[from] avgerr_core::CoreError),
}

pub type Result<T> = std::result::Result<T, KsError>;

#[derive(Debug, Clone, PartialEq)]
pub struct KsConfig {
    pub domain_length: f64,
    /// Number of collocation points / Fourier modes; power of two, ≥ 16.
    pub n_modes: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    /// Steps between recorded energy samples.
    pub sample_stride: usize,
}

impl Default for KsConfig {
    fn default() -> Self {
        Self {
            domain_length: 200.0,
            n_modes: 512,
            dt: 0.2,
            n_steps: 20_000,
            seed: 0,
            sample_stride: 1,
        }
    }
}

impl KsConfig {
    fn validate(&self) -> Result<()> {
        if !(self.domain_length.is_finite() && self.domain_length > 0.0) {
            return Err(KsError::BadConfig(format!(
                "domain length must be positive, got {}",
                self.domain_length
            )));
        }
        if self.n_modes < 16 || !self.n_modes.is_power_of_two() {
            return Err(KsError::BadConfig(format!(
                "n_modes must be a power of two ≥ 16, got {}",
                self.n_modes
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(KsError::BadConfig(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.sample_stride == 0 {
            return Err(KsError::BadConfig("sample_stride must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Spectral state of the field: normalized Fourier coefficients plus the
/// current time and step count.
#[derive(Debug, Clone)]
pub struct KsState {
    pub u_hat: Vec<Complex<f64>>,
    pub time: f64,
    pub step: u64,
}

/// Reusable solver: FFT plans and the diagonal operators, built once per
/// configuration.
pub struct KsSolver {
    cfg: KsConfig,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Linear operator `k² - k⁴` per mode.
    lhat: Vec<f64>,
    /// `-i k/2` with the dealiasing mask folded in: multiplies FFT(u²).
    nl_factor: Vec<Complex<f64>>,
    /// 2/3-rule mask (1 for kept modes, 0 above the cutoff).
    mask: Vec<f64>,
    scratch: Vec<Complex<f64>>,
}

const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2; // 1 - √2/2
const DELTA: f64 = -std::f64::consts::FRAC_1_SQRT_2; // -√2/2

/// Hermitian projection: `û_n ← (û_n + conj(û_{N-n}))/2`, making the
/// physical field exactly real.
fn symmetrize(u_hat: &mut [Complex<f64>]) {
    let n = u_hat.len();
    u_hat[0] = Complex::new(u_hat[0].re, 0.0);
    if n.is_multiple_of(2) {
        u_hat[n / 2] = Complex::new(u_hat[n / 2].re, 0.0);
    }
    for i in 1..n.div_ceil(2) {
        let h = 0.5 * (u_hat[i] + u_hat[n - i].conj());
        u_hat[i] = h;
        u_hat[n - i] = h.conj();
    }
}

impl KsSolver {
    pub fn new(cfg: KsConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n_modes;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);

        let cutoff = n / 3; // keep |ñ| ≤ ⌊N_x/3⌋ (2/3 of the Nyquist range)
        let mut lhat = Vec::with_capacity(n);
        let mut nl_factor = Vec::with_capacity(n);
        let mut mask = Vec::with_capacity(n);
        for idx in 0..n {
            let signed = if idx <= n / 2 {
                idx as i64
            } else {
                idx as i64 - n as i64
            };
            let k = 2.0 * std::f64::consts::PI * signed as f64 / cfg.domain_length;
            let k2 = k * k;
            lhat.push(k2 - k2 * k2);
            let keep = if idx.min(n - idx) <= cutoff { 1.0 } else { 0.0 };
            mask.push(keep);
            nl_factor.push(Complex::new(0.0, -0.5 * k * keep));
        }

        Ok(Self {
            cfg,
            fft,
            ifft,
            lhat,
            nl_factor,
            mask,
            scratch: vec![Complex::new(0.0, 0.0); n],
        })
    }

    pub fn config(&self) -> &KsConfig {
        &self.cfg
    }

    /// Spectral state from physical grid values (length `n_modes`).
    pub fn state_from_physical(&self, u: &[f64], time: f64) -> Result<KsState> {
        let n = self.cfg.n_modes;
        if u.len() != n {
            return Err(KsError::BadConfig(format!(
                "physical field has {} points, grid has {n}",
                u.len()
            )));
        }
        let mut buf: Vec<Complex<f64>> = u.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        let scale = 1.0 / n as f64;
        for c in &mut buf {
            *c *= scale;
        }
        symmetrize(&mut buf);
        Ok(KsState {
            u_hat: buf,
            time,
            step: 0,
        })
    }

    /// The initial field `u(x, 0) = sin(0.5πx) + sin(0.85πx) + 0.2 v`, with
    /// `v` i.i.d. standard normal per grid point, drawn in grid order from a
    /// generator seeded by `cfg.seed`.
    pub fn initial_field(&self) -> KsState {
        let n = self.cfg.n_modes;
        let dx = self.cfg.domain_length / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let u: Vec<f64> = (0..n)
            .map(|j| {
                let x = j as f64 * dx;
                let v: f64 = StandardNormal.sample(&mut rng);
                (0.5 * std::f64::consts::PI * x).sin()
                    + (0.85 * std::f64::consts::PI * x).sin()
                    + 0.2 * v
            })
            .collect();
        self.state_from_physical(&u, 0.0)
            .expect("grid-sized field by construction")
    }

    /// Dealiased nonlinear term `N(û) = -½ i k · FFT(u²)` (normalized), into `out`.
    fn nonlinear(&mut self, u_hat: &[Complex<f64>], out: &mut [Complex<f64>]) {
        let n = self.cfg.n_modes;
        self.scratch.copy_from_slice(u_hat);
        self.ifft.process(&mut self.scratch);
        for c in self.scratch.iter_mut() {
            // physical field is real; drop rounding-level imaginary drift
            let re = c.re;
            *c = Complex::new(re * re, 0.0);
        }
        self.fft.process(&mut self.scratch);
        let scale = 1.0 / n as f64;
        for ((o, &f), &s) in out.iter_mut().zip(&self.nl_factor).zip(&self.scratch) {
            *o = f * s * scale;
        }
    }

    /// Advance the state by one `dt`.
    pub fn step(&mut self, state: &mut KsState) -> Result<()> {
        let n = self.cfg.n_modes;
        let dt = self.cfg.dt;

        let mut n1 = vec![Complex::new(0.0, 0.0); n];
        let mut n2 = vec![Complex::new(0.0, 0.0); n];
        let mut u2 = vec![Complex::new(0.0, 0.0); n];

        self.nonlinear(&state.u_hat, &mut n1);
        for i in 0..n {
            let den = 1.0 - dt * GAMMA * self.lhat[i];
            u2[i] = (state.u_hat[i] + dt * GAMMA * n1[i]) / den;
        }
        self.nonlinear(&u2, &mut n2);
        for i in 0..n {
            let den = 1.0 - dt * GAMMA * self.lhat[i];
            let explicit = dt * (DELTA * n1[i] + (1.0 - DELTA) * n2[i]);
            let implicit = dt * (1.0 - GAMMA) * self.lhat[i] * u2[i];
            let next = (state.u_hat[i] + explicit + implicit) / den;
            state.u_hat[i] = next * self.mask[i];
        }
        // Project back onto the conjugate-symmetric subspace. The nonlinear
        // term only sees the real part of the field, so any anti-Hermitian
        // rounding residue evolves purely linearly — and the linearly
        // unstable low-k modes would amplify it from 1e-16 to O(1) within a
        // few hundred steps. A half-spectrum transform enforces this
        // structurally; here it is an explicit O(N) projection.
        symmetrize(&mut state.u_hat);
        state.step += 1;
        state.time = state.step as f64 * dt;

        if state
            .u_hat
            .iter()
            .any(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(KsError::BlowUp { step: state.step });
        }
        Ok(())
    }

    /// Spatially averaged energy `e = (1/L) ∫ u² dx`, by Parseval's identity
    /// the sum of squared moduli of the normalized coefficients.
    pub fn energy(&self, state: &KsState) -> f64 {
        let mut acc = CompensatedSum::new();
        for c in &state.u_hat {
            acc.add(c.re * c.re + c.im * c.im);
        }
        acc.value()
    }

    /// Full simulation: the energy series sampled every `sample_stride`
    /// steps, starting with the initial state. The recorded series has
    /// sampling interval `dt · sample_stride`; any initial transient is left
    /// in place for downstream detection.
    pub fn run(&mut self) -> Result<TimeSeries> {
        let mut state = self.initial_field();
        let mut energies = Vec::with_capacity(1 + self.cfg.n_steps / self.cfg.sample_stride);
        energies.push(self.energy(&state));
        for _ in 0..self.cfg.n_steps {
            self.step(&mut state)?;
            if state.step.is_multiple_of(self.cfg.sample_stride as u64) {
                energies.push(self.energy(&state));
            }
        }
        let dt_series = self.cfg.dt * self.cfg.sample_stride as f64;
        Ok(TimeSeries::new(energies, dt_series)?.with_label("ks-energy"))
    }

    /// Physical grid values of the state (inverse transform, real part).
    pub fn to_physical(&mut self, state: &KsState) -> Vec<f64> {
        self.scratch.copy_from_slice(&state.u_hat);
        self.ifft.process(&mut self.scratch);
        self.scratch.iter().map(|c| c.re).collect()
    }
}

/// One-shot convenience wrappers over [`KsSolver`].
pub fn ks_initial_field(cfg: &KsConfig) -> Result<KsState> {
    Ok(KsSolver::new(cfg.clone())?.initial_field())
}

pub fn ks_step(state: &KsState, cfg: &KsConfig) -> Result<KsState> {
    let mut solver = KsSolver::new(cfg.clone())?;
    let mut next = state.clone();
    solver.step(&mut next)?;
    Ok(next)
}

pub fn ks_energy(state: &KsState, cfg: &KsConfig) -> Result<f64> {
    Ok(KsSolver::new(cfg.clone())?.energy(state))
}

pub fn ks_run(cfg: &KsConfig) -> Result<TimeSeries> {
    KsSolver::new(cfg.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> KsConfig {
        KsConfig {
            n_steps: 100,
            ..KsConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(KsSolver::new(KsConfig::default()).is_ok());
        let bad = |f: fn(&mut KsConfig)| {
            let mut c = KsConfig::default();
            f(&mut c);
            KsSolver::new(c).is_err()
        };
        assert!(bad(|c| c.n_modes = 100)); // not a power of two
        assert!(bad(|c| c.n_modes = 8)); // too small
        assert!(bad(|c| c.dt = 0.0));
        assert!(bad(|c| c.domain_length = -1.0));
        assert!(bad(|c| c.sample_stride = 0));
    }

    #[test]
    fn zero_field_is_a_fixed_point() {
        let mut solver = KsSolver::new(small_cfg()).unwrap();
        let mut state = solver.state_from_physical(&vec![0.0; 512], 0.0).unwrap();
        for _ in 0..10 {
            solver.step(&mut state).unwrap();
        }
        assert!(state.u_hat.iter().all(|c| c.re == 0.0 && c.im == 0.0));
        assert_eq!(solver.energy(&state), 0.0);
    }

    #[test]
    fn initial_field_is_deterministic_and_documented() {
        let solver = KsSolver::new(small_cfg()).unwrap();
        let a = solver.initial_field();
        let b = solver.initial_field();
        assert_eq!(a.u_hat, b.u_hat);

        // the mean mode equals 0.2 × mean(v): the sines cancel over the grid
        let mut rng = ChaCha8Rng::seed_from_u64(small_cfg().seed);
        let mut mv = CompensatedSum::new();
        for _ in 0..512 {
            let v: f64 = StandardNormal.sample(&mut rng);
            mv.add(v);
        }
        let want = 0.2 * mv.value() / 512.0;
        assert!(
            (a.u_hat[0].re - want).abs() < 1e-12,
            "mean mode {} vs {want}",
            a.u_hat[0].re
        );
    }

    #[test]
    fn pure_sines_concentrate_on_their_modes() {
        // sin(0.5πx) ↦ mode n = L/4 = 50, sin(0.85πx) ↦ n = 85 for L = 200
        let solver = KsSolver::new(small_cfg()).unwrap();
        let n = 512;
        let dx = 200.0 / n as f64;
        let u: Vec<f64> = (0..n)
            .map(|j| {
                let x = j as f64 * dx;
                (0.5 * std::f64::consts::PI * x).sin() + (0.85 * std::f64::consts::PI * x).sin()
            })
            .collect();
        let state = solver.state_from_physical(&u, 0.0).unwrap();
        for (idx, c) in state.u_hat.iter().enumerate() {
            let expected = matches!(idx, 50 | 85 | 462 | 427); // 512-50, 512-85
            if expected {
                assert!((c.norm() - 0.5).abs() < 1e-10, "mode {idx}: {}", c.norm());
            } else {
                assert!(c.norm() < 1e-10, "mode {idx} should be empty: {}", c.norm());
            }
        }
    }

    #[test]
    fn energy_of_unit_sine_is_half() {
        let solver = KsSolver::new(small_cfg()).unwrap();
        let n = 512;
        let u: Vec<f64> = (0..n)
            .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).sin())
            .collect();
        let state = solver.state_from_physical(&u, 0.0).unwrap();
        assert!((solver.energy(&state) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parseval_matches_physical_quadrature() {
        let mut solver = KsSolver::new(small_cfg()).unwrap();
        let state = solver.initial_field();
        let spectral = solver.energy(&state);
        let u = solver.to_physical(&state);
        let mut acc = CompensatedSum::new();
        for v in &u {
            acc.add(v * v);
        }
        let physical = acc.value() / u.len() as f64;
        assert!(
            (spectral - physical).abs() / physical < 1e-12,
            "{spectral} vs {physical}"
        );
    }

    #[test]
    fn linear_mode_growth_matches_exponential() {
        // tiny single low mode: nonlinearity is O(amplitude²), negligible
        let cfg = KsConfig {
            dt: 0.2,
            ..small_cfg()
        };
        let mut solver = KsSolver::new(cfg.clone()).unwrap();
        let n = 512;
        let amp = 1e-8;
        let u: Vec<f64> = (0..n)
            .map(|j| amp * (2.0 * std::f64::consts::PI * 3.0 * j as f64 / n as f64).sin())
            .collect();
        let mut state = solver.state_from_physical(&u, 0.0).unwrap();
        let k = 2.0 * std::f64::consts::PI * 3.0 / cfg.domain_length;
        let lhat = k * k - k.powi(4);
        let start = state.u_hat[3].norm();
        for _ in 0..10 {
            solver.step(&mut state).unwrap();
        }
        let grown = state.u_hat[3].norm();
        let want = start * (10.0 * lhat * cfg.dt).exp();
        assert!(
            (grown - want).abs() / want < 1e-6,
            "grown {grown} vs exact {want}"
        );
    }

    #[test]
    fn state_stays_real_and_dealiased() {
        let cfg = KsConfig {
            n_steps: 10_000,
            ..KsConfig::default()
        };
        let mut solver = KsSolver::new(cfg).unwrap();
        let mut state = solver.initial_field();
        for _ in 0..10_000 {
            solver.step(&mut state).unwrap();
        }
        let n = 512;
        let cutoff = n / 3;
        let scale: f64 = state.u_hat.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for idx in 0..n {
            if idx.min(n - idx) > cutoff {
                let c = state.u_hat[idx];
                assert!(c.re == 0.0 && c.im == 0.0, "aliased mode {idx} nonzero");
            }
            let conj = state.u_hat[(n - idx) % n].conj();
            let diff = (state.u_hat[idx] - conj).norm();
            assert!(
                diff <= 1e-12 * scale.max(1.0),
                "conjugate symmetry broken at {idx}: {diff:e}"
            );
        }
    }

    #[test]
    fn temporal_order_is_at_least_second() {
        // smooth two-sine initial data, fixed horizon, errors vs a dt/16 reference
        let base_dt = 0.05;
        let horizon = 1.0;
        let field_at = |dt: f64| -> Vec<f64> {
            let cfg = KsConfig {
                dt,
                n_steps: 0,
                ..KsConfig::default()
            };
            let mut solver = KsSolver::new(cfg).unwrap();
            let n = 512;
            let dx = 200.0 / n as f64;
            let u: Vec<f64> = (0..n)
                .map(|j| {
                    let x = j as f64 * dx;
                    (0.5 * std::f64::consts::PI * x).sin() + (0.85 * std::f64::consts::PI * x).sin()
                })
                .collect();
            let mut state = solver.state_from_physical(&u, 0.0).unwrap();
            let steps = (horizon / dt).round() as usize;
            for _ in 0..steps {
                solver.step(&mut state).unwrap();
            }
            solver.to_physical(&state)
        };
        let reference = field_at(base_dt / 16.0);
        let err = |dt: f64| -> f64 {
            field_at(dt)
                .iter()
                .zip(&reference)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let e1 = err(base_dt);
        let e2 = err(base_dt / 2.0);
        let slope = (e1 / e2).log2();
        assert!(
            (1.7..3.3).contains(&slope),
            "observed order {slope} (errors {e1:e}, {e2:e})"
        );
    }

    #[test]
    fn chaotic_run_stays_in_energy_band() {
        let cfg = KsConfig {
            n_steps: 20_000,
            ..KsConfig::default()
        };
        let series = ks_run(&cfg).unwrap();
        assert_eq!(series.len(), 20_001);
        assert_eq!(series.sampling_interval(), 0.2);
        let tail = &series.samples()[2000..];
        assert!(tail.iter().all(|&e| e > 0.2 && e < 20.0));
        let mean: f64 = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((0.5..5.0).contains(&mean), "tail mean {mean}");
    }

    #[test]
    fn run_is_deterministic_and_stride_aware() {
        let cfg = KsConfig {
            n_steps: 400,
            seed: 9,
            ..KsConfig::default()
        };
        let a = ks_run(&cfg).unwrap();
        let b = ks_run(&cfg).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c = ks_run(&KsConfig {
            seed: 10,
            ..cfg.clone()
        })
        .unwrap();
        assert_ne!(a.samples(), c.samples());

        let strided = ks_run(&KsConfig {
            sample_stride: 4,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(strided.len(), 101);
        assert_eq!(strided.sampling_interval(), 0.8);
        for (i, v) in strided.samples().iter().enumerate() {
            assert_eq!(*v, a.samples()[4 * i]);
        }

        let single = ks_run(&KsConfig {
            n_steps: 0,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn one_shot_wrappers_agree_with_solver() {
        let cfg = small_cfg();
        let state = ks_initial_field(&cfg).unwrap();
        let stepped = ks_step(&state, &cfg).unwrap();
        let mut solver = KsSolver::new(cfg.clone()).unwrap();
        let mut manual = solver.initial_field();
        solver.step(&mut manual).unwrap();
        assert_eq!(stepped.u_hat, manual.u_hat);
        assert_eq!(ks_energy(&stepped, &cfg).unwrap(), solver.energy(&manual));
    }
}
