//! Quantifying the error of finite-time averages of stationary signals.
//!
//! Given a single realization of a stationary, correlated time series, this
//! crate estimates how far its sample average should be expected to sit from
//! the true mean — the expected squared averaging error — without knowing the
//! process that produced it. The workhorse is a multiscale fit: measured
//! mean-squared block means at block lengths `1..⌊√N⌋` are matched by a
//! multi-exponential autocorrelation model, which is then extrapolated to the
//! full record length.
//!
//! Also here: a least-squares change-point detector for trimming initial
//! transients, exact error formulas for processes with known autocorrelation,
//! compensated summation utilities, and the bound-constrained quasi-Newton
//! minimizer used by the fit.

pub mod error;
pub mod optim;
pub mod seed;
pub mod series;
pub mod sum;
pub mod transient;
pub mod uq;

pub use error::{CoreError, Result};
pub use seed::split_seed;
pub use series::{
    empirical_autocorrelation, exact_sq_averaging_error, mean_squared_shifted_sample_mean,
    multiscale_profile, sample_mean, shifted_sample_means, ExactStatistics, MultiscaleProfile,
    TimeSeries,
};
pub use transient::{detect_transient, split_at_transient, TransientResult};
pub use uq::{
    estimate, fit, model_acf, model_sq_error, objective_and_gradient, residual_g, AcfModelParams,
    FitConfig, FitDiagnostics, ObjectiveGradient, UqEstimate,
};
