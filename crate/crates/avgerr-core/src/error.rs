use crate::uq::AcfModelParams;

/// Errors produced by the statistics and fitting layers.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    #[error("series is empty")]
    EmptySeries,

    #[error("series has {got} samples, need at least {need}")]
    TooShort { got: usize, need: usize },

    #[error("sample at index {index} is not finite")]
    NonFiniteSample { index: usize },

    #[error("sampling interval must be positive and finite, got {0}")]
    BadSamplingInterval(f64),

    #[error("block length {s} outside valid range 1..={n}")]
    BadBlockLength { s: usize, n: usize },

    #[error("max lag {k_max} must be smaller than the series length {n}")]
    BadLag { k_max: usize, n: usize },

    #[error("series variance is zero; autocorrelation is undefined")]
    DegenerateVariance,

    #[error("autocorrelation sequence covers lags 0..={have}, need 0..={need}")]
    MissingAcf { have: usize, need: usize },

    #[error("infeasible model parameters: {0}")]
    InfeasibleParams(String),

    #[error("profile has {q} scales, need at least {need} for {m} modes")]
    ProfileTooShort { q: usize, need: usize, m: usize },

    #[error(
        "no feasible fit found in {n_starts} starts \
         (best equality residual {residual:.3e})"
    )]
    FitFailure {
        n_starts: usize,
        residual: f64,
        /// Best infeasible iterate, for post-mortem inspection.
        best: Box<AcfModelParams>,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
