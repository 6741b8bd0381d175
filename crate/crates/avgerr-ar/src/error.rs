use avgerr_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArError {
    #[error("non-stationary model: {0}")]
    Unstable(String),
    #[error("noise variance must be positive, got {0}")]
    BadNoiseVariance(f64),
    #[error("initial state has {got} values, model order is {need}")]
    BadInit { got: usize, need: usize },
    #[error("series of length {n} too short to fit order {p} (need n > {need})")]
    TooShort { n: usize, p: usize, need: usize },
    #[error("Yule-Walker system is singular")]
    SingularSystem,
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type Result<T> = std::result::Result<T, ArError>;
