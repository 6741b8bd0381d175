//! Failure classification for exit codes.
//!
//! Exit 2 means the inputs were bad (unreadable files, malformed flags,
//! infeasible configs); exit 3 means the inputs were fine but the numerics
//! gave up (fit did not converge, solver blew up). Everything else is a bug
//! and panics.

use avgerr_ar::ArError;
use avgerr_core::CoreError;
use avgerr_ks::KsError;

#[derive(Debug)]
pub enum Failure {
    /// Invalid input; exit code 2.
    Input(anyhow::Error),
    /// Numerical failure; exit code 3.
    Numeric(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Numeric(e) => e,
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn input(err: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(err.into())
}

pub fn numeric(err: impl Into<anyhow::Error>) -> Failure {
    Failure::Numeric(err.into())
}

fn classify_core(err: CoreError) -> Failure {
    match err {
        CoreError::FitFailure { .. } => Failure::Numeric(err.into()),
        _ => Failure::Input(err.into()),
    }
}

fn classify_ar(err: ArError) -> Failure {
    match err {
        ArError::SingularSystem => Failure::Numeric(err.into()),
        ArError::Core(e) => classify_core(e),
        _ => Failure::Input(err.into()),
    }
}

fn classify_ks(err: KsError) -> Failure {
    match err {
        KsError::BlowUp { .. } => Failure::Numeric(err.into()),
        KsError::Core(e) => classify_core(e),
        _ => Failure::Input(err.into()),
    }
}

/// Maps library errors onto the exit-code classes.
pub trait Classify<T> {
    fn classify(self) -> CmdResult<T>;
}

impl<T> Classify<T> for Result<T, CoreError> {
    fn classify(self) -> CmdResult<T> {
        self.map_err(classify_core)
    }
}

impl<T> Classify<T> for Result<T, ArError> {
    fn classify(self) -> CmdResult<T> {
        self.map_err(classify_ar)
    }
}

impl<T> Classify<T> for Result<T, KsError> {
    fn classify(self) -> CmdResult<T> {
        self.map_err(classify_ks)
    }
}
