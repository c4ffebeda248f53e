use thiserror::Error;

use crate::spectrum::Regime;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("epsilon {epsilon} too large: {reason}")]
    EpsilonTooLarge { epsilon: f64, reason: String },

    #[error("sample grid too coarse: step {step} exceeds {limit}")]
    GridTooCoarse { step: f64, limit: f64 },

    #[error("degenerate interval ({a}, {b})")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("modes {l} and {m} are numerically parallel on the interval (1 - cos = {gap:e})")]
    NearParallel { l: usize, m: usize, gap: f64 },

    #[error("multiplier decay insufficient: {0}")]
    DecayInsufficient(String),

    #[error("support leak {leak:e} exceeds tolerance {tolerance:e}")]
    SupportLeak { leak: f64, tolerance: f64 },

    #[error("spectral grid step {step} too coarse for horizon {t_final}")]
    GridAliased { step: f64, t_final: f64 },

    #[error("dual family magnitude e^{log_peak:.1} exceeds the usable floating point range")]
    DynamicRange { log_peak: f64 },

    #[error("Gram matrix ill-conditioned (cond = {cond:e}); reduce the mode count or lengthen T")]
    IllConditioned { cond: f64 },

    #[error("mode {mode} has a vanishing gap but is not flagged double")]
    DegenerateGap { mode: usize },

    #[error("cluster chain through mode {mode} cannot be split between two inputs")]
    UnresolvableCluster { mode: usize },

    #[error("regime mismatch: expected {expected:?}, found {found:?}")]
    RegimeMismatch { expected: Regime, found: Regime },

    #[error("truncation tail {tail:e} exceeds 1e-6 of the partial norm {norm:e}")]
    TailDominant { tail: f64, norm: f64 },

    #[error("frequencies {a} and {b} are closer than the separation radius ({distance:e})")]
    SubsetNotSeparated { a: i64, b: i64, distance: f64 },

    #[error("mode cutoff exhausted before reaching eps; achievable energy {achievable:e}")]
    CutoffTooLarge { achievable: f64 },

    #[error("forcing step {step} too coarse for mode {mode} (limit {limit})")]
    StepTooCoarse { mode: usize, step: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable variant name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::InvalidInput(_) => "InvalidInput",
            Error::EpsilonTooLarge { .. } => "EpsilonTooLarge",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::DegenerateInterval { .. } => "DegenerateInterval",
            Error::NearParallel { .. } => "NearParallel",
            Error::DecayInsufficient(_) => "DecayInsufficient",
            Error::SupportLeak { .. } => "SupportLeak",
            Error::GridAliased { .. } => "GridAliased",
            Error::DynamicRange { .. } => "DynamicRange",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::DegenerateGap { .. } => "DegenerateGap",
            Error::UnresolvableCluster { .. } => "UnresolvableCluster",
            Error::RegimeMismatch { .. } => "RegimeMismatch",
            Error::TailDominant { .. } => "TailDominant",
            Error::SubsetNotSeparated { .. } => "SubsetNotSeparated",
            Error::CutoffTooLarge { .. } => "CutoffTooLarge",
            Error::StepTooCoarse { .. } => "StepTooCoarse",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
