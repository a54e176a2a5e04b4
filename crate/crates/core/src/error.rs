use thiserror::Error;

/// Errors raised by the dynamics, sampling, reconstruction and fitting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("overdamped regime: 2*pi*f = {omega} <= 2*kappa = {two_kappa}")]
    OverdampedRegime { omega: f64, two_kappa: f64 },
    #[error("invalid qubit parameters: {0}")]
    InvalidParams(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("integration step {dt} exceeds the stable limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("invalid Bloch component rz = {0}")]
    InvalidBloch(f64),
    #[error("invalid band: f_L = {f_low}, B = {bandwidth}")]
    InvalidBand { f_low: f64, bandwidth: f64 },
    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),
    #[error("interleaved sample count must be even, got {0}")]
    OddM(usize),
    #[error("interleave kernel is singular: |sin| = {sin:.3e} for order {order} at offset k = {k}")]
    KernelSingular { order: u32, k: f64, sin: f64 },
    #[error("samples do not match plan: {0}")]
    PlanMismatch(String),
    #[error("empty reconstruction window")]
    EmptyWindow,
    #[error("spectral maximum sits on the band edge at {0}")]
    PeakAtEdge(f64),
    #[error("no resonance in band: in-band max/median = {ratio:.3}")]
    NoPeakInBand { ratio: f64 },
    #[error("invalid search grid: {0}")]
    InvalidGrid(String),
    #[error("observation windows differ: {0} vs {1}")]
    WindowMismatch(f64, f64),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
