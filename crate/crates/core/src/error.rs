use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid frequency range: f_hi ({f_hi}) must exceed f_lo ({f_lo})")]
    InvalidRange { f_lo: f64, f_hi: f64 },
    #[error("grid needs at least one bin")]
    ZeroBins,
    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("frequency grids do not match")]
    GridMismatch,
    #[error("{what} must be strictly positive (bin {index} = {value})")]
    NonPositive {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{what} must be non-negative and finite (bin {index} = {value})")]
    Negative {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("overlap fraction {0} outside [0, 1)")]
    InvalidOverlap(f64),
    #[error("transfer function is degenerate: {0}")]
    DegenerateTransferFunction(String),
    #[error("loop filter not invertible: NTF has a zero at infinity")]
    NonInvertibleLoop,
    #[error("frequency {frequency} outside [0, f_s/2] with f_s = {sample_rate}")]
    OutsideNyquist { frequency: f64, sample_rate: f64 },
    #[error("NTF design infeasible: {reason} (achieved in-band RMS error {achieved_rms_db:.3} dB, peak gain {peak_gain:.3})")]
    Infeasible {
        reason: String,
        achieved_rms_db: f64,
        peak_gain: f64,
    },
    #[error("simulation trace is unstable")]
    UnstableTrace,
    #[error("cannot split {bins} bins into {bands} bands")]
    TooManyBands { bands: usize, bins: usize },
    #[error("band {band} does not own any grid bin")]
    BandMisaligned { band: usize },
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
