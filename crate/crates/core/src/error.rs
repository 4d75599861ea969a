use thiserror::Error;

/// Errors raised by the simulators, solvers and samplers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no extremum of empty measure")]
    EmptyMeasure,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("population cap of {cap} particles exceeded at time {time}")]
    PopulationCap { cap: usize, time: f64 },

    #[error("point measure cap of {cap} atoms exceeded")]
    AtomCap { cap: usize },

    #[error("split time of a leaf with itself is undefined")]
    SameLeaf,

    #[error("leaf index {0} out of range")]
    LeafOutOfRange(usize),

    #[error("need at least {needed} checkpoints in [{lo}, {hi}], found {found}")]
    SparseCheckpoints {
        needed: usize,
        found: usize,
        lo: f64,
        hi: f64,
    },

    #[error("front escaped grid at t = {t} (front at {front}, grid [{x_min}, {x_max}])")]
    FrontEscaped {
        t: f64,
        front: f64,
        x_min: f64,
        x_max: f64,
    },

    #[error("field has no crossing of level {level}")]
    NoCrossing { level: f64 },

    #[error("integrand has not decayed at the grid edge (relative size {relative:e})")]
    IntegrandNotDecayed { relative: f64 },

    #[error("validity regime violated: {0}")]
    Regime(String),

    #[error("{what} did not converge (residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("partial sum ties with the chord; redraw the sample")]
    ChordTie,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("expected count {expected:.3} < 1 in window {window}, bin {bin}; re-bin")]
    SparseCell {
        window: usize,
        bin: usize,
        expected: f64,
    },

    #[error("fit residual {residual:.4} above threshold {threshold:.4}")]
    PoorFit { residual: f64, threshold: f64 },

    #[error("rejection sampler gave up after {attempts} attempts (acceptance rate {rate:.2e})")]
    AttemptCap { attempts: usize, rate: f64 },

    #[error("no acceptances in {replicas} replicas; use a smaller `a` or `t`")]
    NoAcceptance { replicas: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
