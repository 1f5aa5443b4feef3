use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {coordinate}")]
    NonFinite { coordinate: String },

    #[error("Lagrangian not regular")]
    NotRegular,

    #[error("not hyperbolic-evolvable in direction t")]
    NotEvolvable,

    #[error("s-coupled model requires full SecondJet interface")]
    SCoupled,

    #[error("direction {direction} is not hyperbolic (characteristic speed squared {speed_sq})")]
    NotHyperbolic { direction: usize, speed_sq: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("parabolic spec not representable")]
    Parabolic,

    #[error("invalid PDE spec: {0}")]
    InvalidSpec(String),

    #[error("coordinate {index} not cyclic (|dL/dq| = {value:e})")]
    NotCyclic { index: usize, value: f64 },

    #[error("CFL violation: dt = {dt} exceeds limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("nonpositive step")]
    NonPositiveStep,

    #[error("blow-up detected at t = {t}")]
    BlowUp { t: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("Hamiltonian vanishes at the evaluation point (|H| = {0:e})")]
    VanishingHamiltonian(f64),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
