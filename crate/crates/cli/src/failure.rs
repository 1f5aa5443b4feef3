use std::fmt;

/// Error surfaced by a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config, spec or missing files: exit 2.
    Config(String),
    /// Solver or verification failure: exit 3.
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(msg.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<kcontact::Error> for Failure {
    fn from(e: kcontact::Error) -> Self {
        use kcontact::Error::*;
        match e {
            DimensionMismatch { .. }
            | Parabolic
            | InvalidSpec(_)
            | NotCyclic { .. }
            | InvalidGrid(_)
            | InvalidTrace(_)
            | Io(_)
            | SCoupled => Failure::Config(e.to_string()),
            NonFinite { .. }
            | NotRegular
            | NotEvolvable
            | NotHyperbolic { .. }
            | NoConvergence { .. }
            | Cfl { .. }
            | NonPositiveStep
            | BlowUp { .. }
            | VanishingHamiltonian(_) => Failure::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;
