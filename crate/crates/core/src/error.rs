use crate::time::Ptu;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("correlation matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("battery constraint violated: {bound} (command {command:.9}, limit {limit:.9})")]
    ConstraintViolation {
        bound: &'static str,
        command: f64,
        limit: f64,
    },

    #[error("intra-day gate for PTU {ptu} closed (now {now})")]
    GateClosed { ptu: Ptu, now: Ptu },

    #[error("no forecast issued at or before {as_of} covers target {target}")]
    MissingForecast { target: Ptu, as_of: Ptu },

    #[error("{what}: missing timestamps {}", format_missing(.missing))]
    DataGap { what: String, missing: Vec<Ptu> },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("PTU {ptu}: {source}")]
    AtPtu {
        ptu: Ptu,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn at(self, ptu: Ptu) -> Self {
        match self {
            e @ Error::AtPtu { .. } => e,
            e => Error::AtPtu {
                ptu,
                source: Box::new(e),
            },
        }
    }

    /// Innermost error, skipping PTU context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPtu { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_solver_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Infeasible | Error::Unbounded | Error::Solver(_)
        )
    }
}

fn format_missing(missing: &[Ptu]) -> String {
    const SHOWN: usize = 10;
    let mut out: Vec<String> = missing.iter().take(SHOWN).map(|p| p.to_string()).collect();
    if missing.len() > SHOWN {
        out.push(format!("... ({} total)", missing.len()));
    }
    out.join(", ")
}
