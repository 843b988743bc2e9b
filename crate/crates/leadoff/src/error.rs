use std::path::PathBuf;

/// Errors surfaced by the file formats and the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] leadoff_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    /// Malformed file content; `line` is 1-based when known.
    #[error("{path}{}: {msg}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse { path: PathBuf, line: Option<u64>, msg: String },

    #[error("{0}")]
    Usage(String),

    /// The solver stopped at its iteration cap; a partial report was written.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const NOT_CONVERGED: i32 = 3;
    pub const INVALID_KERNEL: i32 = 4;
    pub const DATA: i32 = 5;
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        use leadoff_core::Error as C;
        match self {
            Error::Usage(_) => exit::USAGE,
            Error::NotConverged { .. } => exit::NOT_CONVERGED,
            Error::Io { .. } | Error::Parse { .. } => exit::DATA,
            Error::Core(e) => match e {
                C::NotConverged { .. } => exit::NOT_CONVERGED,
                C::NotCertified | C::KernelRefused { .. } | C::Kernel(_) => exit::INVALID_KERNEL,
                C::Contract(_) => exit::USAGE,
                C::Invariant(_) => exit::INTERNAL,
                C::InadmissibleTransition { .. } | C::Input(_) | C::Record(_) | C::Assembly { .. } => exit::DATA,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: Option<u64>, msg: impl Into<String>) -> Error {
        Error::Parse { path: path.into(), line, msg: msg.into() }
    }
}
