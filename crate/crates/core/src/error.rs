use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input: {0}")]
    Input(String),
    #[error("rank-deficient lattice (rank {rank} < {n})")]
    RankDeficient { rank: usize, n: usize },
    #[error("degenerate cell (zero determinant)")]
    DegenerateCell,
    #[error("singular matrix")]
    SingularMatrix,
    #[error("ill-conditioned matrix (residual {0:e})")]
    IllConditioned(f64),
    #[error("singular rank-one update")]
    SingularUpdate,
    #[error("genericity failure: {0}")]
    Genericity(String),
    #[error("hash collision at sigma {0:#018x}")]
    HashCollision(u64),
    #[error("instance too large for brute force ({0} subset tuples)")]
    InstanceTooLarge(f64),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(_) => "InputError",
            Error::RankDeficient { .. } => "InputError",
            Error::DegenerateCell => "DegenerateCell",
            Error::SingularMatrix => "SingularMatrix",
            Error::IllConditioned(_) => "IllConditioned",
            Error::SingularUpdate => "SingularUpdate",
            Error::Genericity(_) => "GenericityFailure",
            Error::HashCollision(_) => "HashCollision",
            Error::InstanceTooLarge(_) => "InstanceTooLarge",
            Error::Verification(_) => "VerificationFailure",
            Error::Transport(_) => "TransportError",
            Error::UnsupportedFamily(_) => "UnsupportedFamily",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IoError",
        }
    }

    /// Numerical breakdowns that a fresh random draw can cure.
    pub fn is_genericity(&self) -> bool {
        matches!(
            self,
            Error::Genericity(_)
                | Error::SingularMatrix
                | Error::IllConditioned(_)
                | Error::SingularUpdate
                | Error::DegenerateCell
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
