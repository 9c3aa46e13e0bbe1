use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("arity mismatch in {context}: expected {expected}, found {found}")]
    Arity {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("non-finite value at {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("not a Dirac space: {0}")]
    NotDirac(String),

    #[error("not the graph of a bivector: kernel defect {defect}")]
    NotPoisson { defect: usize },

    #[error("rank defect: expected {expected}, found {found}")]
    RankDefect { expected: usize, found: usize },

    #[error("degenerate form: {0}")]
    Degenerate(String),

    #[error("subspace is not Lagrangian (residual {residual:e})")]
    NotLagrangian { residual: f64 },

    #[error("chart is not an immersion at {u:?}")]
    NotImmersion { u: Vec<f64> },

    #[error("prerequisite violated: {0}")]
    Prerequisite(String),

    #[error("flow failure: {0}")]
    Flow(String),

    #[error("scene error: {0}")]
    Scene(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
