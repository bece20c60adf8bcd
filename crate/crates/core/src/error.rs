use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported derivative order {0} (expected 0, 1 or 2)")]
    UnsupportedOrder(u32),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("support solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian in support solver at A={a}, B={b}")]
    SingularJacobian { a: f64, b: f64 },

    #[error("index {k} out of range 1..={n}")]
    IndexOutOfRange { k: usize, n: usize },

    #[error("eigensolver exceeded {0} iterations")]
    EigenNoConvergence(usize),

    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),

    #[error("chain {chain}: {source}")]
    Chain {
        chain: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("MALA acceptance rate {0:.4} below 0.05 after adaptation")]
    LowAcceptance(f64),

    #[error("non-finite gradient during MALA sweep")]
    NonFiniteGradient,

    #[error("evaluation point {z} collides with an eigenvalue")]
    Collision { z: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("oracle refinement disagreement: coarse {coarse}, fine {fine}")]
    Refinement { coarse: String, fine: String },

    #[error("oracle truncation too small: boundary/peak density ratio {0:e}")]
    Truncation(f64),

    #[error("underpowered experiment: {got} samples, need at least {need}")]
    Underpowered { got: usize, need: usize },

    #[error("invalid experiment input: {0}")]
    InvalidInput(String),

    #[error("cache corruption in {path}: {reason}")]
    CacheCorrupt { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
