use thiserror::Error;

/// Errors produced anywhere in the simulation stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("{what} exceeds cap: {got} > {cap}")]
    DimensionCap { what: &'static str, got: usize, cap: usize },

    #[error("non-finite matrix entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("qubit index {index} out of range for {qubits} qubits")]
    IndexOutOfRange { index: usize, qubits: usize },

    #[error("every outcome has probability below {0:e}")]
    DegenerateDistribution(f64),

    #[error("requested measurement branch has zero probability")]
    ZeroProbabilityBranch,

    #[error("invalid Hamiltonian spec: {0}")]
    InvalidSpec(String),

    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),

    #[error("instance too large for exact enumeration: N = {n} > {cap}")]
    TooLargeForExact { n: usize, cap: usize },

    #[error("invalid prover strategy: {0}")]
    InvalidStrategy(String),

    #[error("premise violated: {0}")]
    PremiseViolated(String),

    #[error("encoding is not classical: {0}")]
    NonClassicalEncoding(String),

    #[error("family is missing required states: {0}")]
    MissingStates(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
