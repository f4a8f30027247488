use thiserror::Error;

/// Errors produced by construction, validation, solving, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix is not Hermitian: adjoint residual {residual:.3e} exceeds {tol:.1e}")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("operator is not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    NotPsd { min_eig: f64 },

    #[error("trace is {trace:.12}, expected {expected}")]
    BadTrace { trace: f64, expected: f64 },

    #[error("ket is not normalized: norm {norm:.12}")]
    NotNormalized { norm: f64 },

    #[error("POVM effects do not sum to identity: residual {residual:.3e}")]
    IncompletePovm { residual: f64 },

    #[error("not a valid probability distribution: {0}")]
    BadDistribution(String),

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("Kraus operators violate the completeness relation: residual {residual:.3e}")]
    NotCptp { residual: f64 },

    #[error("invalid Choi matrix: {0}")]
    BadChoi(String),

    #[error("invalid SDP expression: {0}")]
    BadExpression(String),

    #[error("SDP solve failed: {0}")]
    Solver(String),

    #[error("eigenvalue iteration failed to converge")]
    EigFailed,

    #[error("problem size exceeds the supported limit: {0}")]
    SizeLimit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
