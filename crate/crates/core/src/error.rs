use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("factor dimensions {factors:?} do not multiply to {dim}")]
    FactorMismatch { factors: Vec<usize>, dim: usize },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("index {0} listed more than once")]
    DuplicateIndex(usize),

    #[error("bipartition leaves one side empty")]
    EmptyCut,

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("{what} is not normalized (squared norm {norm_sqr})")]
    NotNormalized { what: &'static str, norm_sqr: f64 },

    #[error("{what} is not unitary (max deviation {deviation:e})")]
    NotUnitary { what: &'static str, deviation: f64 },

    #[error("{what} is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { what: &'static str, deviation: f64 },

    #[error("not a valid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid code specification: {0}")]
    InvalidSpec(String),

    #[error("standard errors do not generate an orthonormal basis (max Gram deviation {deviation:e})")]
    NonOrthonormalBasis { deviation: f64 },

    #[error("unknown code `{0}`")]
    UnknownCode(String),

    #[error("state is not in the span of the error-free codewords (weight outside {outside:e})")]
    NotInCodeSpace { outside: f64 },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("corruption is not corrigible (entanglement measure {measure:e})")]
    NotCorrigible { measure: f64 },

    #[error("state does not factor across the logical cut (second Schmidt value {second:e})")]
    NotAProduct { second: f64 },

    #[error("operator is not legal: maps a constraint vector into the legal subspace (residual {residual:e})")]
    NotLegal { residual: f64 },

    #[error("constraint operators belong to different constraint sets")]
    MismatchedConstraintSets,

    #[error("failed to parse {field}: {message}")]
    Parse { field: String, message: String },
}
