use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("cyclic group order must be at least 1")]
    ZeroOrder,
    #[error("dihedral group requires p >= 2, got {0}")]
    DihedralTooSmall(usize),
    #[error("group order {order} exceeds the configured limit {limit}")]
    OrderLimit { order: usize, limit: usize },
    #[error("element index {index} out of range for group of order {order}")]
    BadElement { index: usize, order: usize },
    #[error("cannot compose an empty sequence")]
    EmptySequence,
    #[error("malformed group spec {0:?} (expected factors like C5, D3 joined by 'x')")]
    Parse(String),
    #[error("invalid multiplication table: {0}")]
    InvalidTable(String),
}

#[derive(Debug, Error)]
pub enum HarmonicError {
    #[error("signal length {got} does not match group order {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("block {index} has shape {got:?}, expected {expected}x{expected}")]
    BlockShape { index: usize, expected: usize, got: (usize, usize) },
    #[error("expected {expected} Fourier blocks, got {got}")]
    BlockCount { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
    #[error("the trivial irrep coefficient must be zero for a mean-centered encoding")]
    NonzeroTrivial,
    #[error("encoding vector is not real (max imaginary part {0:e}); conjugate irreps need matching coefficients")]
    NonReal(f64),
    #[error("encoding vector is identically zero")]
    Degenerate,
    #[error("unknown irrep name {0:?}")]
    UnknownIrrep(String),
    #[error("sequence length must be at least 2, got {0}")]
    SequenceTooShort(usize),
    #[error("exhaustive dataset would have {rows} rows, above the cap {cap}")]
    TooManyRows { rows: u128, cap: u128 },
}

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("Fourier block of irrep {0} is singular; the construction needs it invertible")]
    SingularBlock(String),
    #[error("half-sum Waring scheme requires the pure monomial activation")]
    HalfSumNeedsMonomial,
    #[error("degree must be at least 2, got {0}")]
    DegreeTooSmall(usize),
    #[error("sequence length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("rescaled flow is only defined for two-layer networks")]
    RescaledFlowArchitecture,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}
