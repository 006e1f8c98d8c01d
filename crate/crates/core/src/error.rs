use thiserror::Error;

/// Errors raised by the symplectic optimization kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("half-dimension must be at least 1, got {0}")]
    InvalidDim(usize),

    #[error("expected a square matrix of even size, got {rows}x{cols}")]
    NotEvenSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    DimensionMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix is not symplectic: residual {residual:e} exceeds tolerance {tol:e}")]
    NotSymplectic { residual: f64, tol: f64 },

    #[error("matrix is not J-symmetric: residual {residual:e}")]
    NotJSymmetric { residual: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("S + 2J is numerically singular (pivot ratio {ratio:e}); shrink the step")]
    SingularPencil { ratio: f64 },

    #[error("Sylvester solve failed (condition estimate {condition:e})")]
    SylvesterFailed { condition: f64 },

    #[error("Sylvester solution is not skew-symmetric (residual {residual:e})")]
    SylvesterNotSkew { residual: f64 },

    #[error("degenerate point: Gram matrix condition number {condition:e} exceeds 1e12")]
    DegeneratePoint { condition: f64 },

    #[error("constraint index ({i}, {j}) out of range for {kind:?} with n = {n}")]
    ConstraintIndex {
        kind: crate::manifold::ConstraintKind,
        i: usize,
        j: usize,
        n: usize,
    },

    #[error("operation requires n = 1, got n = {0}")]
    RequiresN1(usize),

    #[error("point is not critical (residual {residual:e})")]
    NotCritical { residual: f64 },

    #[error("random generation failed after {attempts} attempts (seed {seed})")]
    GenerationFailed { attempts: usize, seed: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix JSON: {0}")]
    MatrixJson(String),
}

pub type Result<T> = std::result::Result<T, Error>;
