use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the model, spectrum, transfer, flow and pipeline layers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid system: {0}")]
    Invalid(String),

    #[error("uncertainty block {block} has Frobenius norm {norm} above its bound {bound}")]
    Inadmissible { block: usize, norm: f64, bound: f64 },

    #[error("delay offset {index} equals {value}, outside [-{bound}, {bound}]")]
    InadmissibleDelay { index: usize, value: f64, bound: f64 },

    #[error("s = {s} is a pole of the realization")]
    Pole { s: Complex64 },

    #[error("characteristic matrix is not well-posed")]
    NotWellPosed,

    #[error("largest singular value is not simple (gap {gap:e})")]
    Multiplicity { gap: f64 },

    #[error("eigenvalue {lambda} is defective (|xi| = {xi:e})")]
    Defective { lambda: Complex64, xi: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("no sign change on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}")]
    Bracket { a: f64, b: f64, fa: f64, fb: f64 },

    #[error("argument outside the admissible domain: {0}")]
    Domain(String),

    #[error("system is not robustly stable: abscissa {abscissa} reached at delta = {delta:?}")]
    Unstable { abscissa: f64, root: Option<Complex64>, delta: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, Error>;
