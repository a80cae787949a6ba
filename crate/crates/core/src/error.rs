use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate sample system: nodes {first} and {second} coincide")]
    CoincidentNodes { first: usize, second: usize },

    #[error("ill-conditioned sample system: |W·P - I|_max = {residual:e}")]
    Conditioning { residual: f64 },

    #[error("zero-lag correlation sum is not real (imaginary part {imag:e})")]
    ComplexPower { imag: f64 },

    /// The leading Laurent coefficient vanished. A flat pattern has no
    /// spectral factor other than a unit vector, so there is nothing to
    /// factor.
    #[error(
        "perfect broadbeam is impossible: leading coefficient {leading:e} is zero \
         (a flat pattern admits only single-antenna unit vectors)"
    )]
    PerfectBroadbeam { leading: f64 },

    #[error("ripple profile yields a negative spectrum (min {min:e}); increase harmonic order or reduce xi")]
    NegativeSpectrum { min: f64 },

    #[error(
        "root finder failed after {iterations} iterations (max step {max_step:e}, residual {residual:e})"
    )]
    RootFinder {
        iterations: usize,
        max_step: f64,
        residual: f64,
    },

    #[error("roots are not conjugate-reciprocal: best partner distance {distance:e} exceeds {tolerance:e}")]
    Pairing { distance: f64, tolerance: f64 },

    #[error("internal consistency: {0}")]
    Internal(String),
}
