use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("eigenvalues of ΩV do not form ±iν pairs (mismatch {mismatch:e})")]
    NonPairedSpectrum { mismatch: f64 },

    #[error("mode index {index} out of range for a {n_modes}-mode state")]
    IndexOutOfRange { index: usize, n_modes: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("state is unphysical: smallest symplectic eigenvalue {min_nu} < 1/2")]
    UnphysicalState { min_nu: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("decoherence time is undefined at zero temperature")]
    ZeroTemperature,

    #[error("mean-field equation has no positive root")]
    NoPositiveRoot,

    #[error("mean fields violate the real-a_F gauge (Im a_F = {imag:e})")]
    GaugeViolation { imag: f64 },

    #[error(
        "spectral and Routh-Hurwitz stability verdicts disagree \
         (max Re λ = {max_real:e}, Hurwitz pass = {hurwitz})"
    )]
    InconsistentVerdicts { max_real: f64, hurwitz: bool },

    #[error("drift matrix is not stable (max Re λ = {max_real:e})")]
    UnstableSystem { max_real: f64 },

    #[error("Lyapunov operator is numerically singular")]
    SingularSystem,

    #[error("drift matrix is numerically singular")]
    SingularDrift,

    #[error("inferred reduction is unphysical: ν = {nu} < 1/2")]
    UnphysicalReduction { nu: f64 },

    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
}
