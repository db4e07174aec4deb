use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice edge vectors are (nearly) linearly dependent: |det| = {det:e}")]
    DegenerateLattice { det: f64 },

    #[error("Bloch vector must be nonzero")]
    ZeroBlochVector,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("icosphere subdivision level {0} exceeds the maximum of 6")]
    SubdivisionTooLarge(usize),

    #[error("mesh parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("surface is open: edge ({0}, {1}) belongs to a single face")]
    OpenSurface(usize, usize),

    #[error("inconsistent face orientation at edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),

    #[error("faces are oriented inward (enclosed volume {volume:e} < 0); reload with auto-flip")]
    InvertedOrientation { volume: f64 },

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("mesh has {panels} panels; dense assembly is limited to {limit}")]
    MeshTooLarge { panels: usize, limit: usize },

    #[error("boundary integral system is singular or inaccurate (relative residual {residual:e})")]
    SingularSystem { residual: f64 },

    #[error("direction is not a unit vector (|d| = {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("argument outside the function domain: {0}")]
    DomainError(String),

    #[error("k+R = {kr} is resonant: |j0| = {j0:e}, |j1| = {j1:e}")]
    ResonantRadius { kr: f64, j0: f64, j1: f64 },

    #[error("ball constants disagree between the two Bessel expressions (relative {0:e})")]
    InconsistentBallConstants(f64),

    #[error("quadrature order {0} outside [2, 64]")]
    OrderOutOfRange(usize),

    #[error("polarizability tensor asymmetry {defect:e} exceeds tolerance {tolerance:e}")]
    AsymmetricTensor { defect: f64, tolerance: f64 },

    #[error("volume fraction {0} is outside the asymptotic regime (f < 0.1)")]
    VolumeFractionTooLarge(f64),

    #[error("mismatched inputs: {0}")]
    MismatchedInputs(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
