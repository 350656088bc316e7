use thiserror::Error;

/// Errors raised by the numerical kernels and field containers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for rank-{rank} grid")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("expected a rank-{expected} grid, got rank {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("component count mismatch: expected {expected}, got {found}")]
    ComponentMismatch { expected: usize, found: usize },

    #[error("non-finite sample at site {site}")]
    NonFinite { site: usize },

    #[error("norm {norm:e} below zero threshold at site {site}; exclude the site or re-grid")]
    Normalization { site: usize, norm: f64 },

    #[error("spinor is not normalized at site {site} (|psi|^2 = {norm_sq})")]
    NotNormalized { site: usize, norm_sq: f64 },

    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("not an SU(2) element at site {site} (unitarity residual {unitarity:e}, det residual {det:e})")]
    NotSu2 { site: usize, unitarity: f64, det: f64 },

    #[error("sigma-model field has imaginary residue {residue:e} at site {site}")]
    ImaginaryResidue { site: usize, residue: f64 },

    #[error("reconstruction residual {residual:e} exceeds tolerance {tolerance:e}")]
    Reconstruction { residual: f64, tolerance: f64 },

    #[error("Abelian exactness residual {residual:e} exceeds bound {bound:e}")]
    Exactness { residual: f64, bound: f64 },

    #[error("gauge potential required for the trace method")]
    MissingGauge,

    #[error("derivative jet required: {0}")]
    MissingJet(&'static str),

    #[error("singular matrix (det = {0:e})")]
    Singular(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zeros {first} and {second} are closer than one grid spacing; refine the grid")]
    GridTooCoarse { first: usize, second: usize },

    #[error("sphere of radius {radius} around zero {zero} contains another zero")]
    SphereNotIsolated { zero: usize, radius: f64 },

    #[error("surface degree {value} has rounding deviation {deviation} (resolution too low)")]
    DegreeResolution { value: f64, deviation: f64 },

    #[error("surface degree {degree} disagrees with Jacobian sign {jacobian_sign} at a regular zero")]
    InconsistentDegree { degree: i64, jacobian_sign: i64 },

    #[error("sample point outside the grid")]
    OutsideDomain,

    #[error(transparent)]
    Io(#[from] crate::io::FieldIoError),
}

pub type Result<T> = std::result::Result<T, Error>;
