use thiserror::Error;

use crate::one_pole::GroundStateProfile;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("degenerate basis: resolution {0} is below 8")]
    DegenerateBasis(usize),
    #[error("first eigenvalue not simple or eigenfunction not positive (gap {gap:e})")]
    SpectralDegeneracy { gap: f64 },
    #[error("mu1 = {mu1} is not above the Hardy threshold {floor}")]
    SubcriticalEigenvalue { mu1: f64, floor: f64 },
    #[error("root not bracketed on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },
    #[error("direction has norm {0}, expected 1")]
    NonUnitDirection(f64),
    #[error("invalid angular coefficient: {0}")]
    InvalidCoefficient(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Option<Box<GroundStateProfile>>,
    },
    #[error("window fit residual {0:e} exceeds 1e-3")]
    WindowTooNoisy(f64),
    #[error("translation ln(mu) = {0} outside the supported range")]
    TranslationOutOfRange(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature node coincides with pole {0}")]
    SingularNode(usize),
    #[error("mesh failure: {0}")]
    MeshFailure(String),
    #[error("profile is not attained")]
    ProfileNotAttained,
    #[error("configuration is not axisymmetric: {0}")]
    NotAxisymmetric(String),
    #[error("level inputs must be positive")]
    NonPositiveLevel,
    #[error("quadrature error estimate {0:e} exceeds the budget")]
    QuadratureBudgetExceeded(f64),
    #[error("best model {best} disagrees with regime {dictated} (factor {factor})")]
    RegimeMismatch {
        dictated: String,
        best: String,
        factor: f64,
    },
    #[error("integrand not integrable: 2 sigma + N - 2 = {0} >= 2")]
    NotIntegrable(f64),
    #[error("cut-off geometry: {0}")]
    CutoffGeometry(String),
    #[error("evaluation point lies on the density support boundary")]
    EvaluationAtSingularDensityNode,
    #[error("missing level: {0}")]
    MissingLevel(String),
    #[error("dipole strengths must be positive")]
    NonPositiveStrength,
    #[error("domain is unbounded")]
    DomainUnbounded,
    #[error("grid is not mirror symmetric")]
    AsymmetricGrid,
    #[error("schema violation at {path}: {message}")]
    SchemaViolation {
        path: String,
        line: usize,
        col: usize,
        message: String,
    },
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
