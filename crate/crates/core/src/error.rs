use num_complex::Complex64 as C64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank-deficient frame (relative smallest singular value {0:e})")]
    RankDeficient(f64),

    #[error("form matrix is not skew-adjoint (defect {0:e})")]
    NotSkewAdjoint(f64),

    #[error("form matrix is singular")]
    SingularForm,

    #[error("signature obstruction: iΩ has {positive} positive and {negative} negative eigenvalues, no Lagrangian subspaces exist")]
    SignatureObstruction { positive: usize, negative: usize },

    #[error("frame is not Lagrangian (isotropy defect {defect:e}, dimension {dim} of {ambient})")]
    NotLagrangian { defect: f64, dim: usize, ambient: usize },

    #[error("path undersampled on [{t0}, {t1}]: refinement budget exhausted")]
    Undersampled { t0: f64, t1: f64 },

    #[error("degenerate endpoint at t = {t} and no endpoint convention selected")]
    DegenerateEndpoint { t: f64 },

    #[error("{what} disagree: {detail}")]
    MethodDisagreement { what: &'static str, detail: String },

    #[error("eigenvalue tracking failed on [{t0}, {t1}]: refinement budget exhausted")]
    TrackingBudget { t0: f64, t1: f64 },

    #[error("eigenvalue locator returned a non-real value {0}")]
    NonRealEigenvalue(f64),

    #[error("eigenvalue branch identically zero on [{t0}, {t1}]")]
    ZeroBranch { t0: f64, t1: f64 },

    #[error("degenerate crossing near t = {t} not resolved by the eigenvalue shift")]
    UnresolvedCrossing { t: f64 },

    #[error("spectral margin violation: eigenvalue {eigenvalue} lies within {margin:e} of the imaginary axis")]
    MarginViolation { eigenvalue: C64, margin: f64 },

    #[error("contour quadrature did not converge within {nodes} nodes per side (last difference {difference:e})")]
    QuadratureBudget { nodes: usize, difference: f64 },

    #[error("invariant-subspace similarity too ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step control failure at x = {x} (step {step:e})")]
    StepControl { x: f64, step: f64 },

    #[error("coefficient J(x) not invertible or too ill-conditioned at x = {x} (condition number {condition:e})")]
    SingularSymbol { x: f64, condition: f64 },

    #[error("system is not formally symmetric (defect {0:e})")]
    NotSymmetric(f64),

    #[error("coupling fails positivity of J0*T at x = {endpoint} (smallest eigenvalue {min_eigenvalue:e})")]
    CouplingNotPositive { endpoint: f64, min_eigenvalue: f64 },

    #[error("invertible double degenerate (bookkeeping suspect): sigma_min = {0:e}")]
    DoubleDegenerate(f64),

    #[error("Cauchy data spaces not transversal (sigma_min = {0:e})")]
    NotTransversal(f64),

    #[error("ambiguous eigenvalue classification: {0} is neither clearly imaginary nor clearly off the axis")]
    AmbiguousClassification(C64),

    #[error("spectral window too small: {0}")]
    WindowTooSmall(String),

    #[error("eigenvalue cluster near {0} could not be resolved")]
    UnresolvedCluster(f64),

    #[error("linear solve failed: {0}")]
    SingularSolve(&'static str),
}
