use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("unknown catalog metric `{0}`")]
    UnknownCatalog(String),

    #[error("parameter error for `{name}`: {message}")]
    Parameter { name: String, message: String },

    #[error("variable index {index} out of range 1..={n}")]
    VariableIndex { index: usize, n: usize },

    #[error("metric fails |ζ|²-homogeneity: max relative residual {residual:.3e}")]
    NotHomogeneous { residual: f64 },

    #[error("expression is not real-valued: |Im| = {imag:.3e} at a sample point")]
    NotReal { imag: f64 },

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("point outside metric domain: {0}")]
    DomainViolation(String),

    #[error("tangent vector must be nonzero")]
    ZeroTangent,

    #[error("fundamental tensor not positive definite (min eigenvalue {min_eig:.3e})")]
    NotStronglyConvex { min_eig: f64 },

    #[error("Levi matrix not positive definite (min eigenvalue {min_eig:.3e})")]
    NotStronglyPseudoconvex { min_eig: f64 },

    #[error("degenerate flag: g(y,y)g(V,V) - g(y,V)^2 = {denom:.3e}")]
    DegenerateFlag { denom: f64 },

    #[error("comparison function pole: t = {t} >= pi/sqrt(lambda) = {pole} for lambda = {lambda}")]
    PoleAt { t: f64, lambda: f64, pole: f64 },

    #[error("geodesic left the coordinate chart at t = {t:.6}")]
    ChartExit { t: f64 },

    #[error("integrator step size fell below the floor at t = {t:.6}")]
    StepSizeFloor { t: f64 },

    #[error("conjugate point at t = {t_star:.8} reached before radius {r}")]
    ConjugateReached { t_star: f64, r: f64 },

    #[error("Jacobi matrix ill-conditioned at r = {r}: condition {cond:.3e}")]
    IllConditioned { r: f64, cond: f64 },

    #[error("boundary value solver did not converge after {starts} starts")]
    NoConvergence { starts: usize },

    #[error("metric is not Kahler along the path: strong residual {residual:.3e}")]
    KahlerHypothesisViolated { residual: f64 },

    #[error("measure density must be positive, got {0:.3e}")]
    NonPositiveMeasure(f64),

    #[error("Monte-Carlo variance too high: relative sigma {sigma:.3e}; increase the sample budget")]
    McVarianceTooHigh { sigma: f64 },

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("hypothesis unverified: {0}")]
    HypothesisUnverified(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
