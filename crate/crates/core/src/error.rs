use thiserror::Error;

/// Errors raised by problem construction, the solver pipeline and certification.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interpolation problem: {0}")]
    InvalidProblem(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("problem too large: size {size} exceeds limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("Lyapunov solve did not converge (residual {residual:.3e})")]
    NonConvergent { residual: f64 },

    #[error("W + I/2 is numerically singular (condition {condition:.3e})")]
    SingularNormalization { condition: f64 },

    #[error("I - lambda*T is singular at lambda = {lambda}")]
    PathSingular { lambda: f64 },

    #[error("Pick matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    Infeasible { min_eig: f64 },

    #[error("{}", singular_l_message(*.condition, *.unequal_indices))]
    SingularL { condition: f64, unequal_indices: bool },

    #[error("operation requires equal observability indices")]
    UnequalIndices,

    #[error("matrix polynomial A is not Schur stable")]
    UnstableA,

    #[error("prior Sigma is not Schur stable")]
    UnstableSigma,

    #[error("spectral factor is not stable")]
    UnstableFactor,

    #[error("path tracking failed: step {step:.3e} below floor at lambda = {lambda:.6}")]
    StepCollapse { lambda: f64, step: f64 },

    #[error("path tracking exceeded {max_steps} steps at lambda = {lambda:.6}")]
    MaxSteps { lambda: f64, max_steps: usize },

    #[error("corrector Jacobian singular at lambda = {lambda:.6} (condition {condition:.3e})")]
    JacobianSingular { lambda: f64, condition: f64 },

    #[error("PH' deviates from the tracked p by {deviation:.3e}")]
    InconsistentP { deviation: f64 },

    #[error("P is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("I - HPH' is not positive definite (min eigenvalue {min_eig:.3e})")]
    Saturated { min_eig: f64 },

    #[error("[e V] basis is singular")]
    SingularBasis,

    #[error("ground-truth rejection sampling exhausted after {draws} draws")]
    RejectionExhausted { draws: usize },

    #[error("insufficient data: {samples} samples for {lags} lags")]
    InsufficientData { samples: usize, lags: usize },

    #[error("linear system is singular: {0}")]
    Singular(&'static str),

    #[error("format error: {0}")]
    Format(String),
}

fn singular_l_message(condition: f64, unequal: bool) -> String {
    if unequal {
        format!("L singular: unequal observability indices (condition {condition:.3e})")
    } else {
        format!("L singular: degenerate node set (condition {condition:.3e})")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
