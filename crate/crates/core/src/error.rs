use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid manifold description: {0}")]
    InvalidSpec(String),

    #[error("defining function is not circle-invariant: term {term} has weighted degree {degree}")]
    NonInvariant { term: String, degree: i64 },

    #[error("defining function is not real: term {0} has no conjugate partner")]
    NonReal(String),

    #[error("point is off the manifold: residual {residual:e} exceeds tolerance {tolerance:e}")]
    OffManifold { residual: f64, tolerance: f64 },

    #[error("invalid point: all coordinates vanish")]
    OriginPoint,

    #[error("singular point: |dρ| = {0:e}")]
    SingularPoint(f64),

    #[error("strong pseudoconvexity violated: Levi eigenvalue {eigenvalue:e} at {point}")]
    NotPseudoconvex { eigenvalue: f64, point: String },

    #[error("ray root not bracketed in (0, {t_max}]")]
    RayRoot { t_max: f64 },

    #[error("Gram matrix not positive definite: pivot {pivot} has value {value:e}")]
    RankDeficient { pivot: usize, value: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("undefined ratio: |S_km(x, x0)| = {denominator:e} below {threshold:e}")]
    UndefinedRatio { denominator: f64, threshold: f64 },

    #[error("minimal weight {min_weight} does not exceed m0 = {m0}")]
    MinWeight { min_weight: u32, m0: u32 },

    #[error("cache error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
