use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-convex support function: convexity margin {margin:.6e}")]
    NonConvexSupport { margin: f64 },

    /// `h + h''` is not positive at normal angle `s`.
    #[error("curvature singularity at s = {s:.6}: h + h'' = {margin:.6e}")]
    SupportSingularity { s: f64, margin: f64 },

    #[error("curvature singularity at marker {index}: K = {curvature:.6e}")]
    CurvatureSingularity { index: usize, curvature: f64 },

    #[error("degenerate geometry at marker {index}: coincident neighbours")]
    DegenerateGeometry { index: usize },

    #[error("arrival-time horizon exceeded: point needs t > {t_max}")]
    HorizonExceeded { t_max: f64 },

    #[error("point lies inside the critical set")]
    InsideCriticalSet,

    #[error("root finding did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
