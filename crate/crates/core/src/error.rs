use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("degenerate boundary: {0}")]
    DegenerateBoundary(String),

    #[error("point ({x}, {y}) lies outside the domain beyond the clamp tolerance")]
    PointOutsideDomain { x: f64, y: f64 },

    #[error("density value {value} at node {index} is not strictly positive")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("bad density grid file: {0}")]
    BadGridFile(String),

    #[error("linear solver failed: {0}")]
    SolverDiverged(String),

    #[error("orthogonality constraint cannot be enforced (|<psi_p, c>| = {particular:e}, |<psi_h, c>| = {homogeneous:e})")]
    DegenerateConstraint { particular: f64, homogeneous: f64 },

    #[error("membership residual {achieved:e} exceeds tolerance {tol:e}")]
    ToleranceNotMet { achieved: f64, tol: f64 },

    #[error("areas differ: source {source_area}, target {target_area}")]
    AreaMismatch { source_area: f64, target_area: f64 },

    #[error("step violates CFL bound: dt*max|v| = {displacement:e} > {limit:e}")]
    CflViolation { displacement: f64, limit: f64 },

    #[error("line search found no decrease (interior residual {interior_res:e}, boundary residual {boundary_res:e})")]
    LineSearchFailed { interior_res: f64, boundary_res: f64 },

    #[error("bad snapshot: {0}")]
    BadSnapshot(String),

    #[error("bad configuration: {0}")]
    BadConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::UnsupportedDomain(_)
                | Error::DegenerateBoundary(_)
                | Error::NonPositiveDensity { .. }
                | Error::BadGridFile(_)
                | Error::AreaMismatch { .. }
                | Error::BadSnapshot(_)
                | Error::BadConfig(_)
        )
    }
}
