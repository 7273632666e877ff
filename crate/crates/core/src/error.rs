use thiserror::Error;

/// Errors raised by domain construction, grid building and the flow solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain specification: {0}")]
    InvalidSpec(String),

    #[error("boundary is not strictly convex: min curvature {kappa_min:e} at theta = {theta}")]
    NotStrictlyConvex { kappa_min: f64, theta: f64 },

    #[error("radial function is not positive: min R = {r_min:e} at theta = {theta}")]
    NonPositiveRadius { r_min: f64, theta: f64 },

    #[error("grid resolution too low: {0}")]
    ResolutionTooLow(String),

    #[error("field has no ghost row; close the boundary before differentiating")]
    MissingGhostRow,

    #[error("field shape {found:?} does not match grid shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("spacelike condition lost at node (j={j}, k={k}), t = {t}: 1 - |Du|^2 = {margin:e}")]
    SpacelikeLost {
        j: usize,
        k: usize,
        t: f64,
        margin: f64,
    },

    #[error("boundary tangential slope |q| = {q} >= 1 at boundary node k={k}")]
    TangentTooSteep { k: usize, q: f64 },

    #[error("non-finite value at node (j={j}, k={k}), t = {t}")]
    NonFinite { j: usize, k: usize, t: f64 },

    #[error("plane slope |a| = {0} is not spacelike (must be < 1)")]
    NotSpacelike(f64),

    #[error("translator shooting failed: {0}")]
    ShootingFailed(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed field snapshot: {0}")]
    Snapshot(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
