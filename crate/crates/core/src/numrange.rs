//! Numerical ranges of finite compressions, inverse numerical-range solving, far-window
//! state search, convex-region geometry and the plank solver.

mod boundary;
mod inverse;
mod plank;
mod region;
mod window;

use num_complex::Complex64;

pub use boundary::{
    numerical_range_boundary, rayleigh, support_points, uniform_angles, BoundaryPolygon, CMatrix, CVector,
    SupportPoint, DEFAULT_ANGLES,
};
pub use inverse::{find_state_with_value, VALUE_TOLERANCE};
pub use plank::{plank_coordinates, plank_vector, PLANK_SLACK};
pub use region::ConvexRegion;
pub use window::{
    find_state_beyond, find_state_in_complement, find_state_in_complement_with, window_start, CompressionWindow, WindowPolicy,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumRangeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("Hermitian eigen-solver did not converge at θ = {theta}")]
    EigenFailure { theta: f64 },
    #[error("λ = {lambda} is within {margin:.3e} of leaving the range (supporting line at θ = {theta:.6} leaves gap {gap:.3e})")]
    OutsideRange {
        lambda: Complex64,
        theta: f64,
        gap: f64,
        margin: f64,
    },
    #[error("could not certify λ = {lambda} inside the range after {angles} support angles")]
    NotCertified { lambda: Complex64, angles: usize },
    #[error("state search stalled with value error {error:.3e}")]
    BisectionStall { error: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no far window up to length {max_length} (start {start}) certifies λ = {lambda}: {last}")]
    WindowCapExceeded {
        lambda: Complex64,
        start: usize,
        max_length: usize,
        last: String,
    },
    #[error("plank solver fell short by {worst_gap:.3e}")]
    PlankFailure { worst_gap: f64 },
}
