use thiserror::Error;

use crate::oracle::StressSummary;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("lattice coordinate ({i}, {j}) is outside the supported range |i|, |j| <= 2^20")]
    CoordinateOutOfRange { i: i64, j: i64 },

    #[error("integer overflow while computing an orientation determinant")]
    Overflow,

    #[error("point ({x}, {y}) lies outside the patch domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("lattice point ({i}, {j}) lies outside the polygon")]
    OutsidePolygon { i: i64, j: i64 },

    #[error("weighted basis sum underflowed at ({x}, {y})")]
    NumericalUnderflow { x: f64, y: f64 },

    #[error("weight {index} must be positive and finite, got {value}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("control point {index} has a non-finite coordinate")]
    NonFiniteControl { index: usize },

    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("operation requires planar control points, got dimension {0}")]
    Dimension(usize),

    #[error("edge index {index} out of range for a polygon with {edges} edges")]
    InvalidEdge { index: usize, edges: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("control assignment is not weakly compatible")]
    NotWeaklyCompatible,

    #[error("invalid triangulation: {0}")]
    InvalidTriangulation(String),

    #[error(
        "certificate and sampling oracle disagree on {} of {} trials",
        .0.disagreements.len(),
        .0.trials.len()
    )]
    CertificateDisagreement(Box<StressSummary>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
