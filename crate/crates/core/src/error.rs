use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial degree must be at least 1, got {0}")]
    InvalidDegree(usize),

    #[error("index {index} out of range for degree {degree}")]
    IndexOutOfRange { index: usize, degree: usize },

    #[error("point ({0}, {1}) lies outside the reference square")]
    OutsideReferenceElement(f64, f64),

    #[error("expected {expected} nodal values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("normal vector has zero length")]
    ZeroNormal,

    #[error("characteristic interface system is singular")]
    SingularInterface,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("element {element} has non-positive Jacobian {jacobian:e} at node {node}")]
    InvertedElement {
        element: usize,
        node: usize,
        jacobian: f64,
    },

    #[error("boundary data is not finite at ({x}, {y}), t = {t}")]
    BoundaryData { x: f64, y: f64, t: f64 },

    #[error("solution became non-finite at t = {time} (last finite state at t = {last_good})")]
    NonFinite { time: f64, last_good: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("mesh file parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("run file parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
