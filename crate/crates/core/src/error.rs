use thiserror::Error;

/// Crate-wide error type. Variants are grouped by the module that raises them
/// and every message is prefixed with that module's name.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("geometry: polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("geometry: polygon is not strictly convex at vertex {0}")]
    NonConvex(usize),
    #[error("geometry: degenerate edge at vertex {0} (duplicate vertex)")]
    DegenerateEdge(usize),
    #[error("geometry: point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),
    #[error("geometry: corner index {index} out of range for {len} corners")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("geometry: cannot parse polygon file: {0}")]
    PolygonParse(String),

    #[error("fields: resolution too coarse ({interior} interior nodes, need at least {required})")]
    ResolutionTooCoarse { interior: usize, required: usize },
    #[error("fields: ball of radius {r} at ({x}, {y}) is not contained in the domain")]
    BallNotContained { x: f64, y: f64, r: f64 },
    #[error("fields: ring decrement is not monotone in the radius (jump {jump:.3e} at r = {r})")]
    NonMonotoneSequence { r: f64, jump: f64 },
    #[error("fields: invalid field: {0}")]
    InvalidField(String),
    #[error("fields: cannot parse field dump: {0}")]
    DumpParse(String),
    #[error("fields: invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver: Rayleigh quotient has zero denominator")]
    ZeroDenominator,
    #[error("eigensolver: non-finite value encountered at iteration {0}")]
    NonFiniteEncountered(usize),
    #[error("eigensolver: invalid ladder: {0}")]
    InvalidLadder(String),
    #[error("eigensolver: no nodes below level c = {0}")]
    EmptyRegion(f64),
    #[error("eigensolver: linear system is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),

    #[error("infinity: ladder too short ({0} rungs, need 2)")]
    LadderTooShort(usize),
    #[error("infinity: fields live on different grids")]
    GridMismatch,

    #[error("streamlines: start point ({0}, {1}) is outside the domain")]
    StartOutside(f64, f64),
    #[error("streamlines: start point ({0}, {1}) lies on the high ridge")]
    StartOnRidge(f64, f64),
    #[error("streamlines: corner seed for corner {0} falls outside the domain")]
    SeedOutside(usize),
    #[error("streamlines: arc has no event point")]
    NoEvent,

    #[error("analysis: quadrilateral violates the clearance requirement ({0})")]
    ClearanceViolated(String),
    #[error("analysis: quadrilateral construction failed: {0}")]
    QuadConstructionFailed(String),

    #[error("cli: invalid configuration: {0}")]
    Config(String),
    #[error("cli: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
