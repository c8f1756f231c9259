use thiserror::Error;

use crate::mesh::{EdgeId, Slot, TriangleId, VertexId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // combinatorics
    #[error("slot {0} is not matched by exactly one gluing")]
    UnmatchedSlot(Slot),
    #[error("glued slots {0} and {1} do not carry reversed vertex labels")]
    OrientationMismatch(Slot, Slot),
    #[error("vertex-edge incidence graph is disconnected")]
    DisconnectedSurface,
    #[error("vertex {0} is not a corner of any triangle")]
    UnusedVertex(VertexId),
    #[error("vertex id {vertex} out of range (num_vertices = {num_vertices})")]
    VertexOutOfRange { vertex: usize, num_vertices: usize },
    #[error("triangle id {0} out of range")]
    TriangleOutOfRange(usize),
    #[error("edge id {0} out of range")]
    EdgeOutOfRange(EdgeId),
    #[error("link of vertex {0} is not a single cycle")]
    NonManifoldVertex(VertexId),
    #[error("vertex pair ({0}, {1}) bounds {2} triangle slots, expected exactly 2")]
    NonSimplicial(VertexId, VertexId, usize),
    #[error("edge {0} is incident to the same triangle on both sides; flip undefined")]
    SelfFlip(EdgeId),

    // metric data
    #[error("radius of vertex {vertex} is not a positive finite number ({value})")]
    NonPositiveRadius { vertex: VertexId, value: f64 },
    #[error("length of edge {edge} is not a positive finite number ({value})")]
    NonPositiveLength { edge: EdgeId, value: f64 },
    #[error("inversive distance {value} on edge {edge} must exceed -1")]
    InvalidInversiveDistance { edge: EdgeId, value: f64 },
    #[error("inversive distance {value} on edge {edge} must exceed 1 for initial (r, I) data")]
    InversiveDistanceOutOfRange { edge: EdgeId, value: f64 },
    #[error("conformal change degenerates edge {edge} (squared length {value})")]
    DegenerateLength { edge: EdgeId, value: f64 },
    #[error("conformal factor of vertex {0} is not finite")]
    NonFiniteConformalFactor(VertexId),
    #[error("triangle {triangle:?} violates the strict triangle inequality")]
    DegenerateTriangle { triangle: Option<TriangleId> },
    #[error("metric is not admissible: triangle {triangle} has relative margin {margin:e}")]
    NonAdmissibleMetric { triangle: TriangleId, margin: f64 },
    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    // geometry
    #[error("radical center system is singular (collinear corners)")]
    SingularSystem,
    #[error("vertex circles of edge {edge:?} overlap; half-chord is imaginary")]
    ImaginaryChord { edge: Option<EdgeId> },

    // surgery
    #[error("flipping edge {0} does not produce two nondegenerate triangles")]
    FlipProducesDegenerate(EdgeId),
    #[error("surgery exceeded the flip budget of {0}")]
    SurgeryBudgetExceeded(usize),

    // operators
    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("exponent p = {0} must exceed 1")]
    InvalidExponent(f64),
    #[error("Jacobian has a negative eigenvalue {0:e}")]
    IndefiniteJacobian(f64),
    #[error("finite-difference step leaves the admissible space at vertex {0}")]
    StepLeavesAdmissible(VertexId),

    // flow
    #[error("target curvature is not admissible: {0}")]
    NonAdmissibleTarget(String),
    #[error("step {step} collapsed after exhausting step halvings: {reason}")]
    StepCollapse { step: usize, reason: String },
    #[error("step {step}: edge {edge} violates the weighted Delaunay condition with surgery disabled")]
    LeftDelaunayCell { step: usize, edge: EdgeId },
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),

    // io
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Attaches a triangle id to geometry errors raised by the pure kernels.
    pub(crate) fn at_triangle(self, t: TriangleId) -> Self {
        match self {
            Error::DegenerateTriangle { triangle: None } => {
                Error::DegenerateTriangle { triangle: Some(t) }
            }
            other => other,
        }
    }

    pub(crate) fn at_edge(self, e: EdgeId) -> Self {
        match self {
            Error::ImaginaryChord { edge: None } => Error::ImaginaryChord { edge: Some(e) },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
