use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("metaimage header: {0}")]
    Header(String),

    #[error("unsupported element type `{0}`")]
    UnsupportedElementType(String),

    #[error("payload has {actual} bytes, expected {expected}")]
    PayloadLength { expected: usize, actual: usize },

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("probability value {value} at index {index} is outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f32 },

    #[error("label value {value} at index {index} is not binary")]
    NonBinaryLabel { index: usize, value: f32 },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("invalid roi: {0}")]
    InvalidRoi(String),

    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    #[error("samples are degenerate (zero variance)")]
    DegenerateSamples,

    #[error("mask is empty")]
    EmptyMask,

    #[error("mask has {0} connected components, expected exactly one")]
    MultipleComponents(usize),

    #[error("mask component has {0} voxels, need at least 8")]
    ComponentTooSmall(usize),

    #[error("mesh is not closed: {0}")]
    OpenMesh(String),

    #[error("electric field vanishes at query point")]
    ZeroField,

    #[error("column tracing produced a non-finite position at vertex {vertex}")]
    TracingFailure { vertex: usize },

    #[error("capacity overflow while scaling costs to integers")]
    CapacityOverflow,

    #[error("closed set misses column {column}")]
    EmptyColumnInCut { column: usize },

    #[error("solution violates the smoothness bound between columns {a} and {b}")]
    SmoothnessViolation { a: usize, b: usize },

    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),

    #[error("cut mesh is degenerate: {voxels} voxels have winding number outside [-0.5, 1.5]")]
    DegenerateCutMesh { voxels: usize },

    #[error("zero variance in paired differences")]
    ZeroVariance,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid phantom: {0}")]
    InvalidPhantom(String),

    #[error("distractor overlaps the main shape (gap {gap_mm:.3} mm < 2 mm)")]
    DistractorOverlap { gap_mm: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from caller-supplied data rather than a
    /// failure inside the algorithms.
    pub fn is_bad_input(&self) -> bool {
        !matches!(
            self,
            Error::ZeroField
                | Error::TracingFailure { .. }
                | Error::CapacityOverflow
                | Error::EmptyColumnInCut { .. }
                | Error::SmoothnessViolation { .. }
                | Error::DegenerateCutMesh { .. }
                | Error::OpenMesh(_)
        )
    }
}
