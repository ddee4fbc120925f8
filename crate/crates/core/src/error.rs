use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("element inversion: triangle {triangle} has signed area {area:e}")]
    ElementInversion { triangle: usize, area: f64 },

    #[error("mesh file, line {line}: {message}")]
    MeshFormat { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing input: {0}")]
    MissingInput(&'static str),

    #[error("meshes are not in the same refinement hierarchy")]
    NotInHierarchy,

    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("no admissible step after {0} backtracks")]
    MaxBacktracks(usize),

    #[error("refinement cap of {0} levels reached before the data tolerance was met")]
    RefinementCap(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
