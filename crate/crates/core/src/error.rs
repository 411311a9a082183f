use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("index {index:?} is not an interior node of the mesh")]
    NotInterior { index: Vec<usize> },

    #[error("flat index {0} out of range")]
    FlatIndex(usize),

    #[error("axis index {index} out of range for dimension {dim}")]
    AxisIndex { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid fitted flux input: {0}")]
    FittedInput(String),

    #[error("invalid control set: {0}")]
    ControlSet(String),

    #[error("invalid parameters: {0}")]
    Parameters(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
