use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({row}, {col}) out of range for a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("singular block `{block}`: pivot {pivot:e} at elimination step {step}")]
    SingularBlock {
        block: String,
        step: usize,
        pivot: f64,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate cell {cell}: area {area:e}")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("point ({x}, {y}) is not inside any candidate coarse cell")]
    PointLocation { x: f64, y: f64 },

    #[error("no relaxation patch contains a free degree of freedom")]
    EmptyPatches,

    #[error("power iteration start vector is zero")]
    ZeroStartVector,

    #[error("preconditioner is not positive definite: <z, r> = {value:e} at iteration {iteration}")]
    IndefinitePreconditioner { iteration: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
