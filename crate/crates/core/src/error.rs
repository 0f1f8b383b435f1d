use thiserror::Error;

/// Errors produced by trace generation, injection, training, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("floorplan parse error at line {line}: {msg}")]
    FloorplanParse { line: usize, msg: String },

    #[error("duplicate block name `{0}` in floorplan")]
    DuplicateBlock(String),

    #[error("blocks `{a}` and `{b}` overlap")]
    BlockOverlap { a: String, b: String },

    #[error("floorplan has no blocks")]
    EmptyFloorplan,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("conductance system is singular or not positive definite")]
    SingularSystem,

    #[error("steady-state solve residual {residual:e} exceeds tolerance")]
    SolveResidual { residual: f64 },

    #[error("victim core index {victim} out of range for {cores} cores")]
    VictimOutOfRange { victim: usize, cores: usize },

    #[error("trace has {trace} samples but mask has {mask}")]
    MaskLengthMismatch { trace: usize, mask: usize },

    #[error("dataset is degenerate: class `{class}` has {count} samples (need at least 2)")]
    DegenerateClass { class: String, count: usize },

    #[error("training data contains a single class")]
    SingleClassTraining,

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },

    #[error("rank-deficient regression for core `{core}`")]
    RankDeficient { core: String },

    #[error("empty confusion matrix")]
    EmptyConfusion,

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("sweep cell ({context}) failed: {source}")]
    Cell {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Attach sweep-cell context to an error.
    pub fn in_cell(self, context: String) -> Error {
        Error::Cell {
            context,
            source: Box::new(self),
        }
    }
}
