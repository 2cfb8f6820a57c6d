use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("need at least {required} observations, got {got}")]
    TooFewObservations { required: usize, got: usize },

    #[error("dataset needs at least one predictor column")]
    NoPredictors,

    #[error("row {row} has {got} predictor values, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("x has {x_rows} rows but y has {y_len} entries")]
    LengthMismatch { x_rows: usize, y_len: usize },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("column names: expected {expected} labels, got {got}")]
    ColumnNames { expected: usize, got: usize },

    #[error("grids are not comparable: resolution {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },

    #[error("grid resolution must be positive")]
    ZeroResolution,

    #[error("grid violates {property} at cell ({i}, {j}) by {amount:e}")]
    GridInvariant {
        property: &'static str,
        i: usize,
        j: usize,
        amount: f64,
    },

    #[error("argument {name} = {value} outside [0, 1]")]
    OutOfUnitInterval { name: &'static str, value: f64 },

    #[error("Y is constant; the measures are undefined for a degenerate endogenous variable")]
    ConstantResponse,

    #[error("invalid family parameters: {0}")]
    InvalidParameter(String),

    #[error("cannot parse family spec `{spec}`: {reason}")]
    FamilyParse { spec: String, reason: String },

    #[error("no closed form available: {0}")]
    NoClosedForm(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("checkerboard mass violates {property} at index {index} by {amount:e}")]
    CheckerboardInvariant {
        property: &'static str,
        index: usize,
        amount: f64,
    },

    #[error("column index {index} out of range for {d} predictors")]
    ColumnOutOfRange { index: usize, d: usize },
}

impl Error {
    /// True for failures caused by degenerate data rather than malformed input.
    pub fn is_numeric_degeneracy(&self) -> bool {
        matches!(self, Error::ConstantResponse)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
