use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the toolkit.
///
/// [`Error::is_numerical`] separates numerical breakdowns (a factorization
/// failed, a kernel collapsed) from input validation problems.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric: |A[{row}][{col}] - A[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate series {0}: zero variance")]
    DegenerateSeries(String),

    #[error("degenerate kernel: no eigenvalue above the retention floor")]
    DegenerateKernel,

    #[error("singular regression: {0}")]
    Singular(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("duplicate column names: {}", .0.join(", "))]
    DuplicateColumns(Vec<String>),

    #[error("empty intersection of dates across fragments")]
    EmptyIntersection,

    #[error("split leaves the {0} side empty")]
    EmptySplit(&'static str),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("actual value is zero at index {0}; percentage error undefined")]
    ZeroActual(usize),

    #[error("zero denominator for {0}")]
    ZeroDenominator(&'static str),

    #[error("every configuration failed to fit")]
    AllConfigsFailed,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::DegenerateKernel
            | Error::Singular(_)
            | Error::AllConfigsFailed => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

/// Attaches a pipeline stage name to errors.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
