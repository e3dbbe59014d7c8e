use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input file is empty")]
    EmptyFile,
    #[error("missing or malformed header: {0}")]
    MissingHeader(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {col}: cannot parse {value:?} as a finite number")]
    NonNumericCell {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("duplicate sample id {0:?}")]
    DuplicateSampleId(String),
    #[error("invalid identifier {0:?} (allowed: [A-Za-z0-9_-]+)")]
    InvalidId(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid sample matrix: {0}")]
    InvalidMatrix(String),

    #[error("k = {k} is too large for {n} rows")]
    KTooLarge { k: usize, n: usize },
    #[error("local Gram matrix of row {0} is singular (use reg > 0)")]
    SingularLocalGram(usize),
    #[error("eigendecomposition did not converge")]
    EigenFailure,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input has no samples")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("no partition passed the ICS filter")]
    EmptyEnsemble,
    #[error("partition set is empty")]
    EmptyPartitionSet,

    #[error("metric requires at least two clusters")]
    SingleCluster,
    #[error("too few samples for this metric")]
    TooFewSamples,
    #[error("length mismatch: {left} labels vs {right} rows")]
    LengthMismatch { left: usize, right: usize },

    #[error("sample {0} has no co-association mass")]
    IsolatedNode(usize),
    #[error("every candidate cluster count was degenerate")]
    AllCandidatesDegenerate,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input or configuration (CLI exit code 1),
    /// false for runtime or numerical failures (exit code 2).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_validation(),
            Error::Io(e) => e.kind() == std::io::ErrorKind::NotFound,
            Error::EigenFailure
            | Error::SingularLocalGram(_)
            | Error::EmptyEnsemble
            | Error::AllCandidatesDegenerate
            | Error::IsolatedNode(_) => false,
            _ => true,
        }
    }

    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
