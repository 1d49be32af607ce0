use thiserror::Error;

/// Every failure the library can report. The CLI maps these onto exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("inverse branch is ill-defined at alpha")]
    IllDefinedAtAlpha,
    #[error("word map is ill-defined: input is hop^{0}(alpha)")]
    IllDefinedAtOrbitPoint(usize),
    #[error("no periodic point with the requested itinerary")]
    NoPeriodicPoint,
    #[error("iteration hit an ill-defined point")]
    IllDefined,
    #[error("could not decide: {0}")]
    Undetermined(String),
    #[error("budget exceeded after {evaluated} evaluations (best count {best_count} at n = {best_n})")]
    BudgetExceeded {
        evaluated: u64,
        best_n: usize,
        best_count: usize,
    },
    #[error("alpha is periodic; class finiteness is not available")]
    PeriodicAlpha,
    #[error("depth limit {0} reached before the answer became exact")]
    DepthLimited(usize),
    #[error("empty set")]
    EmptySet,
    #[error("full circle is not a valid input here")]
    FullCircleInput,
    #[error("point is not in the set")]
    NotInSet,
    #[error("leaf for word {0} is ill-defined")]
    IllDefinedLeaf(String),
    #[error("point is on a partition boundary")]
    AmbiguousAtBoundary,
    #[error("boundary images of the star link collide")]
    ZeroSeparation,
    #[error("measure support is degenerate")]
    DegenerateSupport,
    #[error("alpha lies on a circuit boundary")]
    OnBoundary,
    #[error("pairing cannot be extended monotonically")]
    NonMonotonePairing,
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("denominator {0} exceeds the configured limit")]
    DenominatorLimit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded { .. } | Error::SearchExhausted(_) | Error::DepthLimited(_) => 3,
            Error::Undetermined(_) => 1,
            _ => 2,
        }
    }
}
