use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    Row { row: u64, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("reference condition `{0}` does not appear in the data")]
    UnknownReference(String),

    #[error("matrix dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("probability {0} is outside the open interval (0, 1)")]
    ProbabilityDomain(f64),

    #[error("count {wins} exceeds the number of trials {trials}")]
    CountDomain { wins: u32, trials: u32 },

    #[error("unanimous answers present (infinite distances); use maximum-likelihood scaling")]
    UnanimousDistances,

    #[error("comparison graph is disconnected; components: {}", format_components(.components))]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("no pair of conditions has been compared")]
    NoComparisons,

    #[error("at least {required} observers are required, got {found}")]
    TooFewObservers { required: usize, found: usize },

    #[error("bootstrap gave up after {redraws} redraws of unscalable pseudo-samples")]
    BootstrapExhausted { redraws: usize },

    #[error("estimates of condition {0} have zero variance across runs")]
    ZeroVariance(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for errors caused by malformed input files or options rather
    /// than by the analysis itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::Row { .. }
                | Error::Csv(_)
                | Error::UnknownReference(_)
                | Error::InvalidParameter(_)
        )
    }
}

fn format_components(components: &[Vec<usize>]) -> String {
    components
        .iter()
        .map(|c| {
            let items: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            format!("{{{}}}", items.join(", "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}
