use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability for {what}: {value}")]
    InvalidProbability { what: &'static str, value: f64 },

    #[error("degenerate chain (p01 = 0, p11 = 1) has no unique stationary distribution")]
    DegenerateChain,

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("episode exhausted: clock {clock} exceeds episode length {length}")]
    EpisodeExhausted { clock: usize, length: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("state budget exceeded: {count} states > budget {budget}")]
    BudgetExceeded { count: usize, budget: usize },

    #[error("every support point assigns zero probability to the observations")]
    AllWeightsAtFloor,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("cumulative regret must be positive over the slope window (episode {episode} has {value})")]
    NonPositiveRegret { episode: usize, value: f64 },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Configuration and validation failures, as opposed to runtime ones
    /// (budget exhaustion, I/O).
    pub fn is_config(&self) -> bool {
        !matches!(
            self,
            Error::BudgetExceeded { .. } | Error::Io { .. } | Error::AllWeightsAtFloor
        )
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
