use thiserror::Error;

/// Errors raised by the engine.
///
/// Budget errors are kept apart from everything else: a search that runs out
/// of its bounded universe is inconclusive, not a refutation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("budget exceeded{}: {message}", stage.map(|s| format!(" at stage {s}")).unwrap_or_default())]
    Budget { stage: Option<usize>, message: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("construction failed: {0}")]
    Construction(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn budget(msg: impl Into<String>) -> Self {
        Error::Budget { stage: None, message: msg.into() }
    }

    pub fn budget_at(stage: usize, msg: impl Into<String>) -> Self {
        Error::Budget { stage: Some(stage), message: msg.into() }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
