use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown block `{0}`")]
    UnknownBlock(String),

    #[error("unknown component `{0}` in composition plan")]
    UnknownComponent(String),

    #[error("invalid composition plan: {0}")]
    Plan(String),

    #[error("gate {gate} is open and its values cannot be enumerated; close the network with an environment")]
    OpenGate { gate: String },

    #[error("exploration stopped after {states} states and {transitions} transitions")]
    LimitExceeded { states: usize, transitions: usize },

    #[error("component {component} has more than {limit} local states")]
    LocalStateOverflow { component: String, limit: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("model error: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
