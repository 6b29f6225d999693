use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid network configuration: {0}")]
    InvalidNetwork(String),

    #[error("invalid history: {0}")]
    InvalidHistory(String),

    /// Every problem found while validating a scenario, keyed by config path.
    #[error("config error: {}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("message accounting: {0}")]
    Accounting(String),

    #[error("history too large for exhaustive search: {0} operations (limit {1})")]
    TooLarge(usize, usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub msg: String,
}

impl ConfigIssue {
    pub fn new(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            msg: msg.into(),
        }
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("{}: {}", i.key, i.msg))
        .collect::<Vec<_>>()
        .join("; ")
}
