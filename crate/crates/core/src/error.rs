use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// One problem found while validating input; `line` is set for config-file input.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {}: {}", l, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn join(issues: &[Issue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {}", join(.0))]
    Invalid(Vec<Issue>),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("accuracy failure in {term}: {detail}")]
    Accuracy { term: String, detail: String },
    #[error("iteration is not contracting; ratios {ratios:?}")]
    NonContraction { ratios: Vec<f64> },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(vec![Issue { line: None, message: msg.into() }])
    }

    pub fn accuracy(term: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Accuracy { term: term.into(), detail: detail.into() }
    }

    /// Process exit code: 1 for configuration problems, 2 numerical, 3 accuracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Domain(_) | Error::Io(_) => 1,
            Error::Numerical(_) | Error::NonContraction { .. } => 2,
            Error::Accuracy { .. } => 3,
        }
    }
}
