use std::fmt;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            kind: "usage".into(),
            message: message.into(),
        }
    }

    pub fn data(kind: &str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn not_converged(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NOT_CONVERGED,
            kind: "not_converged".into(),
            message: message.into(),
        }
    }

    /// Single-line JSON record for stderr.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "error": self.kind,
            "exit_code": self.code,
            "message": self.message.replace('\n', " "),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<emitternet::Error> for CliError {
    fn from(e: emitternet::Error) -> Self {
        Self::data(e.kind(), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::data("io", e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::data("csv", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::data("json", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
