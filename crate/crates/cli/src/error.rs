use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Config,
    Data,
    Verification,
    Solver,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Solver => 1,
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Verification => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<String>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError { kind, message: message.into(), details: Vec::new() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Data, message)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::data(format!("{}: {e}", path.display()))
    }

    /// The JSON line written to stderr.
    pub fn to_json(&self) -> String {
        let body = serde_json::json!({
            "error": {
                "kind": self.kind,
                "code": self.kind.exit_code(),
                "message": self.message,
                "details": self.details,
            }
        });
        body.to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<gerryopt::Error> for CliError {
    fn from(e: gerryopt::Error) -> Self {
        use gerryopt::Error as E;
        let kind = match &e {
            E::InvalidInstance(_) | E::DegenerateGamma(_) => ErrorKind::Config,
            E::InvalidDistrict(_) | E::InfeasiblePlan { .. } => ErrorKind::Data,
            E::TooFewElections(_) | E::ZeroVariance | E::NoData | E::ShareOutOfRange(_) => ErrorKind::Data,
            E::Malformed { .. } | E::Io(_) | E::Csv(_) | E::Json(_) => ErrorKind::Data,
            E::NoConvergence { .. } | E::LpInfeasible(_) | E::LpUnbounded(_) | E::IterationLimit(_) | E::SingularBasis => {
                ErrorKind::Solver
            }
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new(ErrorKind::Solver, format!("serialization failed: {e}"))
    }
}
