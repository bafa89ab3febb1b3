use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Parse,
    Validation,
    DimensionMismatch,
    NonConvergence,
    Usage,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Parse | Self::Validation | Self::DimensionMismatch => 2,
            Self::NonConvergence => 3,
            Self::Usage | Self::Io => 4,
        }
    }
}

/// Failure of a command; printed as one JSON line on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            location: None,
        }
    }

    pub fn at(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Parse, message)
    }

    pub fn validation(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Validation, message).at(location)
    }

    pub fn dimension(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(ErrorKind::DimensionMismatch, message).at(location)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn io(path: &str, e: &std::io::Error) -> Self {
        Self::new(ErrorKind::Io, e.to_string()).at(path)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("errors serialize")
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.location {
            Some(at) => write!(f, "{at}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for CliError {}

impl From<stratcomm_core::Error> for CliError {
    fn from(e: stratcomm_core::Error) -> Self {
        use stratcomm_core::Error as E;
        let kind = match &e {
            E::InvalidDistribution(_) | E::SingularPair | E::OutOfRange { .. } => ErrorKind::Validation,
            E::DimensionMismatch(_) => ErrorKind::DimensionMismatch,
            E::NoConvergence(_) | E::ZeroProbabilityObservation => ErrorKind::NonConvergence,
            E::InvalidArgument(_) | E::EnumerationTooLarge { .. } => ErrorKind::Usage,
        };
        Self::new(kind, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_line_is_single_line_json() {
        let e = CliError::validation("source", "total mass is 0.98,\nexpected 1");
        let line = e.to_json_line();
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "validation");
        assert_eq!(v["location"], "source");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        use stratcomm_core::Error as E;
        assert_eq!(CliError::from(E::NoConvergence("lp".into())).exit_code(), 3);
        assert_eq!(CliError::from(E::InvalidArgument("grid".into())).exit_code(), 4);
        assert_eq!(CliError::from(E::DimensionMismatch("x".into())).exit_code(), 2);
    }
}
