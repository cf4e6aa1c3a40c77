use std::process::ExitCode;

use thiserror::Error;

/// A failed command, classified by the exit status it maps to.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("runtime error: {0}")]
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Runtime(_) => 4,
        })
    }
}

impl From<fedsim::Error> for Failure {
    fn from(e: fedsim::Error) -> Self {
        use fedsim::Error as E;
        match e {
            E::Config(_) | E::Spec(_) => Failure::Config(e.to_string()),
            E::MismatchedRounds => Failure::Data(e.to_string()),
            _ if e.is_data_error() => Failure::Data(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_classes() {
        assert!(matches!(
            Failure::from(fedsim::Error::Config("x".into())),
            Failure::Config(_)
        ));
        assert!(matches!(
            Failure::from(fedsim::Error::EmptyDataset),
            Failure::Data(_)
        ));
        assert!(matches!(
            Failure::from(fedsim::Error::Partition("x".into())),
            Failure::Data(_)
        ));
        assert!(matches!(
            Failure::from(fedsim::Error::NonFinite("x".into())),
            Failure::Runtime(_)
        ));
    }
}
