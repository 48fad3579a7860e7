use fnls::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("io error: {0}")]
    Io(String),
    #[error("blow-up detected at t = {0}")]
    BlowUp(f64),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 6,
            CliError::BlowUp(_) => 5,
            CliError::Core(e) => match e {
                Error::NonexistenceRegime(_) => 3,
                Error::NotConverged(_) | Error::Diverged { .. } | Error::ZeroDenominator(_) => 4,
                Error::NonFiniteOutput => 5,
                Error::Io(_) | Error::BadMagic | Error::UnsupportedVersion(_) | Error::TruncatedFile => 6,
                _ => 2,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_code_per_family() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(Error::SpeedTooLarge { c2: 4.0, bound: 3.6 }).exit_code(), 2);
        assert_eq!(CliError::Core(Error::NonexistenceRegime("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(Error::Diverged { iteration: 3, error: 1e7 }).exit_code(), 4);
        assert_eq!(CliError::BlowUp(0.3).exit_code(), 5);
        assert_eq!(CliError::Core(Error::TruncatedFile).exit_code(), 6);
        assert_eq!(CliError::Io("x".into()).exit_code(), 6);
    }
}
