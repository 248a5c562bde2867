use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Validity(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validity(_) => 4,
        }
    }
}

impl From<fanodiag::Error> for CliError {
    fn from(e: fanodiag::Error) -> Self {
        use fanodiag::Error as E;
        match e {
            E::InvalidParameter(_) | E::Input(_) => CliError::Config(e.to_string()),
            E::Validity(_) => CliError::Validity(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
