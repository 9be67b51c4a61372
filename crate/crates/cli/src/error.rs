use std::path::Path;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// The inputs could not be read or used.
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Internal(format!("{}: {e}", path.display()))
    }
}

impl From<pcrecon_core::Error> for CliError {
    fn from(e: pcrecon_core::Error) -> Self {
        use pcrecon_core::Error as E;
        match e {
            E::InvalidParameter(_) => CliError::Usage(e.to_string()),
            E::Io(_) => CliError::Internal(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<pcrecon_tools::Error> for CliError {
    fn from(e: pcrecon_tools::Error) -> Self {
        match e {
            pcrecon_tools::Error::Core(c) => c.into(),
            pcrecon_tools::Error::InvalidView(_) => CliError::Usage(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<pcrecon_scanner::Error> for CliError {
    fn from(e: pcrecon_scanner::Error) -> Self {
        use pcrecon_scanner::Error as E;
        match e {
            E::Core(c) => c.into(),
            E::Config(_) => CliError::Data(e.to_string()),
            e => CliError::Internal(e.to_string()),
        }
    }
}

impl From<pcrecon_service::Error> for CliError {
    fn from(e: pcrecon_service::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
