use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(sea_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Validation { key: key.into(), reason: reason.into() }
    }

    /// Parameter errors become validation errors under `section`; anything
    /// else from the core is a numerical failure.
    pub fn from_core(section: &str, e: sea_core::Error) -> Self {
        match e {
            sea_core::Error::InvalidParameter { name, reason } => CliError::validation(format!("{section}.{name}"), reason),
            sea_core::Error::InvalidGrid(reason) => CliError::validation(format!("{section}.grid"), reason),
            sea_core::Error::Signal(reason) => CliError::validation(section, reason),
            other => CliError::Numerical(other),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// 2 for bad input, 3 for numerical breakdown, 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<sea_core::Error> for CliError {
    fn from(e: sea_core::Error) -> Self {
        CliError::from_core("analysis", e)
    }
}
