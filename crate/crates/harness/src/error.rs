use std::io;
use std::path::Path;

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("resource error: {0}")]
    Resource(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::Data(_) => 3,
            HarnessError::Resource(_) => 4,
        }
    }

    pub fn io(path: &Path, err: io::Error) -> Self {
        HarnessError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<stochknap::Error> for HarnessError {
    fn from(e: stochknap::Error) -> Self {
        use stochknap::Error as E;
        match e {
            E::InvalidParameter(_) | E::Config(_) | E::ArityMismatch(..) => {
                HarnessError::Usage(e.to_string())
            }
            E::CapacityTooLarge { .. } => HarnessError::Resource(e.to_string()),
            _ => HarnessError::Data(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
