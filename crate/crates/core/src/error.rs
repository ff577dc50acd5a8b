use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed to parse or violated a constraint.
    #[error("config error at `{key}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        key: String,
        line: Option<usize>,
        message: String,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Stacked reported channel of the requested group is rank deficient.
    #[error("precoding infeasible: {0}")]
    PrecodingInfeasible(String),

    #[error("insufficient degrees of freedom: {victims} victims for {antennas} transmit antennas")]
    InsufficientDof { victims: usize, antennas: usize },

    #[error("synchronization failed: {0}")]
    SyncFailed(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("unknown preset `{0}` (expected one of fig3a, fig3b, fig3c, fig3d, table2)")]
    UnknownPreset(String),

    #[error("slot {slot}: {source}")]
    Slot {
        slot: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            line: None,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_slot(self, slot: u64) -> Self {
        match self {
            e @ Error::Slot { .. } => e,
            e => Error::Slot {
                slot,
                source: Box::new(e),
            },
        }
    }
}
