use thiserror::Error;

/// Tuple pair identifying the witness of a separation constraint.
pub type Witness = (usize, usize);

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A W-step, C-step or projection has no feasible point.
    #[error("infeasible subproblem ({stage}): {detail}; worst constraint witness {witness:?}")]
    Infeasible {
        stage: &'static str,
        detail: String,
        witness: Option<Witness>,
    },

    #[error("design infeasible: {0}")]
    DesignInfeasible(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. } | Error::DesignInfeasible(_))
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
