//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A CSV field failed to parse. Rows are 1-based, counting the header if present.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Structural problem with an input file (inconsistent arity, empty file, ...).
    #[error("schema error: {0}")]
    Schema(String),

    /// Non-finite or otherwise unusable values in the data itself.
    #[error("data error: {0}")]
    Data(String),

    /// Invalid configuration (bad partition spec, step size, loss parameter, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Could not build a valid (connected) topology.
    #[error("topology error: {0}")]
    Topology(String),

    /// Inconsistent network state, e.g. center dimension mismatch across users.
    #[error("state error: {0}")]
    State(String),

    /// Center initialization failed (e.g. empty local dataset).
    #[error("init error: {0}")]
    Init(String),

    /// The iteration produced non-finite coordinates.
    #[error("divergence: non-finite state at iteration {iteration}")]
    Divergence { iteration: usize },

    /// Mismatched lengths or invalid arguments to a metric.
    #[error("input error: {0}")]
    Input(String),

    /// A harness run failed; identifies which seed.
    #[error("run at seed {seed} failed: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config file error: {0}")]
    ConfigFile(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
