use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("config key `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Core(#[from] fpa_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
