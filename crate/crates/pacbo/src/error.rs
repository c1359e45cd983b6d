use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] pacbo_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0} already exists; pass --overwrite to replace it")]
    OutputExists(PathBuf),
    #[error("{0}")]
    Input(String),
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: &std::path::Path) -> Result<T>;
}

impl<T> IoContext<T> for std::result::Result<T, std::io::Error> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|source| AppError::Io { path: path.to_path_buf(), source })
    }
}

impl<T> IoContext<T> for std::result::Result<T, serde_json::Error> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|source| AppError::Json { path: path.to_path_buf(), source })
    }
}

impl<T> IoContext<T> for std::result::Result<T, csv::Error> {
    fn at(self, path: &std::path::Path) -> Result<T> {
        self.map_err(|source| AppError::Csv { path: path.to_path_buf(), source })
    }
}
