use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// A core failure, tagged with the pipeline stage that raised it.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: lrsr_core::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no readable PNG images in {0}")]
    NoImages(PathBuf),

    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("config serialize: {0}")]
    TomlSer(#[from] toml::ser::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for lrsr_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| HarnessError::Stage { stage, source })
    }
}
