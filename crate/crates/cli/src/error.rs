use std::path::PathBuf;

use isothermic::io::IoError;
use isothermic::loopgroup::LoopGroupError;
use isothermic::surface::SurfaceError;
use isothermic::transform::TransformError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid job: {0}")]
    SpecInvalid(String),
    #[error("mesh axes {axes:?} invalid for dimension {dim}")]
    BadAxes { axes: [usize; 3], dim: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Grid(#[from] IoError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    LoopGroup(#[from] LoopGroupError),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}
