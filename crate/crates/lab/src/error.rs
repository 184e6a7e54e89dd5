use std::path::PathBuf;

use sediment_core::macroscale::MacroError;
use sediment_core::meso::MesoError;
use sediment_core::micro::MicroError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("micro run failed: {0}")]
    Micro(#[from] MicroError),
    #[error("macro run failed: {0}")]
    Macro(#[from] MacroError),
    #[error(transparent)]
    Meso(#[from] MesoError),
    #[error("snapshot at t = {time} has no partner within {max_skew} (nearest skew {skew})")]
    SkewTooLarge { time: f64, skew: f64, max_skew: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl LabError {
    /// Collisions and reflection breakdowns are physics guards; the rest is
    /// configuration or IO.
    pub fn is_physics_guard(&self) -> bool {
        matches!(
            self,
            LabError::Micro(
                MicroError::CollisionImminent { .. } | MicroError::ReflectionsDiverged { .. } | MicroError::MaxIterations { .. }
            )
        )
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            LabError::Config { .. }
                | LabError::Micro(MicroError::InfeasibleConfig { .. } | MicroError::InvalidParameter { .. })
                | LabError::Macro(_)
                | LabError::Meso(_)
                | LabError::Format { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        LabError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
