//! End-to-end scenario runs: build the world, drive day and night, match
//! camera frames, refine, report and write artifacts.

mod artifacts;
mod batch;
pub mod manifest;
mod scenario;
mod world;

pub use artifacts::{run_scenario, write_atomic, Overrides, ReportFile, RunArtifacts};
pub use batch::{batch_run, collect_configs, BatchFailure, BatchRow, BatchSummary, TagTotals};
pub use manifest::{Manifest, ManifestError, ManifestHeader, ManifestRecord};
pub use scenario::ScenarioRun;
pub use world::{World, RUN_MARGIN_S};

use thiserror::Error;

use crate::config::ConfigError;
use crate::field::{FieldError, GridError};
use crate::matching::MatchingError;
use crate::tracking::{TrackingError, TrajectoryError};
use crate::vehicle::Mode;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("field synthesis failed: {0}")]
    Field(#[from] FieldError),
    #[error("NDT grid construction failed: {0}")]
    Grid(#[from] GridError),
    #[error("desired trajectory: {0}")]
    Trajectory(#[from] TrajectoryError),
    #[error("{mode} run aborted: {source}")]
    Tracking {
        mode: &'static str,
        source: TrackingError,
    },
    #[error("matching failed: {0}")]
    Matching(#[from] MatchingError),
    #[error("{path}: {source}")]
    Manifest { path: String, source: ManifestError },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn tracking(mode: Mode, source: TrackingError) -> Self {
        PipelineError::Tracking {
            mode: mode.as_str(),
            source,
        }
    }

    /// Process exit status: 1 for bad input, 2 for a failed simulation.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Manifest { .. } => 1,
            PipelineError::Io { .. } => 1,
            _ => 2,
        }
    }
}
