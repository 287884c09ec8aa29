use std::path::PathBuf;

use epiline::calibrate::CalibrateError;
use epiline::matching::MatchError;
use epiline::planar::PlanarError;
use epiline::sim::SimError;
use epiline::track_io::TrackIoError;
use epiline::PipelineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Planar(#[from] PlanarError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::Parse { path: path.into(), message: message.to_string() }
    }

    pub fn track(path: impl Into<PathBuf>, e: TrackIoError) -> Self {
        match e {
            TrackIoError::Io(source) => Self::io(path, source),
            other => Self::parse(path, other),
        }
    }

    /// 2 configuration or parse error, 3 unsynchronized tracks,
    /// 4 not enough data, 5 no valid model.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Parse { .. } | Self::Config(_) | Self::Sim(_) => 2,
            Self::Pipeline(PipelineError::Match(m)) | Self::Planar(PlanarError::Match(m)) => match m {
                MatchError::Desynchronized(..) => 3,
                MatchError::NoThirdFrame | MatchError::InsufficientCandidates(_) => 4,
            },
            Self::Pipeline(PipelineError::Calibrate(c)) => match c {
                CalibrateError::InsufficientCandidates
                | CalibrateError::EmptyFrame
                | CalibrateError::NoBarcodeSignal
                | CalibrateError::ValidationStarved { .. } => 4,
                CalibrateError::DegenerateHypothesis | CalibrateError::NoValidModel | CalibrateError::Geometry(_) => 5,
            },
            Self::Planar(PlanarError::InsufficientLines(_)) => 4,
            Self::Planar(PlanarError::NoIntersection) => 5,
        }
    }
}
