use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage used to attribute errors raised deep inside a tracking run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Pregroup,
    TrainEmbedding,
    FitAffinity,
    BuildGraph,
    AssembleCosts,
    Solve,
    Tracks,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Pregroup => "pregroup",
            Stage::TrainEmbedding => "train-embedding",
            Stage::FitAffinity => "fit-affinity",
            Stage::BuildGraph => "build-graph",
            Stage::AssembleCosts => "assemble-costs",
            Stage::Solve => "solve",
            Stage::Tracks => "tracks",
            Stage::Evaluate => "evaluate",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounding box: {0}")]
    InvalidBox(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid graph parameters: {0}")]
    InvalidGraphParams(String),

    #[error("brute-force solver supports at most {max} nodes, instance has {got}")]
    TooManyNodes { max: usize, got: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("invalid training config: {0}")]
    InvalidTrainingConfig(String),

    #[error("no centroid for cluster label {0}")]
    MissingCentroid(usize),

    #[error("empty cluster label set")]
    EmptyLabels,

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("missing features for edge ({0}, {1})")]
    MissingFeatures(usize, usize),

    #[error("detection {0} has no image patch")]
    MissingImage(usize),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("empty ground truth")]
    EmptyGroundTruth,

    #[error("invalid synthetic sequence spec: {0}")]
    InvalidSynthSpec(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("{stage}: {inner}")]
    Stage { stage: Stage, inner: Box<Error> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn at(self, stage: Stage) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                inner: Box::new(e),
            },
        }
    }

    /// Stage the error was attributed to, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
