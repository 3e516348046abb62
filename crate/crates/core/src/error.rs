use thiserror::Error;

#[derive(Debug, Error)]
pub enum FairserveError {
    #[error("one-hot encoding does not decode to a profile")]
    InvalidEncoding,
    #[error("group {0} has an empty side in this batch")]
    EmptySide(String),
    #[error("every sensitive group has an empty side; no issue vector is defined")]
    NoValidGroups,
    #[error("step called on a terminated episode")]
    EpisodeTerminated,
    #[error("covariance rank below 3; PCA projection is degenerate")]
    DegenerateData,
    #[error("labels contain a single class; logistic fit is undefined")]
    SingleClass,
    #[error("non-finite gradient encountered; update aborted")]
    NonFiniteGradient,
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error("epoch {epoch}: {source}")]
    AtEpoch {
        epoch: usize,
        #[source]
        source: Box<FairserveError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FairserveError {
    /// CLI exit code: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            FairserveError::Config(_) => 2,
            FairserveError::Data(_)
            | FairserveError::EmptySide(_)
            | FairserveError::NoValidGroups
            | FairserveError::SingleClass
            | FairserveError::Checkpoint(_)
            | FairserveError::InvalidEncoding
            | FairserveError::Io(_) => 3,
            FairserveError::DegenerateData
            | FairserveError::NonFiniteGradient
            | FairserveError::EpisodeTerminated => 4,
            FairserveError::AtEpoch { source, .. } => source.exit_code(),
        }
    }
}
