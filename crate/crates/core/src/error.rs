/// Errors produced by the mining, indexing and generation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("document {doc_id} references unknown stream {stream_id}")]
    UnknownStreamInDocument { doc_id: String, stream_id: String },
    #[error("unknown stream {0}")]
    UnknownStream(String),
    #[error("duplicate stream id {0}")]
    DuplicateStream(String),
    #[error("document {doc_id} has non-positive timestamp {timestamp}")]
    NonPositiveTimestamp { doc_id: String, timestamp: i64 },
    #[error("document {doc_id} has timestamp {timestamp} beyond timeline length {timeline}")]
    TimestampBeyondTimeline {
        doc_id: String,
        timestamp: i64,
        timeline: usize,
    },
    #[error("document {doc_id} has a zero count for term {term}")]
    ZeroTermCount { doc_id: String, term: String },
    #[error("corpus needs at least one stream")]
    EmptyStreamSet,
    #[error("stream {0} has a non-finite location")]
    NonFiniteLocation(String),
    #[error("invalid distance matrix: {0}")]
    InvalidDistanceMatrix(String),
    #[error("index range [{l}:{r}] outside 1..={len}")]
    RangeOutOfBounds { l: usize, r: usize, len: usize },
    #[error("empty interval set")]
    EmptyIntervalSet,
    #[error("no expected frequency for stream {stream}, term {term}, timestamp {timestamp}")]
    MissingBaseline {
        stream: String,
        term: String,
        timestamp: usize,
    },
    #[error("snapshot timestamp {got} does not follow {last}")]
    OutOfOrderSnapshot { last: usize, got: usize },
    #[error("snapshot has {got} scores but the tracker expects {expected} streams")]
    SnapshotSizeMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
