use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("index {index:?} out of range for {what} with bounds {bounds:?}")]
    Index {
        what: &'static str,
        index: (usize, usize),
        bounds: (usize, usize),
    },
    #[error("requested {requested} negative edges but only {available} non-edges exist")]
    Capacity { requested: usize, available: usize },
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("forward cache does not match the current model weights")]
    StaleCache,
    #[error("layer {layer} out of range 1..={depth}")]
    Layer { layer: usize, depth: usize },
    #[error("task mismatch: {0}")]
    Task(&'static str),
    #[error("pair ({0}, {1}) appears in both the positive and the negative edge sets")]
    EdgeOverlap(usize, usize),
    #[error("loss is not finite at iteration {iteration}")]
    NanLoss { iteration: usize },
    #[error("every restart produced a non-finite loss")]
    AllRestartsSkipped,
    #[error("non-finite value during {0}")]
    NonFinite(&'static str),
}
