use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("row {row} has no neighbors")]
    NoNeighbors { row: usize },
    #[error("step {from} -> {to} is not an edge of the walk graph")]
    NotNeighbor { from: usize, to: usize },
    #[error("too many evidences: {count} exceeds the limit of {limit}")]
    TooManyEvidence { count: usize, limit: usize },
    #[error("class {class} has {have} training graphs, need at least {need}")]
    InsufficientClass { class: usize, have: usize, need: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("out-of-grammar text: {0}")]
    Grammar(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}; parameter norms: {norms:?}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        norms: Vec<(String, f64)>,
    },
}
