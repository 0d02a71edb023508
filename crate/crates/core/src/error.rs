use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("column {column} has zero norm")]
    DegenerateColumn { column: usize },

    #[error("column {column} is not unit-norm (norm {norm})")]
    NotUnitNorm { column: usize, norm: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("enumeration budget exceeded: {required} candidates required, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not enough holdout samples: need {needed}, have {available}")]
    InsufficientHoldout { needed: usize, available: usize },

    #[error("local initialization requires the ground-truth dictionary")]
    MissingGroundTruth,

    #[error("observed rows are too coherent: mu = {coherence:.4} but OMP guarantee needs mu < {bound:.4}")]
    Incoherence { coherence: f64, bound: f64 },

    #[error("training failed at epoch {epoch}, iteration {iteration}: {source}")]
    Training {
        epoch: usize,
        iteration: usize,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
