use thiserror::Error;

use crate::lattice::Point;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} unsupported (1..={max})", max = crate::lattice::MAX_DIM)]
    UnsupportedDimension(usize),

    #[error("point {0} is not in the index set")]
    NotInIndexSet(Point),

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("integer overflow in lattice arithmetic")]
    Overflow,

    #[error("not translation-stable at this radius ({0})")]
    NotTranslationStable(String),

    #[error("partition does not cover the shape: {0}")]
    PartitionCoverage(String),

    #[error("coset decomposition failed: {0}")]
    CosetDecomposition(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported model for {op}: {model}")]
    UnsupportedModel { op: &'static str, model: String },

    #[error("V sampler is unbounded; configure an envelope constant for the Poisson-series truncation")]
    EnvelopeRequired,

    #[error("Monte Carlo budget {got} below the minimum {min}")]
    BudgetTooSmall { got: usize, min: usize },

    #[error("no exceedance of threshold {threshold} (observed maximum {observed_max})")]
    NoExceedances { threshold: f64, observed_max: f64 },

    #[error("threshold {threshold} is below the {level} marginal quantile (exceedance fraction {fraction})")]
    ThresholdTooLow { threshold: f64, level: f64, fraction: f64 },

    #[error("zero norm: {0}")]
    ZeroNorm(String),

    #[error("truncation residual {residual} exceeds bound {bound}")]
    TruncationResidual { residual: f64, bound: f64 },

    #[error("tail function is not monotone: {0}")]
    NonMonotoneTail(String),

    #[error("too few samples: need {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("no block exceedance of u = {threshold} in {blocks} blocks (max block maximum {max_block})")]
    NoBlockExceedance { threshold: f64, blocks: usize, max_block: f64 },

    #[error("conditioning event never observed: {0}")]
    ConditioningNeverObserved(String),

    #[error("non-lattice structure: {0}")]
    NonLattice(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
