use thiserror::Error;

use crate::market::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("marginal values must be non-increasing and non-negative: {0}")]
    InvalidMarginals(String),

    #[error("cost curve has {len} explicit marginals, cannot evaluate Q({x})")]
    BeyondCostCurve { x: usize, len: usize },

    #[error("invalid cost curve: {0}")]
    InvalidCost(String),

    #[error("invalid auction parameters: {0}")]
    InvalidParams(String),

    #[error("scenario enumeration needs {size} rows, limit is {limit}")]
    ScenarioExplosion { size: u128, limit: u128 },

    #[error("strategy space has {size} profiles, limit is {limit}")]
    StrategyExplosion { size: u128, limit: u128 },

    #[error("operation requires a product-form instance (joint scenario table present)")]
    NotProductForm,

    #[error("operation requires a bounded cap")]
    UnboundedCap,

    #[error("instance failed validation:\n{0}")]
    Validation(ValidationReport),

    #[error("instance file: {0}")]
    Parse(String),

    #[error("generator: {0}")]
    Generator(String),
}
