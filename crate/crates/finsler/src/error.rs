//! Error types shared across the engine.

use thiserror::Error;

use crate::jets::MultiIndex;

/// Errors raised by jet construction and arithmetic.
#[derive(Debug, Clone, Error)]
pub enum JetError {
    /// Two jets were combined but live at different expansion centers.
    #[error("jets are centered at different points; re-expand one of them first")]
    CenterMismatch,

    /// Two jets were combined but carry different truncation orders.
    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    /// Two jets were combined but are polynomials in different variable counts.
    #[error("jet variable-count mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },

    /// Evaluation produced a NaN or infinity in the coefficient identified
    /// by `index`.
    #[error("non-finite coefficient at multi-index {index}")]
    NonFinite { index: MultiIndex },

    /// Reciprocal of a jet whose value (order-zero coefficient) is zero.
    #[error("reciprocal of a jet with zero constant term")]
    ReciprocalOfZero,

    /// A derivative beyond the jet's truncation order was requested.
    #[error("multi-index of total order {requested} exceeds jet order {order}")]
    PartialOutOfRange { requested: usize, order: usize },

    /// A multi-index with the wrong number of entries was supplied.
    #[error("multi-index has {got} entries, jet has {expected} variables")]
    BadMultiIndex { expected: usize, got: usize },
}

/// Errors raised by the geometry pipeline.
#[derive(Debug, Error)]
pub enum FinslerError {
    #[error(transparent)]
    Jet(#[from] JetError),

    /// The fundamental tensor failed positive definiteness at a support
    /// element. Carries the offending eigenvalue.
    #[error("metric tensor is not positive definite: min eigenvalue {min_eigenvalue:.6e}")]
    DegenerateMetric { min_eigenvalue: f64 },

    /// A block was requested that needs deeper jets than the engine carries.
    /// The carried order is controlled by `FINSLER_MAX_JET_ORDER`.
    #[error(
        "jet order {available} is too low for this block (needs {required}); \
         raise FINSLER_MAX_JET_ORDER"
    )]
    OrderTooLow { required: usize, available: usize },

    /// An input had the wrong dimension for the model.
    #[error("dimension mismatch: model has n = {expected}, input has {got}")]
    DimMismatch { expected: usize, got: usize },

    /// The startup orientation probe found that the stored sign convention
    /// does not reproduce the nonlinear-connection difference law.
    #[error("sign-convention probe failed: {0}")]
    Convention(String),

    /// A fiber vector with zero (or non-finite) length was supplied.
    #[error("support element needs a nonzero fiber vector y")]
    ZeroFiberVector,

    /// Invalid run configuration (bad box, zero step, empty sample set, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numeric evaluation produced NaN/inf outside jet arithmetic.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },
}

pub type Result<T> = std::result::Result<T, FinslerError>;
