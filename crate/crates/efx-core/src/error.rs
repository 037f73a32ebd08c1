//! Error taxonomy shared by every kernel in the crate.
//!
//! The variants mirror how callers are expected to react: `Scenario` and
//! `Resource` are input problems (a runner maps them to exit code 2), while
//! the remaining variants describe a computation that was asked to do
//! something outside its contract.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EfxError {
    /// A scalar argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally incompatible inputs (mismatched spaces, dimensions, ...).
    #[error("structural error: {0}")]
    Structural(String),

    /// A symbol map is not total on the symbols it is applied to.
    #[error("mapping error: {0}")]
    Mapping(String),

    /// Non-finite values or numerical results outside tolerated slack.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An operation needs data the inputs do not carry (e.g. Jacobians).
    #[error("capability error: {0}")]
    Capability(String),

    /// A stated hypothesis of the check does not hold for the inputs.
    #[error("precondition error: {0}")]
    Precondition(String),

    /// The finite domain is too degenerate for the operation (too few
    /// points, all inputs identical).
    #[error("degenerate domain: {0}")]
    Degenerate(String),

    /// An enumeration would exceed the configured cap.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Scenario files that do not parse or do not validate.
    #[error("invalid scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, EfxError>;
