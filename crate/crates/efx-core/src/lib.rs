//! Exact verification kernels for explanation functions on finite discrete
//! domains.
//!
//! The crate computes, never estimates: sample spaces are explicit weighted
//! atom sets, information quantities come from exact summation, Lipschitz
//! constants are realized maxima over the finite domain, and every
//! inequality checker reports both sides of its bound. The `runner` and
//! `suites` modules turn the kernels into reproducible JSON reports; the
//! `efx` command line tool in the sibling crate is a thin wrapper around
//! them.

pub mod algebra;
pub mod bounds;
pub mod checkers;
pub mod ef;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod prob;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod suites;

pub use algebra::Decomposition;
pub use bounds::{BoundReport, Decoder};
pub use checkers::{CompletenessReport, ModulusCurve, ValidityReport};
pub use ef::{BoundEf, EfSpec};
pub use error::{EfxError, Result};
pub use model::{ArgmaxHead, Layer, LayeredModel};
pub use prob::{RandomVariable, SampleSpace};
pub use report::Report;
