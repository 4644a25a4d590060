//! Semiquantitative group testing under the saturation model.
//!
//! Two schemes are provided: a two-round adaptive scheme built by merging
//! rows of an expander-based binary design ([`adaptive`]), and a one-round
//! scheme over Reed–Solomon codes ([`nonadaptive`]). The [`oracle`] module
//! holds brute-force checks used to certify both at small scale, and
//! [`experiment`] ties everything into reproducible runs with JSON reports.

pub mod adaptive;
pub mod error;
pub mod expander;
pub mod experiment;
pub mod format;
pub mod model;
pub mod nonadaptive;
pub mod oracle;

pub use error::{Error, Result};
pub use model::{DefectiveSet, OutcomeVector, SqgtParams, TestMatrix};
