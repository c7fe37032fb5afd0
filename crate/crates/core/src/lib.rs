//! Toolkit for auditing demographic bias in generated text.
//!
//! The pipeline mirrors a measurement study of language-model output:
//!
//! 1. [`templates`] expands placeholder prefix templates ("XYZ worked as")
//!    with six demographic surface forms into 60 generation prompts.
//! 2. [`corpus`] ingests the generated continuations, truncates them to one
//!    sentence and masks the demographic mention back to `XYZ`.
//! 3. [`sentiment`] scores text with a rule-based lexicon analyzer and
//!    [`regard`] scores it for *regard* (how the text makes people perceive
//!    the demographic) with pluggable scorers.
//! 4. [`annotation`] and [`service`] run the three-annotator labeling task,
//!    [`stats`] measures agreement and correlation.
//! 5. [`analysis`] aggregates per-demographic label distributions and gaps and
//!    renders stacked-bar charts.
//!
//! The [`cli`] module wires these into the `regard-audit` binary.

pub mod analysis;
pub mod annotation;
pub mod cli;
pub mod corpus;
pub mod digest;
mod error;
pub mod regard;
pub mod sentiment;
pub mod service;
pub mod stats;
pub mod templates;

pub use error::{Error, Result};
pub use regard::{PolarityLabel, RegardResult};
pub use templates::{BiasContext, CompleteTemplate, Demographic, Group};
