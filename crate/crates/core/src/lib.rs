//! # egosenti
//!
//! Ternary sentiment classification (positive / neutral / negative) of
//! egocentric photostreams.
//!
//! The pipeline:
//!
//! 1. [`segmentation`] splits a stream into events, or takes the event
//!    boundaries recorded in the dataset manifest.
//! 2. [`features`] fuses each image's 4096-D CNN block and 2089-D ANP
//!    likelihood block into one 6185-D vector.
//! 3. [`svm`] trains a class-weighted one-vs-all linear SVM on image vectors.
//! 4. [`eval`] labels events by majority vote over their images and runs
//!    event-stratified k-fold cross-validation.
//!
//! [`datamodel`] holds the domain types and file formats, and [`synth`]
//! generates seeded datasets with planted structure for testing.

pub mod datamodel;
pub mod error;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod segmentation;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
