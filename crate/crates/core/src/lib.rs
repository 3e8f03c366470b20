//! Screening toolkit for synthetic training data in object detection.
//!
//! Computes distribution metrics between real and synthetic image sets,
//! relates them to downstream detector accuracy, and ranks generators.

pub mod error;
pub mod seeding;
pub mod stats;

pub mod analysis;
pub mod bootstrap;
pub mod cli;
pub mod dataio;
pub mod embed;
pub mod fixtures;
pub mod manifest;
pub mod metric;
pub mod object;
pub mod screening;
pub mod study;

pub use error::{Error, Result};
