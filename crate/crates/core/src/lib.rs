//! Core engine of the rubrics gradebook: rubric model, grading, class
//! statistics and feedback export.
//!
//! Everything here is a pure function over immutable values; persistence and
//! the HTTP service live in sibling crates.

pub mod domain;
pub mod export;
pub mod grading;
pub mod score;
pub mod stats;

pub use domain::Id;
pub use score::{Percentage, Score};
