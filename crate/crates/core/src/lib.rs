//! Attribute scores and attribute contributions learned from overall
//! aesthetic labels.
//!
//! Each image arrives as a global feature vector plus one feature vector per
//! attribute. A distribution head per attribute (and one extra head for
//! everything unmodelled) predicts a score, a softmax layer predicts how much
//! each attribute contributes, and the overall score is their weighted sum.
//! Training needs only overall labels; attribute labels, when present, are
//! used for evaluation or for the supervised objective.

pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{F2sError, Result};
