//! Span-based bi-encoder: windowed spans, token and type encoders, matching scores.

mod model;
mod spans;

pub use model::{
    dedup_types, language_loss, language_targets, Dense, Forward, StudentConfig, StudentIds,
    StudentModel,
};
pub use spans::{enumerate_spans, SpanIndexSet};
