//! Span-based bi-encoder named-entity recognition trained with a
//! knowledge-graph teacher.
//!
//! The crate is organised bottom-up:
//!
//! - [`numeric`]: matrices, reverse-mode gradients, Adam, warmup/cosine schedule,
//!   finite-difference gradient checking.
//! - [`data`]: tokenisation, relation-row subsampling, template sentence
//!   generation, first-occurrence span alignment and the JSON-lines dataset.
//! - [`teacher`]: the knowledge graph, description features, message-passing
//!   node classifier, TransR, and the concatenated teacher embedding.
//! - [`student`]: span enumeration, the token/type bi-encoder and the
//!   binary cross-entropy language loss.
//! - [`distill`]: span/node pairing, the MSE distillation loss, the combined
//!   objective and the training loop with checkpoints.
//! - [`eval`]: flat greedy decoding, micro-F1 and checkpoint evaluation.

pub mod checks;
pub mod container;
pub mod data;
pub mod distill;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod numeric;
pub mod student;
pub mod teacher;

pub use error::{Error, Result};
