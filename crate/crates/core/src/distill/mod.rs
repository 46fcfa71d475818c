//! Student–teacher training: pairing, losses, the loop and checkpoints.

mod checkpoint;
mod config;
mod loss;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{total_loss, LossWeights, Schedule, TrainConfig};
pub use loss::{build_distill_batch, distill_loss, step_loss, DistillBatch, StepLoss};
pub use train::{build_vocab, init_student, train, train_model, StepRow, TrainOutcome, TrainReport};
