//! Dense tensors, reverse-mode gradients, optimizer and schedule.

mod graph;
mod gradcheck;
mod matrix;
mod params;
mod schedule;

pub use graph::{
    dropout, linear, masked_bce_value, mse, sigmoid, sigmoid_scalar, Gradients, Graph,
    SparseRows, Var, BCE_EPS,
};
pub use gradcheck::{grad_check, relative_error, GradCheckConfig, GradCheckReport};
pub use matrix::Matrix;
pub use params::{AdamConfig, Param, ParamId, ParamStore};
pub use schedule::{lr_at, ScheduleConfig};

use rand::Rng;

/// Uniform `[-limit, limit]` initialisation.
pub fn uniform<R: Rng + ?Sized>(rows: usize, cols: usize, limit: f64, rng: &mut R) -> Matrix {
    let values = (0..rows * cols)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Matrix::from_vec(rows, cols, values).expect("shape")
}

/// Glorot/Xavier uniform initialisation for a `fan_in × fan_out` weight.
pub fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(fan_in, fan_out, limit, rng)
}
