//! Numerical layer: matrices, activations, loss, the LSTM cell and its
//! sequence drivers, and a finite-difference gradient checker.
//!
//! Everything is generic over [`Real`] so the same code runs in `f32` for
//! training and in `f64` for gradient verification.

mod activation;
mod gradcheck;
mod lstm;
mod matrix;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};
use thiserror::Error;

pub use activation::{cross_entropy, sigmoid, softmax, tanh_v, PROB_FLOOR};
pub use gradcheck::{gradient_check, GradCheckError, FD_EPSILON, FD_THRESHOLD};
pub use lstm::{
    lstm_cell_backward, lstm_cell_backward_into, lstm_cell_forward, lstm_sequence,
    lstm_sequence_backward, CellGrads, CellState, Direction, LstmWeights, TapeEntry, GATES,
};
pub use matrix::Matrix;

/// Gate positions inside [`LstmWeights`] arrays.
pub mod gate {
    pub use super::lstm::{CANDIDATE, FORGET, INPUT, OUTPUT};
}

/// Scalar type usable by the numerical kernels.
pub trait Real:
    Float
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("dimension mismatch: {what}: expected {expected}, got {got}")]
    Mismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("sequence is empty")]
    EmptySequence,
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), ShapeError> {
    if expected == got {
        Ok(())
    } else {
        Err(ShapeError::Mismatch {
            what,
            expected,
            got,
        })
    }
}
