//! Character-level bidirectional LSTM classifier for malicious URL detection.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`]: CSV ingestion, the fixed byte vocabulary, fixed-length
//!   encoding and reproducible stratified splits.
//! - [`nncore`]: dense matrices, activations, the LSTM cell and its
//!   backward pass, sequence drivers and a finite-difference checker.
//! - [`classifier`]: embedding → Bi-LSTM → dropout → dense softmax, with
//!   end-to-end gradients, prediction and the binary model format.
//! - [`trainer`]: mini-batch Adam training with deterministic shuffling.
//! - [`evaluator`]: confusion matrix, per-class metrics and the
//!   classification report.

pub mod classifier;
pub mod corpus;
pub mod evaluator;
pub mod nncore;
pub mod synthetic;
pub mod trainer;

pub use classifier::{Hyperparams, Model, ModelParams, Prediction};
pub use corpus::{EncodedSequence, UrlClass, UrlRecord, Vocabulary};
pub use evaluator::{ConfusionMatrix, EvalReport};
pub use trainer::{TrainConfig, TrainHistory};
