//! Embedding → Bi-LSTM → dropout → dense softmax.

mod format;
mod network;
mod params;

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{encode_url, CorpusError, EncodedSequence, UrlClass, Vocabulary};
use crate::nncore::ShapeError;

pub use format::{decode, encode, load, save, FormatError, FORMAT_VERSION, MAGIC};
pub use network::{
    backward, backward_stats, backward_with, batch_loss, dropout_mask, example_seed, forward,
    BatchStats, ForwardTape, Mode,
};
pub use params::{init_params, param_count_for, ModelParams, ARRAY_COUNT};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("sequence has no valid timesteps")]
    EmptySequence,
    #[error("valid length {valid_len} exceeds max length {max_len}")]
    SequenceTooLong { valid_len: usize, max_len: usize },
    #[error("index {index} is outside the vocabulary (size {vocab_size})")]
    IndexOutOfRange { index: u32, vocab_size: usize },
    #[error("batch is empty")]
    EmptyBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hyperparams {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Per direction; the pooled feature vector is twice this.
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub max_len: usize,
    pub dropout_rate: f32,
    pub seed: u32,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            vocab_size: 97,
            embed_dim: 32,
            hidden_dim: 64,
            num_classes: UrlClass::COUNT,
            max_len: crate::corpus::DEFAULT_MAX_LEN,
            dropout_rate: 0.3,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidHyperparams(msg));
        for (name, v) in [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("max_len", self.max_len),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.num_classes != UrlClass::COUNT {
            return bad(format!("num_classes must be 4, got {}", self.num_classes));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!(
                "dropout_rate {} is outside [0, 1)",
                self.dropout_rate
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub label: UrlClass,
    /// Probability of `label`.
    pub confidence: f32,
    /// Indexed by class code.
    pub probabilities: [f32; UrlClass::COUNT],
}

impl Prediction {
    /// Argmax with ties going to the lowest class code.
    pub fn from_probs(probs: &[f32]) -> Self {
        let mut best = 0;
        for (k, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = k;
            }
        }
        let mut probabilities = [0.0; UrlClass::COUNT];
        probabilities.copy_from_slice(&probs[..UrlClass::COUNT]);
        Self {
            label: UrlClass::from_code(best).expect("four classes"),
            confidence: probs[best],
            probabilities,
        }
    }
}

/// Trained parameters bundled with the preprocessing they were trained under.
///
/// Immutable once built; share it behind an `Arc` for concurrent inference.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: ModelParams<f32>,
    pub hp: Hyperparams,
    pub vocab: Vocabulary,
}

impl Model {
    pub fn new(
        params: ModelParams<f32>,
        hp: Hyperparams,
        vocab: Vocabulary,
    ) -> Result<Self, ModelError> {
        hp.validate()?;
        if vocab.size() as usize != hp.vocab_size {
            return Err(ModelError::InvalidHyperparams(format!(
                "vocabulary size {} differs from vocab_size {}",
                vocab.size(),
                hp.vocab_size
            )));
        }
        if !params.matches(&hp) {
            return Err(ModelError::InvalidHyperparams(
                "parameter shapes do not match hyperparameters".into(),
            ));
        }
        Ok(Self { params, hp, vocab })
    }

    /// Freshly initialised model using the default vocabulary.
    pub fn initialised(hp: Hyperparams) -> Result<Self, ModelError> {
        Self::new(init_params(&hp), hp, Vocabulary::default())
    }

    pub fn encode(&self, url: &str) -> Result<EncodedSequence, ModelError> {
        Ok(encode_url(url, &self.vocab, self.hp.max_len)?)
    }

    pub fn predict(&self, url: &str) -> Result<Prediction, ModelError> {
        predict(&self.params, &self.hp, &self.vocab, url)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        save(&self.params, &self.hp, &self.vocab, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        let (params, hp, vocab) = load(path)?;
        Ok(Self { params, hp, vocab })
    }
}

/// Encodes, runs inference and takes the argmax.
pub fn predict(
    params: &ModelParams<f32>,
    hp: &Hyperparams,
    vocab: &Vocabulary,
    url: &str,
) -> Result<Prediction, ModelError> {
    if url.trim().is_empty() {
        return Err(CorpusError::EmptyUrl.into());
    }
    let seq = encode_url(url, vocab, hp.max_len)?;
    let (probs, _) = forward(params, hp, &seq, Mode::Infer, 0)?;
    Ok(Prediction::from_probs(&probs))
}
