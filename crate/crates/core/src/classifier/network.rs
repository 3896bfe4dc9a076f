//! End-to-end forward and backward passes for one model.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Hyperparams, ModelError, ModelParams};
use crate::corpus::{EncodedSequence, UrlClass};
use crate::nncore::{
    cross_entropy, lstm_sequence, lstm_sequence_backward, softmax, Direction, Real, TapeEntry,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTape<T> {
    /// Vocabulary indices of the valid timesteps.
    pub indices: Vec<u32>,
    pub fwd: Vec<TapeEntry<T>>,
    pub bwd: Vec<TapeEntry<T>>,
    /// `[h_fwd_final, h_bwd_final]` before dropout.
    pub features: Vec<T>,
    /// Per-feature dropout multiplier: 0, 1/(1-rate), or 1 in inference.
    pub mask: Vec<T>,
    pub dropped: Vec<T>,
    pub probs: Vec<T>,
}

fn check_sequence(hp: &Hyperparams, seq: &EncodedSequence) -> Result<(), ModelError> {
    if seq.valid_len == 0 {
        return Err(ModelError::EmptySequence);
    }
    if seq.valid_len > seq.indices.len() || seq.valid_len > hp.max_len {
        return Err(ModelError::SequenceTooLong {
            valid_len: seq.valid_len,
            max_len: hp.max_len.min(seq.indices.len()),
        });
    }
    if let Some(&bad) = seq.valid().iter().find(|&&i| i as usize >= hp.vocab_size) {
        return Err(ModelError::IndexOutOfRange {
            index: bad,
            vocab_size: hp.vocab_size,
        });
    }
    Ok(())
}

/// Inverted-dropout multipliers for `n` features. Rate 0 keeps everything
/// with multiplier exactly 1.
pub fn dropout_mask<T: Real>(n: usize, rate: f32, seed: u64) -> Vec<T> {
    if rate <= 0.0 {
        return vec![T::one(); n];
    }
    let rate = f64::from(rate);
    let keep_scale = T::from_f64_lossy(1.0 / (1.0 - rate));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < rate {
                T::zero()
            } else {
                keep_scale
            }
        })
        .collect()
}

/// Embeds the valid prefix, runs both directions, pools the final hidden
/// states, applies dropout in [`Mode::Train`], then the dense softmax head.
pub fn forward<T: Real>(
    params: &ModelParams<T>,
    hp: &Hyperparams,
    seq: &EncodedSequence,
    mode: Mode,
    dropout_seed: u64,
) -> Result<(Vec<T>, ForwardTape<T>), ModelError> {
    check_sequence(hp, seq)?;
    let indices = seq.valid().to_vec();
    let inputs: Vec<&[T]> = indices
        .iter()
        .map(|&i| params.embedding.row(i as usize))
        .collect();
    let (fwd_state, fwd) = lstm_sequence(&inputs, &params.fwd, Direction::Forward)?;
    let (bwd_state, bwd) = lstm_sequence(&inputs, &params.bwd, Direction::Backward)?;

    let mut features = fwd_state.h;
    features.extend_from_slice(&bwd_state.h);
    let mask = match mode {
        Mode::Train => dropout_mask(features.len(), hp.dropout_rate, dropout_seed),
        Mode::Infer => vec![T::one(); features.len()],
    };
    let dropped: Vec<T> = features.iter().zip(&mask).map(|(&f, &m)| f * m).collect();

    let mut logits = params.b_out.clone();
    params.w_out.matvec_acc(&dropped, &mut logits);
    let probs = softmax(&logits);
    let tape = ForwardTape {
        indices,
        fwd,
        bwd,
        features,
        mask,
        dropped,
        probs: probs.clone(),
    };
    Ok((probs, tape))
}

/// Per-example dropout seed derived from the batch seed and position.
pub fn example_seed(batch_seed: u64, position: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(batch_seed);
    rng.set_stream(position as u64);
    rng.next_u64()
}

/// Summary of a batch pass alongside its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchStats<T> {
    pub mean_loss: T,
    /// Examples whose (train-mode) argmax matched the label.
    pub correct: usize,
}

fn argmax<T: Real>(v: &[T]) -> usize {
    (0..v.len()).fold(0, |best, k| if v[k] > v[best] { k } else { best })
}

/// Unscaled cross-entropy gradient of one example, added into `grads`.
/// Returns the example's loss and whether its argmax was right.
fn example_backward<T: Real>(
    params: &ModelParams<T>,
    hp: &Hyperparams,
    seq: &EncodedSequence,
    label: UrlClass,
    dropout_seed: u64,
    grads: &mut ModelParams<T>,
) -> Result<(T, bool), ModelError> {
    let (probs, tape) = forward(params, hp, seq, Mode::Train, dropout_seed)?;
    let loss = cross_entropy(&probs, label.code());
    let hit = argmax(&probs) == label.code();

    // d(loss)/d(logits) = p - onehot
    let mut d_logits = probs;
    d_logits[label.code()] -= T::one();
    grads.w_out.outer_acc(&d_logits, &tape.dropped);
    for (b, &d) in grads.b_out.iter_mut().zip(&d_logits) {
        *b += d;
    }
    let mut d_features = vec![T::zero(); tape.dropped.len()];
    params.w_out.matvec_t_acc(&d_logits, &mut d_features);
    for (d, &m) in d_features.iter_mut().zip(&tape.mask) {
        *d *= m;
    }
    let (d_fwd, d_bwd) = d_features.split_at(hp.hidden_dim);

    let len = tape.indices.len();
    let gx_fwd = lstm_sequence_backward(&tape.fwd, d_fwd, &params.fwd, &mut grads.fwd)?;
    for (t, gx) in gx_fwd.iter().enumerate() {
        add_row(grads, tape.indices[t], gx);
    }
    let gx_bwd = lstm_sequence_backward(&tape.bwd, d_bwd, &params.bwd, &mut grads.bwd)?;
    for (k, gx) in gx_bwd.iter().enumerate() {
        // backward direction processed timestep len-1-k at step k
        add_row(grads, tape.indices[len - 1 - k], gx);
    }
    Ok((loss, hit))
}

fn add_row<T: Real>(grads: &mut ModelParams<T>, index: u32, gx: &[T]) {
    for (e, &g) in grads.embedding.row_mut(index as usize).iter_mut().zip(gx) {
        *e += g;
    }
}

/// Mean cross-entropy over `batch` and its gradient with respect to every
/// parameter. Example `i` uses dropout seed `example_seed(dropout_seed, i)`.
pub fn backward<T: Real>(
    params: &ModelParams<T>,
    hp: &Hyperparams,
    batch: &[(EncodedSequence, UrlClass)],
    dropout_seed: u64,
) -> Result<(ModelParams<T>, T), ModelError> {
    backward_with(params, hp, batch, dropout_seed, false)
}

/// As [`backward`], optionally computing examples on the rayon pool.
///
/// Per-example gradients are always reduced in batch order, so both paths
/// return bit-identical results.
pub fn backward_with<T: Real>(
    params: &ModelParams<T>,
    hp: &Hyperparams,
    batch: &[(EncodedSequence, UrlClass)],
    dropout_seed: u64,
    parallel: bool,
) -> Result<(ModelParams<T>, T), ModelError> {
    backward_stats(params, hp, batch, dropout_seed, parallel).map(|(g, s)| (g, s.mean_loss))
}

/// As [`backward_with`], also counting correct train-mode predictions.
pub fn backward_stats<T: Real>(
    params: &ModelParams<T>,
    hp: &Hyperparams,
    batch: &[(EncodedSequence, UrlClass)],
    dropout_seed: u64,
    parallel: bool,
) -> Result<(ModelParams<T>, BatchStats<T>), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut total = ModelParams::zeros(hp);
    let mut loss_sum = T::zero();
    let mut correct = 0;
    if parallel {
        let per_example: Vec<Result<_, ModelError>> = batch
            .par_iter()
            .enumerate()
            .map(|(i, (seq, label))| {
                let mut g = ModelParams::zeros(hp);
                let seed = example_seed(dropout_seed, i);
                example_backward(params, hp, seq, *label, seed, &mut g).map(|l| (g, l))
            })
            .collect();
        for item in per_example {
            let (g, (l, hit)) = item?;
            total.add_assign(&g);
            loss_sum += l;
            correct += usize::from(hit);
        }
    } else {
        let mut scratch = ModelParams::zeros(hp);
        for (i, (seq, label)) in batch.iter().enumerate() {
            scratch.fill_zero();
            let seed = example_seed(dropout_seed, i);
            let (l, hit) = example_backward(params, hp, seq, *label, seed, &mut scratch)?;
            total.add_assign(&scratch);
            loss_sum += l;
            correct += usize::from(hit);
        }
    }
    let n = T::from_f64_lossy(batch.len() as f64);
    total.scale(T::one() / n);
    let stats = BatchStats {
        mean_loss: loss_sum / n,
        correct,
    };
    Ok((total, stats))
}

/// Mean loss only, in the same dropout configuration as [`backward`].
pub fn batch_loss<T: Real>(
    params: &ModelParams<T>,
    hp: &Hyperparams,
    batch: &[(EncodedSequence, UrlClass)],
    dropout_seed: u64,
    mode: Mode,
) -> Result<T, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut sum = T::zero();
    for (i, (seq, label)) in batch.iter().enumerate() {
        let (probs, _) = forward(params, hp, seq, mode, example_seed(dropout_seed, i))?;
        sum += cross_entropy(&probs, label.code());
    }
    Ok(sum / T::from_f64_lossy(batch.len() as f64))
}
