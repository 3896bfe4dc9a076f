use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Hyperparams;
use crate::nncore::{gate, LstmWeights, Matrix, Real};

/// Number of flat arrays in a [`ModelParams`]: E, 12 per direction, W_out, b_out.
pub const ARRAY_COUNT: usize = 27;

/// Complete learnable state of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    /// `vocab_size × embed_dim`
    pub embedding: Matrix<T>,
    pub fwd: LstmWeights<T>,
    pub bwd: LstmWeights<T>,
    /// `num_classes × 2·hidden_dim`; columns `0..hidden` read the forward state.
    pub w_out: Matrix<T>,
    pub b_out: Vec<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn zeros(hp: &Hyperparams) -> Self {
        Self {
            embedding: Matrix::zeros(hp.vocab_size, hp.embed_dim),
            fwd: LstmWeights::zeros(hp.embed_dim, hp.hidden_dim),
            bwd: LstmWeights::zeros(hp.embed_dim, hp.hidden_dim),
            w_out: Matrix::zeros(hp.num_classes, 2 * hp.hidden_dim),
            b_out: vec![T::zero(); hp.num_classes],
        }
    }

    /// Flat arrays in file order: E, fwd{W_i..W_g, U_i..U_g, b_i..b_g},
    /// bwd{same}, W_out, b_out.
    pub fn arrays(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(ARRAY_COUNT);
        out.push(self.embedding.data());
        out.extend(self.fwd.arrays());
        out.extend(self.bwd.arrays());
        out.push(self.w_out.data());
        out.push(&self.b_out);
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(ARRAY_COUNT);
        out.push(self.embedding.data_mut());
        out.extend(self.fwd.arrays_mut());
        out.extend(self.bwd.arrays_mut());
        out.push(self.w_out.data_mut());
        out.push(&mut self.b_out);
        out
    }

    pub fn param_count(&self) -> usize {
        self.arrays().iter().map(|a| a.len()).sum()
    }

    pub fn flatten(&self) -> Vec<T> {
        self.arrays().concat()
    }

    /// Overwrites every parameter from `flat` (same order as [`Self::flatten`]).
    pub fn assign_flat(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut rest = flat;
        for arr in self.arrays_mut() {
            let (head, tail) = rest.split_at(arr.len());
            arr.copy_from_slice(head);
            rest = tail;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.arrays()
            .iter()
            .all(|a| a.iter().all(|v| v.is_finite()))
    }

    /// `self += other`, elementwise.
    pub fn add_assign(&mut self, other: &Self) {
        for (dst, src) in self.arrays_mut().into_iter().zip(other.arrays()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, k: T) {
        for arr in self.arrays_mut() {
            arr.iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn fill_zero(&mut self) {
        for arr in self.arrays_mut() {
            arr.fill(T::zero());
        }
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            embedding: self.embedding.cast(),
            fwd: self.fwd.cast(),
            bwd: self.bwd.cast(),
            w_out: self.w_out.cast(),
            b_out: self
                .b_out
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
        }
    }

    /// Checks every array against the shapes implied by `hp`.
    pub fn matches(&self, hp: &Hyperparams) -> bool {
        let expected = ModelParams::<T>::zeros(hp);
        self.arrays()
            .iter()
            .zip(expected.arrays())
            .all(|(a, b)| a.len() == b.len())
            && self.embedding.cols() == hp.embed_dim
            && self.fwd.embed_dim() == hp.embed_dim
            && self.bwd.embed_dim() == hp.embed_dim
            && self.w_out.cols() == 2 * hp.hidden_dim
    }
}

/// Closed-form parameter count for the given dimensions.
pub fn param_count_for(hp: &Hyperparams) -> usize {
    let (v, e, h, k) = (hp.vocab_size, hp.embed_dim, hp.hidden_dim, hp.num_classes);
    v * e + 2 * 4 * (h * e + h * h + h) + k * 2 * h + k
}

fn glorot<T: Real>(m: &mut Matrix<T>, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in m.data_mut() {
        *v = T::from_f64_lossy(rng.random_range(-limit..=limit));
    }
}

fn init_lstm<T: Real>(w: &mut LstmWeights<T>, rng: &mut ChaCha8Rng) {
    let (e, h) = (w.embed_dim(), w.hidden_dim());
    for m in &mut w.w {
        glorot(m, e, h, rng);
    }
    for m in &mut w.u {
        glorot(m, h, h, rng);
    }
    w.b[gate::FORGET].fill(T::one());
}

/// Uniform Glorot initialisation from `hp.seed`; biases zero except the
/// forget gates, which start at 1.
///
/// Draw order is E, forward W/U matrices, backward W/U matrices, W_out.
pub fn init_params<T: Real>(hp: &Hyperparams) -> ModelParams<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from(hp.seed));
    let mut p = ModelParams::zeros(hp);
    glorot(&mut p.embedding, hp.vocab_size, hp.embed_dim, &mut rng);
    init_lstm(&mut p.fwd, &mut rng);
    init_lstm(&mut p.bwd, &mut rng);
    glorot(&mut p.w_out, 2 * hp.hidden_dim, hp.num_classes, &mut rng);
    p
}
