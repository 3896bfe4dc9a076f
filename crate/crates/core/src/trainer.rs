//! Mini-batch training with Adam and seeded shuffling.

use std::fmt::Write as _;

use log::info;
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::classifier::{
    backward_stats, forward, init_params, Hyperparams, Mode, Model, ModelError, ModelParams,
    Prediction,
};
use crate::corpus::{encode_url, EncodedSequence, UrlClass, UrlRecord, Vocabulary};
use crate::evaluator::{confusion, metrics, EvalError, EvalReport};
use crate::nncore::{cross_entropy, Real};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("non-finite gradient entry in array {array}, element {index}")]
    NonFiniteGradient { array: usize, index: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    pub seed: u64,
    pub shuffle: bool,
    /// Run examples serially instead of on the rayon pool.
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            seed: 0,
            shuffle: true,
            deterministic: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if self.eps_adam.is_nan() || self.eps_adam <= 0.0 {
            return bad("eps_adam must be positive");
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState<T> {
    pub m: ModelParams<T>,
    pub v: ModelParams<T>,
    pub t: u64,
}

impl<T: Real> OptState<T> {
    pub fn new(hp: &Hyperparams) -> Self {
        Self {
            m: ModelParams::zeros(hp),
            v: ModelParams::zeros(hp),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update, applied in place.
///
/// Gradients are checked for non-finite entries before anything is touched.
pub fn adam_step<T: Real>(
    params: &mut ModelParams<T>,
    grads: &ModelParams<T>,
    state: &mut OptState<T>,
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    for (array, g) in grads.arrays().iter().enumerate() {
        if let Some(index) = g.iter().position(|v| !v.is_finite()) {
            return Err(TrainError::NonFiniteGradient { array, index });
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let lr = T::from_f64_lossy(cfg.learning_rate);
    let b1 = T::from_f64_lossy(cfg.beta1);
    let b2 = T::from_f64_lossy(cfg.beta2);
    let eps = T::from_f64_lossy(cfg.eps_adam);
    let bc1 = T::from_f64_lossy(1.0 - cfg.beta1.powi(t));
    let bc2 = T::from_f64_lossy(1.0 - cfg.beta2.powi(t));
    let one = T::one();

    let mut ms = state.m.arrays_mut();
    let mut vs = state.v.arrays_mut();
    for (k, (p, g)) in params
        .arrays_mut()
        .into_iter()
        .zip(grads.arrays())
        .enumerate()
    {
        let (m, v) = (&mut ms[k], &mut vs[k]);
        for j in 0..p.len() {
            m[j] = b1 * m[j] + (one - b1) * g[j];
            v[j] = b2 * v[j] + (one - b2) * g[j] * g[j];
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    /// `epoch,train_loss,train_acc,val_loss,val_acc`; validation columns are
    /// empty when no validation set was given.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for r in &self.epochs {
            let _ = writeln!(
                out,
                "{},{:.6},{:.6},{},{}",
                r.epoch,
                r.train_loss,
                r.train_acc,
                opt(r.val_loss),
                opt(r.val_acc)
            );
        }
        out
    }
}

fn encode_all(
    records: &[UrlRecord],
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Vec<(EncodedSequence, UrlClass)>, TrainError> {
    records
        .iter()
        .map(|r| {
            let seq = encode_url(&r.url, vocab, max_len).map_err(ModelError::from)?;
            Ok((seq, r.label))
        })
        .collect()
}

/// Mean inference-mode loss and accuracy over already encoded examples.
fn infer_stats(
    params: &ModelParams<f32>,
    hp: &Hyperparams,
    data: &[(EncodedSequence, UrlClass)],
    parallel: bool,
) -> Result<(f64, f64), TrainError> {
    let one = |(seq, label): &(EncodedSequence, UrlClass)| -> Result<(f64, bool), ModelError> {
        let (probs, _) = forward(params, hp, seq, Mode::Infer, 0)?;
        let loss = f64::from(cross_entropy(&probs, label.code()));
        Ok((loss, Prediction::from_probs(&probs).label == *label))
    };
    let results: Vec<_> = if parallel {
        data.par_iter().map(one).collect()
    } else {
        data.iter().map(one).collect()
    };
    let (mut loss, mut hits) = (0.0, 0usize);
    for r in results {
        let (l, hit) = r?;
        loss += l;
        hits += usize::from(hit);
    }
    let n = data.len().max(1) as f64;
    Ok((loss / n, hits as f64 / n))
}

/// Reorders `order` for the next epoch and splits it into batches; the
/// last batch may be short.
fn plan_epoch<'a>(
    order: &'a mut [usize],
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> std::slice::Chunks<'a, usize> {
    if cfg.shuffle {
        order.shuffle(rng);
    }
    order.chunks(cfg.batch_size)
}

/// Trains a fresh model initialised from `hp.seed`.
///
/// Each epoch visits every training record once in a seeded shuffled order;
/// the last partial batch is trained on.
pub fn fit(
    train: &[UrlRecord],
    val: Option<&[UrlRecord]>,
    hp: &Hyperparams,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<(Model, TrainHistory), TrainError> {
    cfg.validate()?;
    hp.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    let model = Model::new(init_params(hp), *hp, vocab.clone())?;
    fit_from(model, train, val, cfg)
}

/// Continues training an existing model.
pub fn fit_from(
    mut model: Model,
    train: &[UrlRecord],
    val: Option<&[UrlRecord]>,
    cfg: &TrainConfig,
) -> Result<(Model, TrainHistory), TrainError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    let hp = model.hp;
    let train_set = encode_all(train, &model.vocab, hp.max_len)?;
    let val_set = val
        .map(|v| encode_all(v, &model.vocab, hp.max_len))
        .transpose()?;
    let parallel = !cfg.deterministic;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = OptState::new(&hp);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        let (mut loss_sum, mut correct) = (0.0f64, 0usize);
        for (b, chunk) in plan_epoch(&mut order, cfg, &mut rng).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_set[i].clone()));
            let dropout_seed = rng.next_u64();
            let (grads, stats) =
                backward_stats(&model.params, &hp, &batch, dropout_seed, parallel)?;
            if !stats.mean_loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b });
            }
            adam_step(&mut model.params, &grads, &mut opt, cfg)?;
            loss_sum += f64::from(stats.mean_loss) * chunk.len() as f64;
            correct += stats.correct;
        }
        let n = train_set.len() as f64;
        let (val_loss, val_acc) = match &val_set {
            Some(v) if !v.is_empty() => {
                let (l, a) = infer_stats(&model.params, &hp, v, parallel)?;
                (Some(l), Some(a))
            }
            _ => (None, None),
        };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / n,
            train_acc: correct as f64 / n,
            val_loss,
            val_acc,
        };
        info!(
            "epoch {epoch}/{}: train_loss={:.4} train_acc={:.4}{}",
            cfg.epochs,
            record.train_loss,
            record.train_acc,
            match (val_loss, val_acc) {
                (Some(l), Some(a)) => format!(" val_loss={l:.4} val_acc={a:.4}"),
                _ => String::new(),
            }
        );
        history.epochs.push(record);
    }
    Ok((model, history))
}

/// Predicts every record and builds the evaluation report.
pub fn evaluate_on(model: &Model, records: &[UrlRecord]) -> Result<EvalReport, TrainError> {
    let pairs = records
        .par_iter()
        .map(|r| model.predict(&r.url).map(|p| (r.label, p.label)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(metrics(&confusion(&pairs))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::default_vocabulary;

    fn tiny_hp() -> Hyperparams {
        Hyperparams {
            vocab_size: 97,
            embed_dim: 4,
            hidden_dim: 3,
            max_len: 20,
            dropout_rate: 0.0,
            ..Hyperparams::default()
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let hp = tiny_hp();
        let mut p = init_params::<f32>(&hp);
        let before = p.clone();
        let mut st = OptState::new(&hp);
        adam_step(
            &mut p,
            &ModelParams::zeros(&hp),
            &mut st,
            &TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(p, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn single_scalar_step() {
        // θ = 0, g = 1, t = 1: m = 0.1, v = 0.001, m̂ = v̂ = 1, Δ = -lr / (1 + eps)
        let hp = Hyperparams {
            vocab_size: 1,
            embed_dim: 1,
            hidden_dim: 1,
            ..Hyperparams::default()
        };
        let mut p = ModelParams::<f64>::zeros(&hp);
        let mut g = ModelParams::<f64>::zeros(&hp);
        g.b_out[0] = 1.0;
        let cfg = TrainConfig::default();
        let mut st = OptState::new(&hp);
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p.b_out[0] - expected).abs() < 1e-15, "{}", p.b_out[0]);
        assert!((st.m.b_out[0] - 0.1).abs() < 1e-15);
        assert!((st.v.b_out[0] - 0.001).abs() < 1e-15);
        assert_eq!(p.b_out[1], 0.0);
    }

    #[test]
    fn adam_is_pure() {
        let hp = tiny_hp();
        let p0 = init_params::<f32>(&hp);
        let mut g = init_params::<f32>(&Hyperparams { seed: 9, ..hp });
        g.scale(0.01);
        let cfg = TrainConfig::default();
        let run = || {
            let mut p = p0.clone();
            let mut st = OptState::new(&hp);
            adam_step(&mut p, &g, &mut st, &cfg).unwrap();
            adam_step(&mut p, &g, &mut st, &cfg).unwrap();
            (p, st)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_lr_is_identity() {
        let hp = tiny_hp();
        let mut p = init_params::<f32>(&hp);
        let before = p.clone();
        let g = init_params::<f32>(&Hyperparams { seed: 2, ..hp });
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let mut st = OptState::new(&hp);
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn non_finite_gradient_aborts_untouched() {
        let hp = tiny_hp();
        let mut p = init_params::<f32>(&hp);
        let before = p.clone();
        let mut g = ModelParams::<f32>::zeros(&hp);
        g.fwd.b[2][1] = f32::NAN;
        let mut st = OptState::new(&hp);
        let err = adam_step(&mut p, &g, &mut st, &TrainConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            TrainError::NonFiniteGradient {
                array: 11,
                index: 1
            }
        ));
        assert_eq!(p, before);
        assert_eq!(st.t, 0);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for cfg in [
            TrainConfig {
                epochs: 0,
                ..Default::default()
            },
            TrainConfig {
                batch_size: 0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: -1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(cfg.validate(), Err(TrainError::InvalidConfig(_))));
        }
        let train = [UrlRecord::new("http://a.com", UrlClass::Benign).unwrap()];
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(fit(&train, None, &tiny_hp(), &default_vocabulary(), &cfg).is_err());
        assert!(matches!(
            fit(
                &[],
                None,
                &tiny_hp(),
                &default_vocabulary(),
                &TrainConfig::default()
            ),
            Err(TrainError::EmptyTrainSet)
        ));
    }

    #[test]
    fn epoch_plan_is_a_permutation() {
        let cfg = TrainConfig {
            batch_size: 7,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut order: Vec<usize> = (0..30).collect();
        let mut previous = Vec::new();
        for _ in 0..4 {
            let batches: Vec<Vec<usize>> = plan_epoch(&mut order, &cfg, &mut rng)
                .map(<[usize]>::to_vec)
                .collect();
            assert_eq!(batches.len(), 5);
            assert_eq!(batches[4].len(), 2);
            let mut seen: Vec<usize> = batches.concat();
            assert_ne!(seen, previous);
            previous = seen.clone();
            seen.sort_unstable();
            assert_eq!(seen, (0..30).collect::<Vec<_>>());
        }
        let fixed = TrainConfig {
            shuffle: false,
            ..cfg
        };
        let mut order: Vec<usize> = (0..30).collect();
        let flat: Vec<usize> = plan_epoch(&mut order, &fixed, &mut rng)
            .flatten()
            .copied()
            .collect();
        assert_eq!(flat, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn history_csv_layout() {
        let h = TrainHistory {
            epochs: vec![
                EpochRecord {
                    epoch: 1,
                    train_loss: 1.25,
                    train_acc: 0.5,
                    val_loss: None,
                    val_acc: None,
                },
                EpochRecord {
                    epoch: 2,
                    train_loss: 0.5,
                    train_acc: 0.75,
                    val_loss: Some(0.6),
                    val_acc: Some(0.7),
                },
            ],
        };
        assert_eq!(
            h.to_csv(),
            "epoch,train_loss,train_acc,val_loss,val_acc\n\
             1,1.250000,0.500000,,\n\
             2,0.500000,0.750000,0.600000,0.700000\n"
        );
    }

    #[test]
    fn evaluate_on_extremes() {
        let model = Model::new(
            ModelParams::zeros(&Hyperparams::default()),
            Hyperparams::default(),
            default_vocabulary(),
        )
        .unwrap();
        // zero model always says benign
        let right = [UrlRecord::new("http://a.com", UrlClass::Benign).unwrap()];
        assert_eq!(evaluate_on(&model, &right).unwrap().accuracy, 1.0);
        let wrong = [UrlRecord::new("http://a.com", UrlClass::Malware).unwrap()];
        assert_eq!(evaluate_on(&model, &wrong).unwrap().accuracy, 0.0);
    }
}
