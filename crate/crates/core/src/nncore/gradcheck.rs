use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Central-difference step.
pub const FD_EPSILON: f64 = 1e-5;
/// Maximum acceptable relative error.
pub const FD_THRESHOLD: f64 = 1e-4;

/// Smallest random subset accepted when not checking every coordinate.
pub const MIN_SAMPLED_COORDS: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum GradCheckError {
    #[error("finite-difference step must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("analytic gradient has {got} entries, parameters have {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("loss is not finite at coordinate {0}")]
    NonFiniteLoss(usize),
}

/// Compares `analytic` against symmetric differences of `loss` around
/// `params` and returns `max_k |a - n| / max(1e-8, |a| + |n|)`.
///
/// With `sample = Some((count, seed))` only a seeded random subset of
/// `max(count, 200)` coordinates is probed (all of them if there are fewer).
pub fn gradient_check(
    mut loss: impl FnMut(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    eps: f64,
    sample: Option<(usize, u64)>,
) -> Result<f64, GradCheckError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(GradCheckError::BadEpsilon(eps));
    }
    if analytic.len() != params.len() {
        return Err(GradCheckError::LengthMismatch {
            expected: params.len(),
            got: analytic.len(),
        });
    }
    let n = params.len();
    let coords: Vec<usize> = match sample {
        Some((count, seed)) if count.max(MIN_SAMPLED_COORDS) < n => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = index::sample(&mut rng, n, count.max(MIN_SAMPLED_COORDS)).into_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..n).collect(),
    };

    let mut theta = params.to_vec();
    let mut worst = 0.0f64;
    for k in coords {
        let orig = theta[k];
        theta[k] = orig + eps;
        let plus = loss(&theta);
        theta[k] = orig - eps;
        let minus = loss(&theta);
        theta[k] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(GradCheckError::NonFiniteLoss(k));
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let a = analytic[k];
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_norm(theta: &[f64]) -> f64 {
        0.5 * theta.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn quadratic_is_exact() {
        let theta: Vec<f64> = (0..50).map(|i| (i as f64 - 25.0) / 7.0).collect();
        let err = gradient_check(half_norm, &theta, &theta, FD_EPSILON, None).unwrap();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn detects_wrong_gradient() {
        let theta = vec![1.0, 2.0, 3.0];
        let wrong = vec![1.0, 2.0, 3.5];
        let err = gradient_check(half_norm, &theta, &wrong, FD_EPSILON, None).unwrap();
        assert!(err > FD_THRESHOLD);
    }

    #[test]
    fn degenerate_step() {
        let theta = vec![1.0];
        for eps in [0.0, -1e-5, f64::NAN] {
            assert!(matches!(
                gradient_check(half_norm, &theta, &theta, eps, None),
                Err(GradCheckError::BadEpsilon(_))
            ));
        }
    }

    #[test]
    fn non_finite_loss() {
        // the minus step on coordinate 1 leaves the log's domain
        let theta = vec![1.0, 1e-6];
        let r = gradient_check(|t| t[0] + t[1].ln(), &theta, &[1.0, 1e6], 1e-5, None);
        assert_eq!(r, Err(GradCheckError::NonFiniteLoss(1)));
    }

    #[test]
    fn sampled_subset_visits_at_least_200() {
        let theta = vec![0.5; 1000];
        let mut calls = 0;
        let err = gradient_check(
            |t| {
                calls += 1;
                half_norm(t)
            },
            &theta,
            &theta,
            FD_EPSILON,
            Some((10, 3)),
        )
        .unwrap();
        assert!(err < 1e-9);
        assert_eq!(calls, 2 * MIN_SAMPLED_COORDS);
    }
}
