use super::Real;

/// Probabilities are clamped to this before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[inline]
pub(crate) fn sigmoid_scalar<T: Real>(x: T) -> T {
    // split on sign so exp never overflows
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn sigmoid<T: Real>(x: &[T]) -> Vec<T> {
    x.iter().map(|&v| sigmoid_scalar(v)).collect()
}

pub fn tanh_v<T: Real>(x: &[T]) -> Vec<T> {
    x.iter().map(|v| v.tanh()).collect()
}

/// Max-subtracted softmax.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln(max(probs[label], 1e-12))`
pub fn cross_entropy<T: Real>(probs: &[T], label: usize) -> T {
    let p = probs[label].max(T::from_f64_lossy(PROB_FLOOR));
    -p.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_points() {
        assert_eq!(sigmoid(&[0.0f64]), vec![0.5]);
        assert_eq!(tanh_v(&[0.0f64]), vec![0.0]);
        assert_eq!(softmax(&[0.0f64; 4]), vec![0.25; 4]);
    }

    #[test]
    fn softmax_is_stable() {
        let p = softmax(&[1000.0f32, 0.0, 0.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-6);
        assert!(p[1] < 1e-30);
        let p = softmax(&[-1000.0f64, 0.0, 0.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn cross_entropy_values() {
        let u = [0.25f64; 4];
        for label in 0..4 {
            assert!((cross_entropy(&u, label) - 4f64.ln()).abs() < 1e-12);
        }
        assert!((cross_entropy(&u, 0) - 1.386294).abs() < 1e-6);
        assert_eq!(cross_entropy(&[1.0f64, 0.0, 0.0, 0.0], 0), 0.0);
        let clamped = cross_entropy(&[1.0f64, 0.0, 0.0, 0.0], 2);
        assert!((clamped - 27.631021).abs() < 1e-6);
        assert!(cross_entropy(&[1.0f32, 0.0, 0.0, 0.0], 2).is_finite());
    }

    #[test]
    fn sigmoid_extremes_finite() {
        for x in [-1e3f32, -88.0, 88.0, 1e3] {
            let s = sigmoid(&[x])[0];
            assert!(s.is_finite() && (0.0..=1.0).contains(&s));
        }
    }

    proptest! {
        #[test]
        fn sigmoid_symmetry(x in -30.0f64..30.0) {
            let s = sigmoid(&[x, -x]);
            prop_assert!((s[0] + s[1] - 1.0).abs() < 1e-12);
            prop_assert!(s[0] > 0.0 && s[0] < 1.0);
        }

        #[test]
        fn tanh_range(x in -15.0f64..15.0) {
            let t = tanh_v(&[x])[0];
            prop_assert!(t > -1.0 && t < 1.0);
        }

        #[test]
        fn softmax_distribution(
            logits in prop::collection::vec(-1e3f64..1e3, 1..8),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&logits);
            let sum: f64 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-6);
            prop_assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0 && *v <= 1.0));
            let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();
            let q = softmax(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn softmax_sums_to_one_f32(logits in prop::collection::vec(-1e3f32..1e3, 4)) {
            let p = softmax(&logits);
            let sum: f32 = p.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-6);
        }
    }
}
