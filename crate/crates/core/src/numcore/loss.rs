use crate::error::{shape, Result};
use crate::scalar::Scalar;

/// Mean squared error and its gradient with respect to `pred`.
pub fn mse<T: Scalar>(pred: &[T], target: &[T]) -> Result<(T, Vec<T>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(shape(format!("mse over {} predictions and {} targets", pred.len(), target.len())));
    }
    let n = T::of(pred.len() as f64);
    let two = T::of(2.0);
    let mut loss = T::zero();
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            loss += d * d;
            two * d / n
        })
        .collect();
    Ok((loss / n, grad))
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Binary cross-entropy on a logit: returns the loss and `d loss / d logit`.
pub fn bce_with_logit<T: Scalar>(logit: T, target_is_real: bool) -> (T, T) {
    if target_is_real {
        (softplus(-logit), sigmoid(logit) - T::one())
    } else {
        (softplus(logit), sigmoid(logit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_value_and_gradient() {
        let (l, g) = mse(&[1.0, 3.0], &[0.0, 1.0]).unwrap();
        assert_eq!(l, 2.5);
        assert_eq!(g, vec![1.0, 2.0]);
        assert!(mse::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn bce_gradient_matches_difference() {
        for &a in &[-3.0f64, -0.2, 0.0, 1.7] {
            for &real in &[true, false] {
                let h = 1e-6;
                let (_, g) = bce_with_logit(a, real);
                let fd = (bce_with_logit(a + h, real).0 - bce_with_logit(a - h, real).0) / (2.0 * h);
                assert!((g - fd).abs() < 1e-8);
            }
        }
        assert!(softplus(800.0f64).is_finite());
        assert!(softplus(-800.0f64) >= 0.0);
    }
}
