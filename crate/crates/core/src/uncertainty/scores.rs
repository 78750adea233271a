//! Scorers share one convention: a larger score means less familiar input.

use crate::error::{invalid, Error, Result};
use crate::outlier::LofIndex;
use crate::scalar::Scalar;

/// Mean of the population variances of the left and right head outputs
/// across ensemble members.
pub fn ensemble_score<T: Scalar>(outputs: &[(T, T)]) -> Result<T> {
    if outputs.len() < 2 {
        return Err(invalid(format!("ensemble score needs at least 2 members, got {}", outputs.len())));
    }
    if outputs.iter().any(|(l, r)| !l.is_finite() || !r.is_finite()) {
        return Err(Error::NonFinite("ensemble member output".into()));
    }
    let n = T::of(outputs.len() as f64);
    // sorted summation keeps the result bit-identical under member permutation
    let var = |pick: fn(&(T, T)) -> T| {
        let mut xs: Vec<T> = outputs.iter().map(pick).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        if xs[0] == xs[xs.len() - 1] {
            return T::zero();
        }
        let mean = xs.iter().copied().sum::<T>() / n;
        xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n
    };
    Ok((var(|o| o.0) + var(|o| o.1)) / T::of(2.0))
}

/// LOF of the latent vector; returned as-is so that outliers score high.
pub fn latent_score<T: Scalar>(index: &LofIndex<T>, z: &[T]) -> Result<T> {
    index.score(z)
}

/// One minus the discriminator's belief that the window is real.
pub fn gan_score<T: Scalar>(d: T) -> Result<T> {
    if !(d >= T::zero() && d <= T::one()) {
        return Err(invalid(format!("discriminator output {d} is outside [0, 1]")));
    }
    Ok(T::one() - d)
}
