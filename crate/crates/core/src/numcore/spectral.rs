//! Spectral-norm constraint for weight matrices.
//!
//! Conv weights `[out][in][tap]` are viewed as an `out x (in*tap)` matrix,
//! dense weights as `out x in`. After each optimizer update the constrained
//! matrices are rescaled so their largest singular value is at most one.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{Network, Stage};
use crate::scalar::Scalar;

const MAX_ITERS: usize = 200;
const REL_TOL: f64 = 1e-10;

/// Largest singular value of a row-major `rows x cols` matrix by power
/// iteration, warm-started from (and updating) `u`.
pub fn power_iteration<T: Scalar>(w: &[T], rows: usize, cols: usize, u: &mut [T], max_iters: usize) -> T {
    debug_assert_eq!(w.len(), rows * cols);
    let mut v = vec![T::zero(); cols];
    let mut sigma = T::zero();
    for _ in 0..max_iters {
        v.iter_mut().for_each(|x| *x = T::zero());
        for r in 0..rows {
            let ur = u[r];
            for (vc, &wv) in v.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
                *vc += wv * ur;
            }
        }
        let vn = norm(&v);
        if vn == T::zero() {
            return T::zero();
        }
        v.iter_mut().for_each(|x| *x /= vn);
        for r in 0..rows {
            u[r] = w[r * cols..(r + 1) * cols].iter().zip(&v).map(|(&a, &b)| a * b).sum();
        }
        let next = norm(u);
        if next == T::zero() {
            return T::zero();
        }
        u.iter_mut().for_each(|x| *x /= next);
        let done = (next - sigma).abs() <= T::of(REL_TOL) * next;
        sigma = next;
        if done {
            break;
        }
    }
    sigma
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn matrix_dims<T: Scalar>(stage: &Stage<T>) -> Option<(usize, usize)> {
    match stage {
        Stage::Block(b) => Some((b.conv.shape.out_channels, b.conv.shape.in_channels * b.conv.shape.kernel)),
        Stage::Dense(d) => Some((d.outputs, d.inputs)),
        _ => None,
    }
}

/// Persistent power-iteration vectors, one per weighted stage.
#[derive(Debug, Clone)]
pub struct SpectralConstraint<T> {
    vectors: Vec<Vec<T>>,
}

impl<T: Scalar> SpectralConstraint<T> {
    pub fn new(net: &Network<T>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = net
            .stages()
            .iter()
            .filter_map(matrix_dims)
            .map(|(rows, _)| {
                let v: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                v.into_iter().map(|x| T::of(x / n)).collect()
            })
            .collect();
        Self { vectors }
    }

    /// Rescales every weight matrix whose spectral norm exceeds one.
    /// Returns the norms measured before rescaling.
    pub fn project(&mut self, net: &mut Network<T>) -> Vec<T> {
        let mut sigmas = Vec::new();
        let mut k = 0;
        for stage in net.stages_mut() {
            let Some((rows, cols)) = matrix_dims(stage) else { continue };
            let w = match stage {
                Stage::Block(b) => &mut b.conv.weights,
                Stage::Dense(d) => &mut d.weights,
                _ => unreachable!(),
            };
            let sigma = power_iteration(w, rows, cols, &mut self.vectors[k], MAX_ITERS);
            if sigma > T::one() {
                w.iter_mut().for_each(|x| *x /= sigma);
            }
            sigmas.push(sigma);
            k += 1;
        }
        sigmas
    }

    /// Current spectral norm estimates without modifying weights.
    pub fn measure(&self, net: &Network<T>) -> Vec<T> {
        let mut out = Vec::new();
        let mut k = 0;
        for stage in net.stages() {
            let Some((rows, cols)) = matrix_dims(stage) else { continue };
            let w = match stage {
                Stage::Block(b) => &b.conv.weights,
                Stage::Dense(d) => &d.weights,
                _ => unreachable!(),
            };
            let mut u = self.vectors[k].clone();
            out.push(power_iteration(w, rows, cols, &mut u, MAX_ITERS));
            k += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_norm() {
        let w = [3.0, 0.0, 0.0, 0.0, -5.0, 0.0];
        let mut u = vec![0.6, 0.8];
        let s = power_iteration(&w, 2, 3, &mut u, 500);
        assert!((s - 5.0f64).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_has_zero_norm() {
        let mut u = vec![1.0, 0.0];
        assert_eq!(power_iteration(&[0.0f64; 4], 2, 2, &mut u, 10), 0.0);
    }
}
