use serde::{Deserialize, Serialize};

use super::layers::{Grads, Network};
use crate::error::{invalid, shape, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First-order optimizer state for one set of parameter tensors.
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
    steps: u64,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, sizes: &[usize]) -> Self {
        let zeros = || sizes.iter().map(|&n| vec![T::zero(); n]).collect::<Vec<_>>();
        let (first, second) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam { .. } => (zeros(), zeros()),
        };
        Self { kind, first, second, steps: 0 }
    }

    pub fn for_network(kind: OptimizerKind, net: &Network<T>) -> Self {
        Self::new(kind, &net.param_sizes())
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update. Nothing is modified when a gradient is not finite.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &Grads<T>, lr: f64) -> Result<()> {
        if !(lr >= 0.0) || !lr.is_finite() {
            return Err(invalid(format!("learning rate must be finite and >= 0, got {lr}")));
        }
        if params.len() != grads.tensors.len()
            || params.iter().zip(&grads.tensors).any(|(p, g)| p.len() != g.len())
        {
            return Err(shape("parameter and gradient shapes differ"));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient".into()));
        }
        self.steps += 1;
        let lr_t = T::of(lr);
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(&grads.tensors) {
                    for (w, &d) in p.iter_mut().zip(g) {
                        *w -= lr_t * d;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                if self.first.len() != params.len() {
                    return Err(shape("optimizer state was built for different parameters"));
                }
                let t = self.steps as i32;
                let b1 = T::of(beta1);
                let b2 = T::of(beta2);
                let c1 = T::one() - T::of(beta1.powi(t));
                let c2 = T::one() - T::of(beta2.powi(t));
                let eps = T::of(eps);
                for (k, (p, g)) in params.iter_mut().zip(&grads.tensors).enumerate() {
                    let m = &mut self.first[k];
                    let v = &mut self.second[k];
                    for i in 0..p.len() {
                        let d = g[i];
                        m[i] = b1 * m[i] + (T::one() - b1) * d;
                        v[i] = b2 * v[i] + (T::one() - b2) * d * d;
                        let mh = m[i] / c1;
                        let vh = v[i] / c2;
                        p[i] -= lr_t * mh / (vh.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn step_network(&mut self, net: &mut Network<T>, grads: &Grads<T>, lr: f64) -> Result<()> {
        let mut params = net.param_slices_mut();
        self.step(&mut params, grads, lr)
    }
}
