//! Minimal numeric core: channel x time tensors, dilated causal
//! convolution, sequential TCN networks with reverse-mode gradients,
//! losses, optimizers and the weight file format.

pub mod conv;
pub mod layers;
pub mod loss;
pub mod optim;
pub mod serial;
pub mod spectral;
pub mod tensor;

pub use conv::{dilated_causal_conv, ConvShape, ConvSpec};
pub use layers::{forward_blocks, Activation, Dense, GradTape, Grads, Network, Stage, StageArch, TcnBlock};
pub use loss::{bce_with_logit, mse, sigmoid, softplus};
pub use optim::{Optimizer, OptimizerKind};
pub use serial::{read_params, write_params, ParamsHeader, ScalerStats, FORMAT_VERSION, MAGIC};
pub use spectral::{power_iteration, SpectralConstraint};
pub use tensor::Tensor2;
