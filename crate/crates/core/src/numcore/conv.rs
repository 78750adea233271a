//! Dilated causal 1-D convolution.
//!
//! Output at sample `s` is `bias + sum_j w[j] * x[s - d*j]` for every
//! in/out channel pair, with samples before the window start read as zero.
//! Output length equals input length.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor2;
use crate::error::{invalid, shape, Error, Result};
use crate::scalar::Scalar;

/// Shape of a causal convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvShape {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub dilation: usize,
}

impl ConvShape {
    pub fn weight_count(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel == 0 || self.dilation == 0 {
            return Err(invalid("convolution kernel and dilation must be >= 1"));
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(invalid("convolution channel counts must be >= 1"));
        }
        Ok(())
    }

    /// Number of past samples (including the current one) an output sees.
    pub fn receptive_field(&self) -> usize {
        (self.kernel - 1) * self.dilation + 1
    }
}

/// Convolution weights, laid out `[out][in][tap]`; tap 0 multiplies the
/// current sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSpec<T> {
    pub shape: ConvShape,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvSpec<T> {
    pub fn new(shape: ConvShape, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        shape.validate()?;
        if weights.len() != shape.weight_count() {
            return Err(self::shape_err(format!(
                "conv weights: got {}, expected {}",
                weights.len(),
                shape.weight_count()
            )));
        }
        if bias.len() != shape.out_channels {
            return Err(self::shape_err(format!(
                "conv bias: got {}, expected {}",
                bias.len(),
                shape.out_channels
            )));
        }
        let spec = Self { shape, weights, bias };
        spec.ensure_finite()?;
        Ok(spec)
    }

    pub fn zeros(shape: ConvShape) -> Self {
        Self { shape, weights: vec![T::zero(); shape.weight_count()], bias: vec![T::zero(); shape.out_channels] }
    }

    /// Pass-through filter: tap 0 of channel `i -> i` is one.
    pub fn identity(channels: usize, kernel: usize, dilation: usize) -> Self {
        let shape = ConvShape { in_channels: channels, out_channels: channels, kernel, dilation };
        let mut spec = Self::zeros(shape);
        for c in 0..channels {
            spec.weights[(c * channels + c) * kernel] = T::one();
        }
        spec
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.weights.iter().chain(&self.bias).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("convolution weights".into()))
        }
    }

    #[inline]
    pub fn weight(&self, o: usize, i: usize, j: usize) -> T {
        self.weights[(o * self.shape.in_channels + i) * self.shape.kernel + j]
    }
}

fn shape_err(msg: String) -> Error {
    shape(msg)
}

/// Evaluates the dilated causal convolution with left zero-padding.
pub fn dilated_causal_conv<T: Scalar>(x: &Tensor2<T>, spec: &ConvSpec<T>) -> Result<Tensor2<T>> {
    if x.channels() != spec.shape.in_channels {
        return Err(shape(format!(
            "conv expects {} input channels, got {}",
            spec.shape.in_channels,
            x.channels()
        )));
    }
    spec.ensure_finite()?;
    Ok(conv_forward(x, spec))
}

pub(crate) fn conv_forward<T: Scalar>(x: &Tensor2<T>, spec: &ConvSpec<T>) -> Tensor2<T> {
    let ConvShape { in_channels, out_channels, kernel, dilation } = spec.shape;
    let len = x.length();
    let mut out = Vec::with_capacity(out_channels * len);
    for o in 0..out_channels {
        let start = out.len();
        out.resize(start + len, spec.bias[o]);
        let row = &mut out[start..start + len];
        for i in 0..in_channels {
            let xr = x.row(i);
            let wbase = (o * in_channels + i) * kernel;
            for j in 0..kernel {
                let shift = j * dilation;
                if shift >= len {
                    break;
                }
                let w = spec.weights[wbase + j];
                for (y, &xv) in row[shift..].iter_mut().zip(&xr[..len - shift]) {
                    *y += w * xv;
                }
            }
        }
    }
    Tensor2::from_raw(out_channels, len, out)
}

/// Accumulates weight and bias gradients and returns the input gradient.
pub(crate) fn conv_backward<T: Scalar>(
    x: &Tensor2<T>,
    spec: &ConvSpec<T>,
    grad_out: &Tensor2<T>,
    grad_w: &mut [T],
    grad_b: &mut [T],
) -> Tensor2<T> {
    let ConvShape { in_channels, out_channels, kernel, dilation } = spec.shape;
    let len = x.length();
    let mut grad_x = Tensor2::zeros(in_channels, len);
    for o in 0..out_channels {
        let gy = grad_out.row(o);
        grad_b[o] += gy.iter().copied().sum::<T>();
        for i in 0..in_channels {
            let xr = x.row(i);
            let wbase = (o * in_channels + i) * kernel;
            for j in 0..kernel {
                let shift = j * dilation;
                if shift >= len {
                    break;
                }
                let w = spec.weights[wbase + j];
                let mut acc = T::zero();
                for (&g, &xv) in gy[shift..].iter().zip(&xr[..len - shift]) {
                    acc += g * xv;
                }
                grad_w[wbase + j] += acc;
                let gx = grad_x.row_mut(i);
                for (d, &g) in gx[..len - shift].iter_mut().zip(&gy[shift..]) {
                    *d += w * g;
                }
            }
        }
    }
    grad_x
}
