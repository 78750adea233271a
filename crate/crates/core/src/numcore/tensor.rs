use crate::error::{shape, Error, Result};
use crate::scalar::Scalar;

/// Channel-major 2-D array: `channels` rows of `length` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2<T> {
    channels: usize,
    length: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor2<T> {
    /// Builds a tensor, rejecting size mismatches and non-finite values.
    pub fn new(channels: usize, length: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * length {
            return Err(shape(format!(
                "tensor data has {} values, expected {}x{}",
                data.len(),
                channels,
                length
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor data".into()));
        }
        Ok(Self { channels, length, data })
    }

    pub fn zeros(channels: usize, length: usize) -> Self {
        Self { channels, length, data: vec![T::zero(); channels * length] }
    }

    pub fn from_fn(channels: usize, length: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(channels * length);
        for c in 0..channels {
            for s in 0..length {
                data.push(f(c, s));
            }
        }
        Self { channels, length, data }
    }

    /// Single column vector of `values.len()` channels.
    pub fn column(values: Vec<T>) -> Self {
        Self { channels: values.len(), length: 1, data: values }
    }

    /// Skips the finiteness scan; used on hot paths where inputs were
    /// already validated.
    pub(crate) fn from_raw(channels: usize, length: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), channels * length);
        Self { channels, length, data }
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn length(&self) -> usize {
        self.length
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, c: usize) -> &[T] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    #[inline]
    pub fn row_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.length..(c + 1) * self.length]
    }

    #[inline]
    pub fn get(&self, c: usize, s: usize) -> T {
        self.data[c * self.length + s]
    }

    #[inline]
    pub fn set(&mut self, c: usize, s: usize, v: T) {
        self.data[c * self.length + s] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { channels: self.channels, length: self.length, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Same data viewed with a different shape of equal size.
    pub fn reshaped(self, channels: usize, length: usize) -> Result<Self> {
        if channels * length != self.data.len() {
            return Err(shape(format!(
                "cannot reshape {}x{} into {}x{}",
                self.channels, self.length, channels, length
            )));
        }
        Ok(Self { channels, length, data: self.data })
    }

    pub fn cast<U: Scalar>(&self) -> Tensor2<U> {
        Tensor2 { channels: self.channels, length: self.length, data: crate::scalar::cast_slice(&self.data) }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.channels == other.channels && self.length == other.length
    }
}
