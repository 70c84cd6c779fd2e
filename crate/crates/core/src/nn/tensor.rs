use std::fmt;

use crate::error::{Error, Result};

/// A `(length, channels)` matrix of 64-bit reals stored length-major:
/// element `(t, c)` lives at `t * channels + c`.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    len: usize,
    channels: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor({}x{})", self.len, self.channels)?;
        if self.data.len() <= 16 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}

impl Tensor {
    pub fn zeros(len: usize, channels: usize) -> Self {
        Self {
            len,
            channels,
            data: vec![0.0; len * channels],
        }
    }

    pub fn from_vec(len: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != len * channels {
            return Err(Error::Shape {
                op: "tensor",
                left: format!("({len}, {channels})"),
                right: format!("{} values", data.len()),
            });
        }
        Ok(Self {
            len,
            channels,
            data,
        })
    }

    /// Single-channel tensor.
    pub fn column(data: Vec<f64>) -> Self {
        Self {
            len: data.len(),
            channels: 1,
            data,
        }
    }

    /// Stacks equal-length columns side by side.
    pub fn stack_columns(cols: &[&[f64]]) -> Result<Self> {
        let channels = cols.len();
        let len = cols.first().map_or(0, |c| c.len());
        if let Some(bad) = cols.iter().find(|c| c.len() != len) {
            return Err(Error::Shape {
                op: "stack_columns",
                left: format!("length {len}"),
                right: format!("length {}", bad.len()),
            });
        }
        let mut data = Vec::with_capacity(len * channels);
        for t in 0..len {
            for col in cols {
                data.push(col[t]);
            }
        }
        Ok(Self {
            len,
            channels,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.len, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, t: usize, c: usize) -> f64 {
        self.data[t * self.channels + c]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    /// Copies out one channel.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        (0..self.len).map(|t| self.get(t, c)).collect()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.len, self.channels)
    }

    pub fn shape_string(&self) -> String {
        format!("({}, {})", self.len, self.channels)
    }

    pub(crate) fn check_same_shape(&self, other: &Tensor, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape {
                op,
                left: self.shape_string(),
                right: other.shape_string(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Tensor {
            data,
            ..*self
        })
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        self.check_same_shape(other, "add_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
