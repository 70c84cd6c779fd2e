//! Layer primitives with explicit backward passes.
//!
//! Convolution is cross-correlation (no kernel flip). Conv weights are laid
//! out as `(kernel_size, in_channels * filters)` with element
//! `[k][ci][f]` at `(k * in_channels + ci) * filters + f`; a dense layer is
//! the `kernel_size = 1` case with weights `(in_dim, out_dim)`.
//!
//! All reductions run in ascending index order so results are reproducible
//! bit for bit.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv1d,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Zero padding that preserves length (odd kernels only).
    Same,
    /// No padding; output length is `len - kernel_size + 1`.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub kind: LayerKind,
    pub weights: Tensor,
    pub bias: Vec<f64>,
    pub kernel_size: usize,
    pub in_channels: usize,
    pub filters: usize,
    pub padding: Padding,
}

/// Gradients returned by a layer's backward pass.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Vec<f64>,
}

fn glorot_fill(n: usize, fan_in: usize, fan_out: usize, rng: &mut SeededRng) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.uniform_in(-limit, limit)).collect()
}

impl LayerParams {
    /// Conv layer with Glorot-uniform weights and zero bias.
    pub fn conv1d(
        in_channels: usize,
        filters: usize,
        kernel_size: usize,
        padding: Padding,
        rng: &mut SeededRng,
    ) -> Self {
        let n = kernel_size * in_channels * filters;
        let w = glorot_fill(n, kernel_size * in_channels, kernel_size * filters, rng);
        Self {
            kind: LayerKind::Conv1d,
            weights: Tensor::from_vec(kernel_size, in_channels * filters, w)
                .expect("sized by construction"),
            bias: vec![0.0; filters],
            kernel_size,
            in_channels,
            filters,
            padding,
        }
    }

    pub fn dense(in_dim: usize, out_dim: usize, rng: &mut SeededRng) -> Self {
        let w = glorot_fill(in_dim * out_dim, in_dim, out_dim, rng);
        Self::dense_from(in_dim, out_dim, w, vec![0.0; out_dim]).expect("sized by construction")
    }

    pub fn dense_from(in_dim: usize, out_dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != out_dim {
            return Err(Error::Shape {
                op: "dense bias",
                left: format!("{out_dim}"),
                right: format!("{}", bias.len()),
            });
        }
        Ok(Self {
            kind: LayerKind::Dense,
            weights: Tensor::from_vec(in_dim, out_dim, weights)?,
            bias,
            kernel_size: 1,
            in_channels: in_dim,
            filters: out_dim,
            padding: Padding::None,
        })
    }

    pub fn conv1d_from(
        in_channels: usize,
        filters: usize,
        kernel_size: usize,
        padding: Padding,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if bias.len() != filters {
            return Err(Error::Shape {
                op: "conv1d bias",
                left: format!("{filters}"),
                right: format!("{}", bias.len()),
            });
        }
        Ok(Self {
            kind: LayerKind::Conv1d,
            weights: Tensor::from_vec(kernel_size, in_channels * filters, weights)?,
            bias,
            kernel_size,
            in_channels,
            filters,
            padding,
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weights: self.weights.zeros_like(),
            bias: vec![0.0; self.bias.len()],
            ..self.clone()
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.data().len() + self.bias.len()
    }

    pub fn accumulate(&mut self, g: &LayerGrads) {
        for (w, d) in self.weights.data_mut().iter_mut().zip(g.weights.data()) {
            *w += d;
        }
        for (b, d) in self.bias.iter_mut().zip(&g.bias) {
            *b += d;
        }
    }

    pub fn add_assign(&mut self, other: &LayerParams) {
        for (w, d) in self.weights.data_mut().iter_mut().zip(other.weights.data()) {
            *w += d;
        }
        for (b, d) in self.bias.iter_mut().zip(&other.bias) {
            *b += d;
        }
    }

    fn pad(&self) -> usize {
        match self.padding {
            Padding::Same => (self.kernel_size - 1) / 2,
            Padding::None => 0,
        }
    }

    fn out_len(&self, in_len: usize) -> Result<usize> {
        match self.padding {
            Padding::Same => Ok(in_len),
            Padding::None => {
                if in_len + 1 < self.kernel_size {
                    Err(Error::Shape {
                        op: "conv1d",
                        left: format!("length {in_len}"),
                        right: format!("kernel {}", self.kernel_size),
                    })
                } else {
                    Ok(in_len + 1 - self.kernel_size)
                }
            }
        }
    }

    fn check_input(&self, x: &Tensor, op: &'static str) -> Result<()> {
        if x.channels() != self.in_channels {
            return Err(Error::Shape {
                op,
                left: x.shape_string(),
                right: format!(
                    "weights ({}, {}) expecting {} input channels",
                    self.kernel_size,
                    self.in_channels * self.filters,
                    self.in_channels
                ),
            });
        }
        if self.padding == Padding::Same && self.kernel_size % 2 == 0 {
            return Err(Error::invalid(format!(
                "same padding needs an odd kernel, got {}",
                self.kernel_size
            )));
        }
        Ok(())
    }
}

/// 1-D cross-correlation with bias.
pub fn conv1d(x: &Tensor, p: &LayerParams) -> Result<Tensor> {
    p.check_input(x, "conv1d")?;
    let (len, cin) = x.shape();
    let nf = p.filters;
    let pad = p.pad();
    let out_len = p.out_len(len)?;
    let w = p.weights.data();
    let xd = x.data();
    let mut out = vec![0.0; out_len * nf];
    for t in 0..out_len {
        let y = &mut out[t * nf..(t + 1) * nf];
        y.copy_from_slice(&p.bias);
        for k in 0..p.kernel_size {
            let src = t + k;
            if src < pad || src - pad >= len {
                continue;
            }
            let xrow = &xd[(src - pad) * cin..(src - pad + 1) * cin];
            for (ci, &xv) in xrow.iter().enumerate() {
                let wrow = &w[(k * cin + ci) * nf..(k * cin + ci + 1) * nf];
                for (yv, wv) in y.iter_mut().zip(wrow) {
                    *yv += xv * wv;
                }
            }
        }
    }
    Tensor::from_vec(out_len, nf, out)
}

pub fn conv1d_backward(x: &Tensor, p: &LayerParams, dy: &Tensor) -> Result<LayerGrads> {
    p.check_input(x, "conv1d_backward")?;
    let (len, cin) = x.shape();
    let nf = p.filters;
    let pad = p.pad();
    let out_len = p.out_len(len)?;
    if dy.shape() != (out_len, nf) {
        return Err(Error::Shape {
            op: "conv1d_backward",
            left: dy.shape_string(),
            right: format!("({out_len}, {nf})"),
        });
    }
    let w = p.weights.data();
    let xd = x.data();
    let dyd = dy.data();
    let mut dx = vec![0.0; len * cin];
    let mut dw = vec![0.0; w.len()];
    let mut db = vec![0.0; nf];
    for t in 0..out_len {
        let g = &dyd[t * nf..(t + 1) * nf];
        for (b, gv) in db.iter_mut().zip(g) {
            *b += gv;
        }
        for k in 0..p.kernel_size {
            let src = t + k;
            if src < pad || src - pad >= len {
                continue;
            }
            let s = src - pad;
            for ci in 0..cin {
                let off = (k * cin + ci) * nf;
                let wrow = &w[off..off + nf];
                let xv = xd[s * cin + ci];
                let mut acc = 0.0;
                for (wv, gv) in wrow.iter().zip(g) {
                    acc += wv * gv;
                }
                dx[s * cin + ci] += acc;
                for (dwv, gv) in dw[off..off + nf].iter_mut().zip(g) {
                    *dwv += xv * gv;
                }
            }
        }
    }
    Ok(LayerGrads {
        input: Tensor::from_vec(len, cin, dx)?,
        weights: Tensor::from_vec(p.weights.len(), p.weights.channels(), dw)?,
        bias: db,
    })
}

/// Affine map applied independently at every time step.
pub fn dense(x: &Tensor, p: &LayerParams) -> Result<Tensor> {
    conv1d(x, p)
}

pub fn dense_backward(x: &Tensor, p: &LayerParams, dy: &Tensor) -> Result<LayerGrads> {
    conv1d_backward(x, p, dy)
}

/// Non-overlapping max pooling. Returns the pooled tensor and, for every
/// output element, the flat index of the winning input element. Ties go to
/// the earliest index.
pub fn maxpool1d(x: &Tensor, pool: usize) -> Result<(Tensor, Vec<usize>)> {
    if pool == 0 {
        return Err(Error::invalid("pool size must be >= 1"));
    }
    let (len, ch) = x.shape();
    if len % pool != 0 {
        return Err(Error::Shape {
            op: "maxpool1d",
            left: x.shape_string(),
            right: format!("pool {pool} (length must divide evenly)"),
        });
    }
    let out_len = len / pool;
    let xd = x.data();
    let mut out = Vec::with_capacity(out_len * ch);
    let mut arg = Vec::with_capacity(out_len * ch);
    for t in 0..out_len {
        for c in 0..ch {
            let mut best = (t * pool) * ch + c;
            for j in 1..pool {
                let idx = (t * pool + j) * ch + c;
                if xd[idx] > xd[best] {
                    best = idx;
                }
            }
            out.push(xd[best]);
            arg.push(best);
        }
    }
    Ok((Tensor::from_vec(out_len, ch, out)?, arg))
}

pub fn maxpool1d_backward(dy: &Tensor, argmax: &[usize], input_shape: (usize, usize)) -> Result<Tensor> {
    if dy.data().len() != argmax.len() {
        return Err(Error::Shape {
            op: "maxpool1d_backward",
            left: dy.shape_string(),
            right: format!("{} argmax entries", argmax.len()),
        });
    }
    let mut dx = Tensor::zeros(input_shape.0, input_shape.1);
    let d = dx.data_mut();
    for (&i, g) in argmax.iter().zip(dy.data()) {
        d[i] += g;
    }
    Ok(dx)
}

/// Nearest-neighbour repetition along the length axis.
pub fn upsample1d(x: &Tensor, factor: usize) -> Result<Tensor> {
    if factor == 0 {
        return Err(Error::invalid("upsample factor must be >= 1"));
    }
    let (len, ch) = x.shape();
    let mut out = Vec::with_capacity(len * factor * ch);
    for t in 0..len {
        let row = x.row(t);
        for _ in 0..factor {
            out.extend_from_slice(row);
        }
    }
    Tensor::from_vec(len * factor, ch, out)
}

pub fn upsample1d_backward(dy: &Tensor, factor: usize) -> Result<Tensor> {
    let (len, ch) = dy.shape();
    if factor == 0 || len % factor != 0 {
        return Err(Error::Shape {
            op: "upsample1d_backward",
            left: dy.shape_string(),
            right: format!("factor {factor}"),
        });
    }
    let mut dx = Tensor::zeros(len / factor, ch);
    let d = dx.data_mut();
    for t in 0..len {
        let base = (t / factor) * ch;
        for (c, g) in dy.row(t).iter().enumerate() {
            d[base + c] += g;
        }
    }
    Ok(dx)
}

pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    Tensor::from_vec(x.len(), x.channels(), data).expect("same size")
}

/// Subgradient at zero is taken as zero. `pre` is the pre-activation input.
pub fn relu_backward(pre: &Tensor, dy: &Tensor) -> Result<Tensor> {
    pre.check_same_shape(dy, "relu_backward")?;
    let data = pre
        .data()
        .iter()
        .zip(dy.data())
        .map(|(&p, &g)| if p > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(pre.len(), pre.channels(), data)
}

/// Stacks channels of two equal-length tensors: `(L, a) ++ (L, b) -> (L, a + b)`.
pub fn concat_channels(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            op: "concat_channels",
            left: a.shape_string(),
            right: b.shape_string(),
        });
    }
    let ch = a.channels() + b.channels();
    let mut out = Vec::with_capacity(a.len() * ch);
    for t in 0..a.len() {
        out.extend_from_slice(a.row(t));
        out.extend_from_slice(b.row(t));
    }
    Tensor::from_vec(a.len(), ch, out)
}

/// Inverse of [`concat_channels`] for gradients: splits after `left` channels.
pub fn split_channels(dy: &Tensor, left: usize) -> Result<(Tensor, Tensor)> {
    if left > dy.channels() {
        return Err(Error::Shape {
            op: "split_channels",
            left: dy.shape_string(),
            right: format!("split at {left}"),
        });
    }
    let right = dy.channels() - left;
    let mut a = Vec::with_capacity(dy.len() * left);
    let mut b = Vec::with_capacity(dy.len() * right);
    for t in 0..dy.len() {
        let row = dy.row(t);
        a.extend_from_slice(&row[..left]);
        b.extend_from_slice(&row[left..]);
    }
    Ok((
        Tensor::from_vec(dy.len(), left, a)?,
        Tensor::from_vec(dy.len(), right, b)?,
    ))
}

/// Masked mean absolute error. `mask[i] == false` excludes element `i`.
/// Returns the loss and its gradient w.r.t. `pred`.
pub fn mae_loss(pred: &Tensor, target: &Tensor, mask: Option<&[bool]>) -> Result<(f64, Tensor)> {
    let n = match mask {
        Some(m) => m.iter().filter(|&&b| b).count(),
        None => pred.data().len(),
    };
    let (sum, grad) = mae_terms(pred, target, mask, if n == 0 { 0.0 } else { 1.0 / n as f64 })?;
    Ok((if n == 0 { 0.0 } else { sum / n as f64 }, grad))
}

/// Sum of masked absolute errors and `scale * sign(pred - target)` as the
/// gradient. Used when the normaliser spans several tensors (a batch).
pub fn mae_terms(
    pred: &Tensor,
    target: &Tensor,
    mask: Option<&[bool]>,
    scale: f64,
) -> Result<(f64, Tensor)> {
    pred.check_same_shape(target, "mae_loss")?;
    if let Some(m) = mask {
        if m.len() != pred.data().len() {
            return Err(Error::Shape {
                op: "mae_loss mask",
                left: pred.shape_string(),
                right: format!("{} mask entries", m.len()),
            });
        }
    }
    let mut sum = 0.0;
    let mut grad = pred.zeros_like();
    for (i, ((p, t), g)) in pred
        .data()
        .iter()
        .zip(target.data())
        .zip(grad.data_mut())
        .enumerate()
    {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        let d = p - t;
        sum += d.abs();
        *g = if d > 0.0 {
            scale
        } else if d < 0.0 {
            -scale
        } else {
            0.0
        };
    }
    Ok((sum, grad))
}
