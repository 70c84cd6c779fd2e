use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nn::{
    concat_channels, conv1d, conv1d_backward, dense, dense_backward, maxpool1d,
    maxpool1d_backward, relu, relu_backward, split_channels, upsample1d, upsample1d_backward,
    LayerParams, Padding, Parameters, Tensor,
};
use crate::rng::SeededRng;
use crate::session::{Channel, CHANNELS};
use crate::trainer::NormStats;

pub const ENC1_FILTERS: usize = 32;
pub const ENC2_FILTERS: usize = 16;
pub const DEC1_FILTERS: usize = 16;
pub const DEC2_FILTERS: usize = 32;
pub const KERNEL: usize = 5;
pub const POOL: usize = 2;
pub const FUSION_HIDDEN: usize = 16;
pub const DEFAULT_WINDOW: usize = 512;
pub const TRAIN_STRIDE: usize = 64;
pub const MODEL_VERSION: u32 = 1;

/// Residual convolutional autoencoder for one channel.
///
/// ```text
/// x -> conv(32,k5,relu) -> pool2 -> conv(16,k5,relu) -> pool2 = e
/// c = e + conv(16,k1)(e)
/// up2(c ++ e) -> conv(16,k5,relu) -> up2 -> conv(32,k5,relu) -> conv(1,k5)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAutoencoder {
    pub enc_conv1: LayerParams,
    pub enc_conv2: LayerParams,
    pub residual_conv: LayerParams,
    pub dec_conv1: LayerParams,
    pub dec_conv2: LayerParams,
    pub out_conv: LayerParams,
}

/// Activations kept from the forward pass for backprop.
#[derive(Debug, Clone)]
pub struct AeCache {
    x: Tensor,
    z1: Tensor,
    a1: Tensor,
    arg1: Vec<usize>,
    p1: Tensor,
    z2: Tensor,
    a2: Tensor,
    arg2: Vec<usize>,
    e: Tensor,
    cat_up: Tensor,
    z3: Tensor,
    u2: Tensor,
    z4: Tensor,
    a4: Tensor,
}

impl ChannelAutoencoder {
    pub fn new(rng: &mut SeededRng) -> Self {
        Self {
            enc_conv1: LayerParams::conv1d(1, ENC1_FILTERS, KERNEL, Padding::Same, rng),
            enc_conv2: LayerParams::conv1d(ENC1_FILTERS, ENC2_FILTERS, KERNEL, Padding::Same, rng),
            residual_conv: LayerParams::conv1d(ENC2_FILTERS, ENC2_FILTERS, 1, Padding::Same, rng),
            dec_conv1: LayerParams::conv1d(2 * ENC2_FILTERS, DEC1_FILTERS, KERNEL, Padding::Same, rng),
            dec_conv2: LayerParams::conv1d(DEC1_FILTERS, DEC2_FILTERS, KERNEL, Padding::Same, rng),
            out_conv: LayerParams::conv1d(DEC2_FILTERS, 1, KERNEL, Padding::Same, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            enc_conv1: self.enc_conv1.zeros_like(),
            enc_conv2: self.enc_conv2.zeros_like(),
            residual_conv: self.residual_conv.zeros_like(),
            dec_conv1: self.dec_conv1.zeros_like(),
            dec_conv2: self.dec_conv2.zeros_like(),
            out_conv: self.out_conv.zeros_like(),
        }
    }

    pub fn layers(&self) -> [(&'static str, &LayerParams); 6] {
        [
            ("enc_conv1", &self.enc_conv1),
            ("enc_conv2", &self.enc_conv2),
            ("residual_conv", &self.residual_conv),
            ("dec_conv1", &self.dec_conv1),
            ("dec_conv2", &self.dec_conv2),
            ("out_conv", &self.out_conv),
        ]
    }

    pub fn layers_mut(&mut self) -> [&mut LayerParams; 6] {
        [
            &mut self.enc_conv1,
            &mut self.enc_conv2,
            &mut self.residual_conv,
            &mut self.dec_conv1,
            &mut self.dec_conv2,
            &mut self.out_conv,
        ]
    }

    fn check_window(x: &Tensor) -> Result<()> {
        if x.channels() != 1 {
            return Err(Error::Shape {
                op: "channel autoencoder",
                left: x.shape_string(),
                right: "(L, 1)".into(),
            });
        }
        if x.len() == 0 || x.len() % (POOL * POOL) != 0 {
            return Err(Error::Shape {
                op: "channel autoencoder",
                left: x.shape_string(),
                right: format!("length divisible by {}", POOL * POOL),
            });
        }
        Ok(())
    }

    /// Encoder output (the latent code) for a `(L, 1)` window.
    pub fn encode(&self, x: &Tensor) -> Result<Tensor> {
        Self::check_window(x)?;
        let a1 = relu(&conv1d(x, &self.enc_conv1)?);
        let (p1, _) = maxpool1d(&a1, POOL)?;
        let a2 = relu(&conv1d(&p1, &self.enc_conv2)?);
        Ok(maxpool1d(&a2, POOL)?.0)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<(Tensor, AeCache)> {
        Self::check_window(x)?;
        let z1 = conv1d(x, &self.enc_conv1)?;
        let a1 = relu(&z1);
        let (p1, arg1) = maxpool1d(&a1, POOL)?;
        let z2 = conv1d(&p1, &self.enc_conv2)?;
        let a2 = relu(&z2);
        let (e, arg2) = maxpool1d(&a2, POOL)?;
        let r = conv1d(&e, &self.residual_conv)?;
        let c = r.add(&e)?;
        let cat_up = upsample1d(&concat_channels(&c, &e)?, POOL)?;
        let z3 = conv1d(&cat_up, &self.dec_conv1)?;
        let a3 = relu(&z3);
        let u2 = upsample1d(&a3, POOL)?;
        let z4 = conv1d(&u2, &self.dec_conv2)?;
        let a4 = relu(&z4);
        let out = conv1d(&a4, &self.out_conv)?;
        let cache = AeCache {
            x: x.clone(),
            z1,
            a1,
            arg1,
            p1,
            z2,
            a2,
            arg2,
            e,
            cat_up,
            z3,
            u2,
            z4,
            a4,
        };
        Ok((out, cache))
    }

    /// Accumulates parameter gradients into `grad` and returns d(loss)/d(input).
    pub fn backward(&self, cache: &AeCache, dout: &Tensor, grad: &mut Self) -> Result<Tensor> {
        let g = conv1d_backward(&cache.a4, &self.out_conv, dout)?;
        grad.out_conv.accumulate(&g);
        let dz4 = relu_backward(&cache.z4, &g.input)?;
        let g = conv1d_backward(&cache.u2, &self.dec_conv2, &dz4)?;
        grad.dec_conv2.accumulate(&g);
        let da3 = upsample1d_backward(&g.input, POOL)?;
        let dz3 = relu_backward(&cache.z3, &da3)?;
        let g = conv1d_backward(&cache.cat_up, &self.dec_conv1, &dz3)?;
        grad.dec_conv1.accumulate(&g);
        let dcat = upsample1d_backward(&g.input, POOL)?;
        let (dc, mut de) = split_channels(&dcat, ENC2_FILTERS)?;
        // c = e + residual(e)
        de.add_assign(&dc)?;
        let g = conv1d_backward(&cache.e, &self.residual_conv, &dc)?;
        grad.residual_conv.accumulate(&g);
        de.add_assign(&g.input)?;
        let da2 = maxpool1d_backward(&de, &cache.arg2, cache.a2.shape())?;
        let dz2 = relu_backward(&cache.z2, &da2)?;
        let g = conv1d_backward(&cache.p1, &self.enc_conv2, &dz2)?;
        grad.enc_conv2.accumulate(&g);
        let da1 = maxpool1d_backward(&g.input, &cache.arg1, cache.a1.shape())?;
        let dz1 = relu_backward(&cache.z1, &da1)?;
        let g = conv1d_backward(&cache.x, &self.enc_conv1, &dz1)?;
        grad.enc_conv1.accumulate(&g);
        Ok(g.input)
    }
}

impl Parameters for ChannelAutoencoder {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers().into_iter().flat_map(|(_, l)| l.param_slices()).collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .into_iter()
            .flat_map(|l| l.param_slices_mut())
            .collect()
    }
}

/// Pointwise combiner: at each time step, 5 -> dense(16, relu) -> dense(5).
#[derive(Debug, Clone, PartialEq)]
pub struct FusionNetwork {
    pub hidden: LayerParams,
    pub output: LayerParams,
}

#[derive(Debug, Clone)]
pub struct FusionCache {
    x: Tensor,
    z: Tensor,
    h: Tensor,
}

impl FusionNetwork {
    pub fn random(rng: &mut SeededRng) -> Self {
        Self {
            hidden: LayerParams::dense(CHANNELS.len(), FUSION_HIDDEN, rng),
            output: LayerParams::dense(FUSION_HIDDEN, CHANNELS.len(), rng),
        }
    }

    /// Exact identity built from hidden units `relu(x_i)` and `relu(-x_i)`;
    /// the remaining hidden units get random input weights and zero output
    /// weights, so they start silent but can learn.
    pub fn identity(rng: &mut SeededRng) -> Self {
        let n = CHANNELS.len();
        let mut fusion = Self::random(rng);
        let wh = fusion.hidden.weights.data_mut();
        for i in 0..n {
            for j in 0..2 * n {
                wh[i * FUSION_HIDDEN + j] = 0.0;
            }
            wh[i * FUSION_HIDDEN + i] = 1.0;
            wh[i * FUSION_HIDDEN + n + i] = -1.0;
        }
        let wo = fusion.output.weights.data_mut();
        wo.iter_mut().for_each(|w| *w = 0.0);
        for i in 0..n {
            wo[i * n + i] = 1.0;
            wo[(n + i) * n + i] = -1.0;
        }
        fusion
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            hidden: self.hidden.zeros_like(),
            output: self.output.zeros_like(),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<(Tensor, FusionCache)> {
        let z = dense(x, &self.hidden)?;
        let h = relu(&z);
        let y = dense(&h, &self.output)?;
        Ok((
            y,
            FusionCache {
                x: x.clone(),
                z,
                h,
            },
        ))
    }

    pub fn backward(&self, cache: &FusionCache, dy: &Tensor, grad: &mut Self) -> Result<Tensor> {
        let g = dense_backward(&cache.h, &self.output, dy)?;
        grad.output.accumulate(&g);
        let dz = relu_backward(&cache.z, &g.input)?;
        let g = dense_backward(&cache.x, &self.hidden, &dz)?;
        grad.hidden.accumulate(&g);
        Ok(g.input)
    }
}

impl Parameters for FusionNetwork {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.hidden.param_slices();
        v.extend(self.output.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.hidden.param_slices_mut();
        v.extend(self.output.param_slices_mut());
        v
    }
}

/// Trainable part of the denoiser: five channel autoencoders plus fusion.
/// Also used as the gradient accumulator (same shapes, zero-initialized).
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserNet {
    pub per_channel: BTreeMap<Channel, ChannelAutoencoder>,
    pub fusion: FusionNetwork,
}

#[derive(Debug, Clone)]
pub struct NetCache {
    channels: Vec<AeCache>,
    fusion: FusionCache,
}

impl DenoiserNet {
    pub fn zeros_like(&self) -> Self {
        Self {
            per_channel: self
                .per_channel
                .iter()
                .map(|(c, ae)| (*c, ae.zeros_like()))
                .collect(),
            fusion: self.fusion.zeros_like(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (mine, theirs) in self.param_slices_mut().into_iter().zip(other.param_slices()) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
    }

    /// Runs the five channel autoencoders; `x` is `(L, 5)` in canonical order.
    pub fn forward_channels(&self, x: &Tensor) -> Result<Tensor> {
        let cols: Vec<Vec<f64>> = self
            .per_channel
            .values()
            .enumerate()
            .map(|(k, ae)| Ok(ae.forward(&Tensor::column(x.channel(k)))?.into_vec()))
            .collect::<Result<_>>()?;
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        Tensor::stack_columns(&refs)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Tensor) -> Result<(Tensor, NetCache)> {
        if x.channels() != CHANNELS.len() {
            return Err(Error::Shape {
                op: "denoiser forward",
                left: x.shape_string(),
                right: format!("(L, {})", CHANNELS.len()),
            });
        }
        let mut caches = Vec::with_capacity(CHANNELS.len());
        let mut cols = Vec::with_capacity(CHANNELS.len());
        for (k, ae) in self.per_channel.values().enumerate() {
            let (y, cache) = ae.forward_cached(&Tensor::column(x.channel(k)))?;
            cols.push(y.into_vec());
            caches.push(cache);
        }
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let stacked = Tensor::stack_columns(&refs)?;
        let (y, fusion) = self.fusion.forward_cached(&stacked)?;
        Ok((
            y,
            NetCache {
                channels: caches,
                fusion,
            },
        ))
    }

    /// Accumulates gradients into `grad`; returns d(loss)/d(input) as `(L, 5)`.
    pub fn backward(&self, cache: &NetCache, dy: &Tensor, grad: &mut Self) -> Result<Tensor> {
        let dstack = self.fusion.backward(&cache.fusion, dy, &mut grad.fusion)?;
        let mut dcols = Vec::with_capacity(CHANNELS.len());
        for (k, ((ae, ae_grad), ae_cache)) in self
            .per_channel
            .values()
            .zip(grad.per_channel.values_mut())
            .zip(&cache.channels)
            .enumerate()
        {
            let dk = Tensor::column(dstack.channel(k));
            dcols.push(ae.backward(ae_cache, &dk, ae_grad)?.into_vec());
        }
        let refs: Vec<&[f64]> = dcols.iter().map(Vec::as_slice).collect();
        Tensor::stack_columns(&refs)
    }

    /// Named parameter tensors in checkpoint order.
    pub fn named_layers(&self) -> Vec<(String, &LayerParams)> {
        let mut out = Vec::new();
        for (c, ae) in &self.per_channel {
            for (name, layer) in ae.layers() {
                out.push((format!("{c}.{name}"), layer));
            }
        }
        out.push(("fusion.hidden".into(), &self.fusion.hidden));
        out.push(("fusion.output".into(), &self.fusion.output));
        out
    }
}

impl Parameters for DenoiserNet {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = self
            .per_channel
            .values()
            .flat_map(|ae| ae.param_slices())
            .collect();
        v.extend(self.fusion.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = self
            .per_channel
            .values_mut()
            .flat_map(|ae| ae.param_slices_mut())
            .collect();
        v.extend(self.fusion.param_slices_mut());
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserModel {
    pub net: DenoiserNet,
    pub norm_stats: BTreeMap<Channel, NormStats>,
    pub window: usize,
    pub stride: usize,
    pub version: u32,
}

impl DenoiserModel {
    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::Version {
                found: self.version,
                supported: MODEL_VERSION,
            });
        }
        if self.window == 0 || self.window % (POOL * POOL) != 0 {
            return Err(Error::invalid(format!(
                "window {} must be a positive multiple of {}",
                self.window,
                POOL * POOL
            )));
        }
        if self.stride == 0 || self.stride > self.window {
            return Err(Error::invalid("stride must be in [1, window]"));
        }
        for c in CHANNELS {
            let ns = self
                .norm_stats
                .get(&c)
                .ok_or_else(|| Error::MissingChannel(c.name().into()))?;
            if !(ns.std > 0.0) {
                return Err(Error::invalid(format!("channel {c} has non-positive std")));
            }
            if !self.net.per_channel.contains_key(&c) {
                return Err(Error::MissingChannel(c.name().into()));
            }
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    /// Runs one channel's autoencoder on a normalized `(window, 1)` tensor.
    pub fn forward_channel(&self, channel: Channel, window: &Tensor) -> Result<Tensor> {
        if window.len() != self.window {
            return Err(Error::Shape {
                op: "forward_channel",
                left: window.shape_string(),
                right: format!("({}, 1)", self.window),
            });
        }
        self.net.per_channel[&channel].forward(window)
    }

    /// Fuses five per-channel outputs (canonical order) into a `(L, 5)` tensor.
    pub fn fuse(&self, per_channel: &[Tensor]) -> Result<Tensor> {
        if per_channel.len() != CHANNELS.len() {
            return Err(Error::invalid(format!(
                "fusion needs {} channels, got {}",
                CHANNELS.len(),
                per_channel.len()
            )));
        }
        let cols: Vec<&[f64]> = per_channel.iter().map(Tensor::data).collect();
        if per_channel.iter().any(|t| t.channels() != 1) {
            return Err(Error::invalid("fusion inputs must be single-channel"));
        }
        let stacked = Tensor::stack_columns(&cols)?;
        self.net.fusion.forward(&stacked)
    }
}

/// Fresh model with seeded weights and identity normalization.
///
/// Channel `k` draws its layers from stream `k` of `seed`; the fusion
/// network uses stream 5 and starts as an exact identity map.
pub fn build_model(seed: u64) -> DenoiserModel {
    build_model_with_window(seed, DEFAULT_WINDOW)
}

pub fn build_model_with_window(seed: u64, window: usize) -> DenoiserModel {
    let per_channel = CHANNELS
        .iter()
        .map(|&c| {
            let mut rng = SeededRng::new(seed, c.index() as u64);
            (c, ChannelAutoencoder::new(&mut rng))
        })
        .collect();
    let mut rng = SeededRng::new(seed, CHANNELS.len() as u64);
    let fusion = FusionNetwork::identity(&mut rng);
    DenoiserModel {
        net: DenoiserNet {
            per_channel,
            fusion,
        },
        norm_stats: CHANNELS.iter().map(|&c| (c, NormStats::identity())).collect(),
        window,
        stride: window / 2,
        version: MODEL_VERSION,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{grad_check, GradCheckConfig};

    fn random_window(len: usize, ch: usize, seed: u64) -> Tensor {
        let mut rng = SeededRng::new(seed, 99);
        Tensor::from_vec(len, ch, (0..len * ch).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).unwrap()
    }

    #[test]
    fn latent_and_reconstruction_lengths() {
        let m = build_model(1);
        let ae = &m.net.per_channel[&Channel::Force];
        let x = random_window(512, 1, 0);
        assert_eq!(ae.encode(&x).unwrap().shape(), (128, ENC2_FILTERS));
        assert_eq!(ae.forward(&x).unwrap().shape(), (512, 1));
    }

    #[test]
    fn shape_round_trip_for_multiples_of_four() {
        let m = build_model(2);
        let ae = &m.net.per_channel[&Channel::Compression];
        for len in [4, 8, 12, 64, 100] {
            assert_eq!(ae.forward(&random_window(len, 1, len as u64)).unwrap().len(), len);
        }
        assert!(ae.forward(&random_window(10, 1, 0)).is_err());
    }

    #[test]
    fn seeded_builds_are_identical() {
        assert_eq!(build_model(7), build_model(7));
        assert_ne!(build_model(7).net, build_model(8).net);
    }

    #[test]
    fn parameter_count_closed_form() {
        // conv: k*in*out + out ; per channel AE
        let per_channel = (5 * 1 * 32 + 32)
            + (5 * 32 * 16 + 16)
            + (1 * 16 * 16 + 16)
            + (5 * 32 * 16 + 16)
            + (5 * 16 * 32 + 32)
            + (5 * 32 * 1 + 1);
        assert_eq!(per_channel, 8369);
        let fusion = (5 * 16 + 16) + (16 * 5 + 5);
        assert_eq!(build_model(0).param_count(), 5 * per_channel + fusion);
        assert_eq!(build_model(0).param_count(), 42026);
    }

    #[test]
    fn zero_input_gives_finite_output() {
        let m = build_model(3);
        for c in CHANNELS {
            let y = m.forward_channel(c, &Tensor::zeros(512, 1)).unwrap();
            assert_eq!(y.shape(), (512, 1));
            assert!(y.all_finite());
        }
    }

    #[test]
    fn residual_path_is_live() {
        let m = build_model(4);
        let x = random_window(512, 1, 4);
        let base = m.forward_channel(Channel::Velocity, &x).unwrap();
        let mut ablated = m.clone();
        let ae = ablated.net.per_channel.get_mut(&Channel::Velocity).unwrap();
        ae.residual_conv.weights.data_mut().iter_mut().for_each(|w| *w = 0.0);
        let cut = ablated.forward_channel(Channel::Velocity, &x).unwrap();
        let diff = base
            .data()
            .iter()
            .zip(cut.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff > 0.0);
    }

    #[test]
    fn identity_fusion_passes_through() {
        let m = build_model(5);
        let x = random_window(32, 5, 5);
        let cols: Vec<Tensor> = (0..5).map(|k| Tensor::column(x.channel(k))).collect();
        let y = m.fuse(&cols).unwrap();
        assert_eq!(y.len(), 32);
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn fusion_channel_order_matters() {
        let mut m = build_model(6);
        m.net.fusion = FusionNetwork::random(&mut SeededRng::new(6, 6));
        let x = random_window(16, 5, 6);
        let cols: Vec<Tensor> = (0..5).map(|k| Tensor::column(x.channel(k))).collect();
        let mut swapped = cols.clone();
        swapped.swap(0, 3);
        assert_ne!(m.fuse(&cols).unwrap(), m.fuse(&swapped).unwrap());
    }

    fn projection_loss(net: &DenoiserNet, x: &Tensor, r: &Tensor) -> f64 {
        let y = net.forward(x).unwrap();
        y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn full_model_gradient_check() {
        let mut m = build_model(11);
        m.net.fusion = FusionNetwork::random(&mut SeededRng::new(11, 5));
        for b in m.net.param_slices_mut() {
            // nonzero biases so every layer's bias gradient is exercised
            if b.len() <= 32 {
                b.iter_mut().enumerate().for_each(|(i, v)| *v = 0.01 * ((i % 7) as f64 - 3.0));
            }
        }
        let x = random_window(64, 5, 11);
        let r = random_window(64, 5, 12);
        let (_, cache) = m.net.forward_cached(&x).unwrap();
        let mut grad = m.net.zeros_like();
        let dx = m.net.backward(&cache, &r, &mut grad).unwrap();

        let flat = m.net.flatten();
        let cfg = GradCheckConfig {
            max_coords: Some(300),
            seed: 3,
            ..Default::default()
        };
        let rep = grad_check(
            &flat,
            &grad.flatten(),
            |v| {
                let mut net = m.net.clone();
                net.assign_flat(v);
                projection_loss(&net, &x, &r)
            },
            &cfg,
        )
        .unwrap();
        assert!(rep.passed, "{rep:?}");

        let rep = grad_check(
            x.data(),
            dx.data(),
            |v| projection_loss(&m.net, &Tensor::from_vec(64, 5, v.to_vec()).unwrap(), &r),
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}
