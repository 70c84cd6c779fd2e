use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::denoiser::inference::windowed_apply;
use crate::error::{Error, Result};
use crate::nn::{dense, dense_backward, mae_terms, relu, relu_backward, AdamState, LayerParams, Parameters, Tensor};
use crate::rng::SeededRng;
use crate::session::{Channel, SignalSession, CHANNELS};
use crate::trainer::{denormalize, prepare_session, Dataset, NormStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanillaAeConfig {
    pub window: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_batch() -> usize {
    64
}

impl Default for VanillaAeConfig {
    fn default() -> Self {
        Self {
            window: 512,
            hidden: 64,
            learning_rate: 1e-3,
            epochs: 20,
            seed: 0,
            batch_size: 64,
        }
    }
}

impl VanillaAeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.hidden == 0 {
            return Err(Error::invalid("window and hidden must be >= 1"));
        }
        if self.hidden > self.window {
            return Err(Error::invalid("hidden must not exceed window"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        Ok(())
    }
}

/// `window -> hidden (ReLU) -> window (linear)` on one channel. A batch of
/// windows is a `(batch, window)` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseAe {
    pub encoder: LayerParams,
    pub decoder: LayerParams,
}

impl DenseAe {
    pub fn new(window: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        Self {
            encoder: LayerParams::dense(window, hidden, rng),
            decoder: LayerParams::dense(hidden, window, rng),
        }
    }

    /// Exact identity for inputs above `-shift` (needs `hidden == window`).
    pub fn identity(window: usize, shift: f64) -> Self {
        let mut eye = vec![0.0; window * window];
        for i in 0..window {
            eye[i * window + i] = 1.0;
        }
        Self {
            encoder: LayerParams::dense_from(window, window, eye.clone(), vec![shift; window])
                .expect("square weights"),
            decoder: LayerParams::dense_from(window, window, eye, vec![-shift; window])
                .expect("square weights"),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        dense(&relu(&dense(x, &self.encoder)?), &self.decoder)
    }

    /// Masked absolute-error sum of a batch and its parameter gradient.
    fn loss_grad(&self, x: &Tensor, mask: &[bool], scale: f64) -> Result<(f64, DenseAe)> {
        let z = dense(x, &self.encoder)?;
        let h = relu(&z);
        let y = dense(&h, &self.decoder)?;
        let (sum, dy) = mae_terms(&y, x, Some(mask), scale)?;
        let gd = dense_backward(&h, &self.decoder, &dy)?;
        let dz = relu_backward(&z, &gd.input)?;
        let ge = dense_backward(x, &self.encoder, &dz)?;
        let mut grad = DenseAe {
            encoder: self.encoder.zeros_like(),
            decoder: self.decoder.zeros_like(),
        };
        grad.encoder.accumulate(&ge);
        grad.decoder.accumulate(&gd);
        Ok((sum, grad))
    }
}

impl Parameters for DenseAe {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.encoder.param_slices();
        v.extend(self.decoder.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.encoder.param_slices_mut();
        v.extend(self.decoder.param_slices_mut());
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VanillaAeModel {
    pub per_channel: BTreeMap<Channel, DenseAe>,
    pub norm_stats: BTreeMap<Channel, NormStats>,
    pub window: usize,
    pub stride: usize,
}

/// One channel's training windows as rows, with masks.
fn channel_rows(data: &Dataset, c: Channel) -> (Vec<Vec<f64>>, Vec<Vec<bool>>) {
    let k = c.index();
    let rows = data.train.windows.iter().map(|w| w.channel(k)).collect();
    let masks = data
        .train
        .masks
        .iter()
        .map(|m| m.iter().skip(k).step_by(CHANNELS.len()).copied().collect())
        .collect();
    (rows, masks)
}

/// Trains `ae` on rows of length `window`; returns the per-epoch mean loss.
pub fn train_dense_ae(
    ae: &mut DenseAe,
    rows: &[Vec<f64>],
    masks: &[Vec<bool>],
    cfg: &VanillaAeConfig,
    stream: u64,
) -> Result<Vec<f64>> {
    let mut adam = AdamState::new(cfg.learning_rate);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..rows.len()).collect();
        SeededRng::new(cfg.seed, stream * 1000 + epoch as u64).shuffle(&mut order);
        let (mut sum, mut count) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch_size) {
            let data: Vec<f64> = idx.iter().flat_map(|&i| rows[i].iter().copied()).collect();
            let mask: Vec<bool> = idx.iter().flat_map(|&i| masks[i].iter().copied()).collect();
            let n = mask.iter().filter(|&&b| b).count();
            if n == 0 {
                continue;
            }
            let x = Tensor::from_vec(idx.len(), cfg.window, data)?;
            let (s, grad) = ae.loss_grad(&x, &mask, 1.0 / n as f64)?;
            if !s.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: 0,
                    channel: "vanilla".into(),
                });
            }
            adam.step(ae.param_slices_mut(), grad.param_slices())?;
            sum += s;
            count += n;
        }
        losses.push(if count == 0 { 0.0 } else { sum / count as f64 });
    }
    Ok(losses)
}

/// Trains `model` in place on the training windows of `data`.
pub fn vanilla_ae_train(
    model: &mut VanillaAeModel,
    data: &Dataset,
    cfg: &VanillaAeConfig,
) -> Result<BTreeMap<Channel, Vec<f64>>> {
    cfg.validate()?;
    if data.window != cfg.window || model.window != cfg.window {
        return Err(Error::invalid("dataset, model and config windows differ"));
    }
    model.norm_stats = data.norm_stats.clone();
    let results: Vec<(Channel, Result<Vec<f64>>)> = model
        .per_channel
        .par_iter_mut()
        .map(|(c, ae)| {
            let (rows, masks) = channel_rows(data, *c);
            (*c, train_dense_ae(ae, &rows, &masks, cfg, c.index() as u64))
        })
        .collect();
    results.into_iter().map(|(c, r)| Ok((c, r?))).collect()
}

/// Fresh seeded autoencoders (stream = channel index) trained on `data`.
pub fn vanilla_ae_fit(data: &Dataset, cfg: &VanillaAeConfig) -> Result<VanillaAeModel> {
    cfg.validate()?;
    let per_channel = CHANNELS
        .iter()
        .map(|&c| {
            let mut rng = SeededRng::new(cfg.seed, c.index() as u64);
            (c, DenseAe::new(cfg.window, cfg.hidden, &mut rng))
        })
        .collect();
    let mut model = VanillaAeModel {
        per_channel,
        norm_stats: data.norm_stats.clone(),
        window: cfg.window,
        stride: cfg.window / 2,
    };
    vanilla_ae_train(&mut model, data, cfg)?;
    Ok(model)
}

pub fn vanilla_ae_denoise(model: &VanillaAeModel, s: &SignalSession) -> Result<SignalSession> {
    let prepared = prepare_session(s, &model.norm_stats)?;
    let mut out = s.clone();
    out.is_clean = false;
    for c in CHANNELS {
        let col = Tensor::column(prepared.signal.channel(c.index()));
        let ae = &model.per_channel[&c];
        let y = windowed_apply(&col, model.window, model.stride, |w| {
            // (window, 1) column -> (1, window) row and back
            let row = Tensor::from_vec(1, w.len(), w.data().to_vec())?;
            Ok(Tensor::column(ae.forward(&row)?.into_vec()))
        })?;
        out.set_channel(c, denormalize(y.data(), &model.norm_stats[&c]))?;
    }
    Ok(out)
}
