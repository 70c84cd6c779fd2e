//! Windowed inference with overlap-add reconstruction.

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::session::{Channel, SignalSession, CHANNELS};
use crate::trainer::{denormalize, prepare_session};

use super::model::DenoiserModel;

/// Window start offsets covering `len` samples; the last window is aligned
/// to the end when the stride does not land there.
pub fn inference_starts(len: usize, window: usize, stride: usize) -> Result<Vec<usize>> {
    if window == 0 || stride == 0 {
        return Err(Error::invalid("window and stride must be >= 1"));
    }
    if len < window {
        return Err(Error::invalid(format!(
            "session of {len} samples is shorter than one window of {window}"
        )));
    }
    let mut starts: Vec<usize> = (0..=(len - window) / stride).map(|k| k * stride).collect();
    if starts.last() != Some(&(len - window)) {
        starts.push(len - window);
    }
    Ok(starts)
}

/// Averages overlapping windows into a `(len, channels)` tensor. Every
/// output sample must be covered by at least one window.
pub fn overlap_add(windows: &[Tensor], starts: &[usize], len: usize) -> Result<Tensor> {
    if windows.len() != starts.len() {
        return Err(Error::invalid("one start offset per window is required"));
    }
    let channels = windows.first().map_or(1, Tensor::channels);
    let mut sum = Tensor::zeros(len, channels);
    let mut hits = vec![0u32; len];
    for (w, &s) in windows.iter().zip(starts) {
        if w.channels() != channels || s + w.len() > len {
            return Err(Error::Shape {
                op: "overlap_add",
                left: w.shape_string(),
                right: format!("start {s} in ({len}, {channels})"),
            });
        }
        let dst = &mut sum.data_mut()[s * channels..(s + w.len()) * channels];
        for (d, v) in dst.iter_mut().zip(w.data()) {
            *d += v;
        }
        for h in &mut hits[s..s + w.len()] {
            *h += 1;
        }
    }
    if let Some(t) = hits.iter().position(|&h| h == 0) {
        return Err(Error::invalid(format!("sample {t} is not covered by any window")));
    }
    for (t, row) in sum.data_mut().chunks_mut(channels).enumerate() {
        let n = f64::from(hits[t]);
        for v in row {
            *v /= n;
        }
    }
    Ok(sum)
}

/// Cuts `signal` into windows, maps each through `f` and reassembles.
pub fn windowed_apply(
    signal: &Tensor,
    window: usize,
    stride: usize,
    f: impl Fn(&Tensor) -> Result<Tensor>,
) -> Result<Tensor> {
    let ch = signal.channels();
    let starts = inference_starts(signal.len(), window, stride)?;
    let outs = starts
        .iter()
        .map(|&s| {
            let data = signal.data()[s * ch..(s + window) * ch].to_vec();
            f(&Tensor::from_vec(window, ch, data)?)
        })
        .collect::<Result<Vec<_>>>()?;
    overlap_add(&outs, &starts, signal.len())
}

/// Denoises a whole session: impute, normalize, run every window through
/// the channel autoencoders and the fusion network, average the overlaps
/// and map back to physical units.
pub fn denoise_session(model: &DenoiserModel, s: &SignalSession) -> Result<SignalSession> {
    model.validate()?;
    if s.len() < model.window {
        return Err(Error::invalid(format!(
            "session of {} samples is shorter than one window of {}",
            s.len(),
            model.window
        )));
    }
    let prepared = prepare_session(s, &model.norm_stats)?;
    let out = windowed_apply(&prepared.signal, model.window, model.stride, |w| {
        model.net.forward(w)
    })?;
    let cols: Vec<(Channel, Vec<f64>)> = CHANNELS
        .iter()
        .map(|&c| (c, denormalize(&out.channel(c.index()), &model.norm_stats[&c])))
        .collect();
    let mut result = s.clone();
    result.is_clean = false;
    for (c, v) in cols {
        result.set_channel(c, v)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::build_model_with_window;
    use crate::trainer::NormStats;

    #[test]
    fn starts_cover_the_end() {
        assert_eq!(inference_starts(10, 4, 2).unwrap(), vec![0, 2, 4, 6]);
        assert_eq!(inference_starts(11, 4, 2).unwrap(), vec![0, 2, 4, 6, 7]);
        assert_eq!(inference_starts(4, 4, 2).unwrap(), vec![0]);
        assert!(inference_starts(3, 4, 2).is_err());
    }

    #[test]
    fn identity_reconstructs_constant_and_ramp() {
        let ramp: Vec<f64> = (0..1000).map(|i| i as f64 * 0.37 - 11.0).collect();
        let konst = vec![4.25; 1000];
        let x = Tensor::stack_columns(&[&ramp, &konst]).unwrap();
        for (w, s) in [(512, 256), (64, 16), (100, 33)] {
            let y = windowed_apply(&x, w, s, |t| Ok(t.clone())).unwrap();
            assert_eq!(y.channel(1), konst);
            for (a, b) in y.channel(0).iter().zip(&ramp) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn overlap_is_uniform_average() {
        let a = Tensor::column(vec![1.0, 1.0, 1.0]);
        let b = Tensor::column(vec![3.0, 3.0, 3.0]);
        let y = overlap_add(&[a, b], &[0, 2], 5).unwrap();
        assert_eq!(y.data(), &[1.0, 1.0, 2.0, 3.0, 3.0]);
        let c = Tensor::column(vec![1.0]);
        assert!(overlap_add(&[c], &[0], 2).is_err());
    }

    fn constant_session(len: usize, c: f64) -> SignalSession {
        let cols: [Vec<f64>; 5] = std::array::from_fn(|_| vec![c; len]);
        SignalSession::from_columns("const", 100.0, cols, true).unwrap()
    }

    #[test]
    fn output_is_finite_and_length_preserved() {
        let model = build_model_with_window(3, 64);
        let mut s = constant_session(200, 2.0);
        let mut v = s.channel(Channel::Force).to_vec();
        v[10] = f64::NAN;
        v[11] = f64::NAN;
        s.is_clean = false;
        s.set_channel(Channel::Force, v).unwrap();
        let out = denoise_session(&model, &s).unwrap();
        assert_eq!(out.len(), 200);
        assert_eq!(out.nan_count(), 0);
        assert!(!out.is_clean);
        assert!(denoise_session(&model, &constant_session(63, 1.0)).is_err());
    }

    #[test]
    fn deterministic() {
        let mut model = build_model_with_window(8, 64);
        for ns in model.norm_stats.values_mut() {
            *ns = NormStats { mean: 1.5, std: 2.0 };
        }
        let s = constant_session(300, 3.0);
        let a = denoise_session(&model, &s).unwrap();
        let b = denoise_session(&model, &s).unwrap();
        for c in CHANNELS {
            let (x, y) = (a.channel(c), b.channel(c));
            assert!(x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}
