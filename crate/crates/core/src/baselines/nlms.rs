use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::session::{Channel, SignalSession, CHANNELS};
use crate::trainer::{denormalize, prepare_session, NormStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlmsConfig {
    pub order: usize,
    pub mu: f64,
    pub eps: f64,
    pub delay: usize,
}

impl Default for NlmsConfig {
    fn default() -> Self {
        Self {
            order: 16,
            mu: 0.05,
            eps: 1e-6,
            delay: 1,
        }
    }
}

impl NlmsConfig {
    /// `mu = 0` is accepted so a frozen filter can be inspected.
    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::invalid("nlms order must be >= 1"));
        }
        if !(0.0..=2.0).contains(&self.mu) {
            return Err(Error::invalid(format!("nlms mu {} not in (0, 2]", self.mu)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("nlms eps must be > 0"));
        }
        if self.delay < 1 {
            return Err(Error::invalid("nlms delay must be >= 1"));
        }
        Ok(())
    }
}

/// Adaptive linear prediction of `x[i]` from `x[i-delay-order+1 ..= i-delay]`.
///
/// Weights start as a pure delay (`w = [1, 0, ...]`). The first
/// `order + delay - 1` samples have no full tap vector and pass through.
pub fn nlms_denoise(x: &[f64], cfg: &NlmsConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let lag = cfg.order + cfg.delay - 1;
    if x.len() <= cfg.order + cfg.delay {
        return Err(Error::invalid(format!(
            "nlms needs more than {} samples, got {}",
            cfg.order + cfg.delay,
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("nlms input must be finite; impute first"));
    }
    let mut w = vec![0.0; cfg.order];
    w[0] = 1.0;
    let mut out = x[..lag].to_vec();
    out.reserve(x.len() - lag);
    for i in lag..x.len() {
        // u[k] = x[i - delay - k]
        let u = |k: usize| x[i - cfg.delay - k];
        let mut y = 0.0;
        let mut power = 0.0;
        for (k, wk) in w.iter().enumerate() {
            y += wk * u(k);
            power += u(k) * u(k);
        }
        let step = cfg.mu * (x[i] - y) / (cfg.eps + power);
        for (k, wk) in w.iter_mut().enumerate() {
            *wk += step * u(k);
        }
        out.push(y);
    }
    Ok(out)
}

/// Runs the predictor on every channel of the imputed, normalized session.
pub fn nlms_denoise_session(
    s: &SignalSession,
    stats: &BTreeMap<Channel, NormStats>,
    cfg: &NlmsConfig,
) -> Result<SignalSession> {
    let prepared = prepare_session(s, stats)?;
    let mut out = s.clone();
    out.is_clean = false;
    for c in CHANNELS {
        let y = nlms_denoise(&prepared.signal.channel(c.index()), cfg)?;
        out.set_channel(c, denormalize(&y, &stats[&c]))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::snr_db;

    #[test]
    fn constant_converges() {
        for c in [1.0, -3.5, 250.0] {
            let x = vec![c; 4000];
            let y = nlms_denoise(&x, &NlmsConfig::default()).unwrap();
            let worst = y[3000..].iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-3 * c.abs() + 1e-6, "{c}: {worst}");
        }
    }

    #[test]
    fn frozen_filter_is_a_delay() {
        let x: Vec<f64> = (0..200).map(|i| (i as f64 * 0.21).sin() + 0.01 * i as f64).collect();
        let cfg = NlmsConfig {
            mu: 0.0,
            delay: 3,
            ..NlmsConfig::default()
        };
        let y = nlms_denoise(&x, &cfg).unwrap();
        let lag = cfg.order + cfg.delay - 1;
        assert_eq!(&y[..lag], &x[..lag]);
        for i in lag..x.len() {
            assert_eq!(y[i], x[i - 3]);
        }
    }

    #[test]
    fn sinusoid_prediction_snr() {
        let clean: Vec<f64> = (0..8000)
            .map(|i| (2.0 * std::f64::consts::PI * 1.7 * i as f64 / 100.0).sin())
            .collect();
        let y = nlms_denoise(&clean, &NlmsConfig::default()).unwrap();
        let q = 6000;
        let snr = snr_db(&clean[q..], &y[q..]).unwrap();
        assert!(snr > 20.0, "{snr}");
    }

    #[test]
    fn causal() {
        let x: Vec<f64> = (0..300).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let y = nlms_denoise(&x, &NlmsConfig::default()).unwrap();
        let mut x2 = x.clone();
        for v in &mut x2[150..] {
            *v += 5.0;
        }
        let y2 = nlms_denoise(&x2, &NlmsConfig::default()).unwrap();
        assert_eq!(&y[..=150], &y2[..=150]);
        assert_ne!(y[151], y2[151]);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = NlmsConfig::default();
        assert!(nlms_denoise(&[1.0; 17], &cfg).is_err());
        assert!(nlms_denoise(&[f64::NAN; 100], &cfg).is_err());
        assert!(nlms_denoise(&[1.0; 100], &NlmsConfig { order: 0, ..cfg }).is_err());
        assert!(nlms_denoise(&[1.0; 100], &NlmsConfig { mu: 2.5, ..cfg }).is_err());
    }
}
