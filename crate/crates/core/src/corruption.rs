//! Seeded artifact injectors.
//!
//! Each channel of a session is corrupted by a fixed pipeline:
//! gaussian -> salt/pepper -> baseline wander -> muscle interference ->
//! amplitude changes -> depth variations -> dropouts. Every channel draws
//! from its own [`SeededRng`] stream `(seed, channel index)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::session::{SignalSession, CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianConfig {
    pub mean: f64,
    pub std: f64,
    pub noise_factor: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaltPepperConfig {
    pub salt_prob: f64,
    pub pepper_prob: f64,
    pub salt_value: f64,
    pub pepper_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub amplitude: f64,
    /// seconds
    pub period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuscleConfig {
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmpChangesConfig {
    pub count: usize,
    /// samples
    pub max_duration: usize,
    pub change_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthVariationsConfig {
    pub count: usize,
    pub max_duration: usize,
    pub variation_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutsConfig {
    pub count: usize,
    pub max_duration: usize,
}

/// Stage names of the fixed corruption pipeline, in application order.
pub const PIPELINE: [&str; 7] = [
    "gaussian",
    "salt_pepper",
    "baseline",
    "muscle",
    "amp_changes",
    "depth_variations",
    "dropouts",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionConfig {
    pub seed: u64,
    pub gaussian: GaussianConfig,
    pub salt_pepper: SaltPepperConfig,
    pub baseline: BaselineConfig,
    pub muscle: MuscleConfig,
    pub amp_changes: AmpChangesConfig,
    pub depth_variations: DepthVariationsConfig,
    pub dropouts: DropoutsConfig,
    /// Optional explicit stage order. Only the canonical order is accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<Vec<String>>,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            gaussian: GaussianConfig {
                mean: 0.0,
                std: 1.0,
                noise_factor: 1.2,
                probability: 0.1,
            },
            salt_pepper: SaltPepperConfig {
                salt_prob: 1e-4,
                pepper_prob: 1e-4,
                salt_value: 1e-5,
                pepper_value: 1e-5,
            },
            baseline: BaselineConfig {
                amplitude: 0.02,
                period: 2.0,
            },
            muscle: MuscleConfig { amplitude: 0.05 },
            amp_changes: AmpChangesConfig {
                count: 500,
                max_duration: 10,
                change_factor: 0.005,
            },
            depth_variations: DepthVariationsConfig {
                count: 500,
                max_duration: 20,
                variation_factor: 0.8,
            },
            dropouts: DropoutsConfig {
                count: 500,
                max_duration: 10,
            },
            pipeline: None,
        }
    }
}

impl CorruptionConfig {
    /// Every injector switched off.
    pub fn disabled(seed: u64) -> Self {
        let d = Self::default();
        Self {
            seed,
            gaussian: GaussianConfig {
                probability: 0.0,
                ..d.gaussian
            },
            salt_pepper: SaltPepperConfig {
                salt_prob: 0.0,
                pepper_prob: 0.0,
                ..d.salt_pepper
            },
            baseline: BaselineConfig {
                amplitude: 0.0,
                ..d.baseline
            },
            muscle: MuscleConfig { amplitude: 0.0 },
            amp_changes: AmpChangesConfig {
                count: 0,
                ..d.amp_changes
            },
            depth_variations: DepthVariationsConfig {
                count: 0,
                ..d.depth_variations
            },
            dropouts: DropoutsConfig {
                count: 0,
                ..d.dropouts
            },
            pipeline: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("gaussian.probability", self.gaussian.probability),
            ("salt_pepper.salt_prob", self.salt_pepper.salt_prob),
            ("salt_pepper.pepper_prob", self.salt_pepper.pepper_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} = {p} not in [0, 1]")));
            }
        }
        if self.salt_pepper.salt_prob + self.salt_pepper.pepper_prob > 1.0 {
            return Err(Error::invalid("salt_prob + pepper_prob exceeds 1"));
        }
        if !(self.gaussian.std >= 0.0) {
            return Err(Error::invalid("gaussian.std must be >= 0"));
        }
        if !(self.muscle.amplitude >= 0.0) {
            return Err(Error::invalid("muscle.amplitude must be >= 0"));
        }
        if !(self.baseline.period > 0.0) {
            return Err(Error::invalid("baseline.period must be > 0"));
        }
        for (name, d) in [
            ("amp_changes.max_duration", self.amp_changes.max_duration),
            ("depth_variations.max_duration", self.depth_variations.max_duration),
            ("dropouts.max_duration", self.dropouts.max_duration),
        ] {
            if d < 1 {
                return Err(Error::invalid(format!("{name} must be >= 1")));
            }
        }
        let reals = [
            self.gaussian.mean,
            self.gaussian.noise_factor,
            self.salt_pepper.salt_value,
            self.salt_pepper.pepper_value,
            self.baseline.amplitude,
            self.amp_changes.change_factor,
            self.depth_variations.variation_factor,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("corruption parameters must be finite"));
        }
        if let Some(order) = &self.pipeline {
            if order.iter().map(String::as_str).ne(PIPELINE.iter().copied()) {
                return Err(Error::invalid(format!(
                    "pipeline order is fixed ({}), got ({})",
                    PIPELINE.join(", "),
                    order.join(", ")
                )));
            }
        }
        Ok(())
    }
}

/// One localized artifact. `value` is the offset (amplitude changes), the
/// scale (depth variations), or NaN (dropouts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtifactEvent {
    pub start: usize,
    /// Requested duration before truncation at the end of the sequence.
    pub duration: usize,
    pub value: f64,
}

impl ArtifactEvent {
    pub fn span(&self, len: usize) -> std::ops::Range<usize> {
        self.start..(self.start + self.duration).min(len)
    }
}

pub fn add_gaussian(x: &[f64], cfg: &GaussianConfig, rng: &mut SeededRng) -> Vec<f64> {
    add_gaussian_logged(x, cfg, rng).0
}

/// As [`add_gaussian`], also returning the perturbed indices.
pub fn add_gaussian_logged(
    x: &[f64],
    cfg: &GaussianConfig,
    rng: &mut SeededRng,
) -> (Vec<f64>, Vec<usize>) {
    let mut out = x.to_vec();
    let mut hit = Vec::new();
    if cfg.probability <= 0.0 {
        return (out, hit);
    }
    let scale = cfg.noise_factor * cfg.std;
    for (i, v) in out.iter_mut().enumerate() {
        if rng.uniform() < cfg.probability {
            *v += cfg.mean + scale * rng.normal();
            hit.push(i);
        }
    }
    (out, hit)
}

pub fn add_salt_pepper(x: &[f64], cfg: &SaltPepperConfig, rng: &mut SeededRng) -> Vec<f64> {
    add_salt_pepper_logged(x, cfg, rng).0
}

pub fn add_salt_pepper_logged(
    x: &[f64],
    cfg: &SaltPepperConfig,
    rng: &mut SeededRng,
) -> (Vec<f64>, Vec<usize>) {
    let mut out = x.to_vec();
    let mut hit = Vec::new();
    if cfg.salt_prob <= 0.0 && cfg.pepper_prob <= 0.0 {
        return (out, hit);
    }
    for (i, v) in out.iter_mut().enumerate() {
        let u = rng.uniform();
        if u < cfg.salt_prob {
            *v = cfg.salt_value;
            hit.push(i);
        } else if u < cfg.salt_prob + cfg.pepper_prob {
            *v = -cfg.pepper_value;
            hit.push(i);
        }
    }
    (out, hit)
}

pub fn add_baseline_wander(x: &[f64], cfg: &BaselineConfig, sample_rate: f64) -> Result<Vec<f64>> {
    if !(cfg.period > 0.0) {
        return Err(Error::invalid("baseline period must be > 0"));
    }
    if cfg.amplitude == 0.0 {
        return Ok(x.to_vec());
    }
    let w = 2.0 * std::f64::consts::PI / cfg.period;
    Ok(x
        .iter()
        .enumerate()
        .map(|(i, v)| v + cfg.amplitude * (w * i as f64 / sample_rate).sin())
        .collect())
}

pub fn add_muscle_interference(x: &[f64], cfg: &MuscleConfig, rng: &mut SeededRng) -> Vec<f64> {
    if cfg.amplitude == 0.0 {
        return x.to_vec();
    }
    x.iter().map(|v| v + cfg.amplitude * rng.normal()).collect()
}

fn draw_events(
    len: usize,
    count: usize,
    max_duration: usize,
    rng: &mut SeededRng,
    mut value: impl FnMut(&mut SeededRng) -> f64,
) -> Result<Vec<ArtifactEvent>> {
    if len < 1 {
        return Err(Error::invalid("sequence must contain at least one sample"));
    }
    if max_duration < 1 {
        return Err(Error::invalid("max_duration must be >= 1"));
    }
    Ok((0..count)
        .map(|_| {
            let start = rng.int_inclusive(0, len as u64 - 1) as usize;
            let duration = rng.int_inclusive(1, max_duration as u64) as usize;
            ArtifactEvent {
                start,
                duration,
                value: value(rng),
            }
        })
        .collect())
}

fn peak_to_peak(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

pub fn add_amplitude_changes(
    x: &[f64],
    cfg: &AmpChangesConfig,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    Ok(add_amplitude_changes_logged(x, cfg, rng)?.0)
}

pub fn add_amplitude_changes_logged(
    x: &[f64],
    cfg: &AmpChangesConfig,
    rng: &mut SeededRng,
) -> Result<(Vec<f64>, Vec<ArtifactEvent>)> {
    let step = cfg.change_factor * peak_to_peak(x);
    let events = draw_events(x.len(), cfg.count, cfg.max_duration, rng, |r| {
        if r.coin() {
            step
        } else {
            -step
        }
    })?;
    let mut out = x.to_vec();
    for ev in &events {
        for v in &mut out[ev.span(x.len())] {
            *v += ev.value;
        }
    }
    Ok((out, events))
}

pub fn add_depth_variations(
    x: &[f64],
    cfg: &DepthVariationsConfig,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    Ok(add_depth_variations_logged(x, cfg, rng)?.0)
}

pub fn add_depth_variations_logged(
    x: &[f64],
    cfg: &DepthVariationsConfig,
    rng: &mut SeededRng,
) -> Result<(Vec<f64>, Vec<ArtifactEvent>)> {
    let f = cfg.variation_factor;
    let events = draw_events(x.len(), cfg.count, cfg.max_duration, rng, |r| {
        r.uniform_in(1.0 - f, 1.0 + f)
    })?;
    let mut out = x.to_vec();
    for ev in &events {
        for v in &mut out[ev.span(x.len())] {
            *v *= ev.value;
        }
    }
    Ok((out, events))
}

pub fn add_dropouts(x: &[f64], cfg: &DropoutsConfig, rng: &mut SeededRng) -> Result<Vec<f64>> {
    Ok(add_dropouts_logged(x, cfg, rng)?.0)
}

pub fn add_dropouts_logged(
    x: &[f64],
    cfg: &DropoutsConfig,
    rng: &mut SeededRng,
) -> Result<(Vec<f64>, Vec<ArtifactEvent>)> {
    let events = draw_events(x.len(), cfg.count, cfg.max_duration, rng, |_| f64::NAN)?;
    let mut out = x.to_vec();
    for ev in &events {
        for v in &mut out[ev.span(x.len())] {
            *v = f64::NAN;
        }
    }
    Ok((out, events))
}

/// Runs the full pipeline on one channel with the given stream.
pub fn corrupt_channel(
    x: &[f64],
    cfg: &CorruptionConfig,
    sample_rate: f64,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    let y = add_gaussian(x, &cfg.gaussian, rng);
    let y = add_salt_pepper(&y, &cfg.salt_pepper, rng);
    let y = add_baseline_wander(&y, &cfg.baseline, sample_rate)?;
    let y = add_muscle_interference(&y, &cfg.muscle, rng);
    let y = add_amplitude_changes(&y, &cfg.amp_changes, rng)?;
    let y = add_depth_variations(&y, &cfg.depth_variations, rng)?;
    add_dropouts(&y, &cfg.dropouts, rng)
}

pub fn corrupt_session(s: &SignalSession, cfg: &CorruptionConfig) -> Result<SignalSession> {
    cfg.validate()?;
    if !s.is_clean {
        return Err(Error::invalid(format!(
            "session {} is already corrupted",
            s.patient_id
        )));
    }
    let mut out = s.clone();
    for c in CHANNELS {
        let mut rng = SeededRng::new(cfg.seed, c.index() as u64);
        let y = corrupt_channel(s.channel(c), cfg, s.sample_rate, &mut rng)?;
        out.set_channel(c, y)?;
    }
    out.is_clean = false;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::babbs::{patient_sweep, synthesize_session, BabbsParams, CprProtocol};

    fn default_session() -> SignalSession {
        synthesize_session(
            &patient_sweep()[0],
            &CprProtocol::default(),
            &BabbsParams::default(),
        )
        .unwrap()
    }

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 * 0.37).sin() + 2.0).collect()
    }

    /// Indices where the two sequences differ (NaN counts as differing).
    fn changed(a: &[f64], b: &[f64]) -> Vec<usize> {
        a.iter()
            .zip(b)
            .enumerate()
            .filter(|(_, (x, y))| x.to_bits() != y.to_bits())
            .map(|(i, _)| i)
            .collect()
    }

    fn covered(events: &[ArtifactEvent], len: usize) -> Vec<usize> {
        let mut mask = vec![false; len];
        for ev in events {
            for m in &mut mask[ev.span(len)] {
                *m = true;
            }
        }
        (0..len).filter(|&i| mask[i]).collect()
    }

    #[test]
    fn config_json_uses_documented_names() {
        let json = serde_json::to_value(CorruptionConfig::default()).unwrap();
        for key in [
            "seed",
            "gaussian",
            "salt_pepper",
            "baseline",
            "muscle",
            "amp_changes",
            "depth_variations",
            "dropouts",
        ] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["gaussian"]["noise_factor"], 1.2);
        assert_eq!(json["salt_pepper"]["salt_value"], 1e-5);
        assert_eq!(json["dropouts"]["max_duration"], 10);
        let back: CorruptionConfig = serde_json::from_value(json).unwrap();
        assert_eq!(back, CorruptionConfig::default());
    }

    #[test]
    fn permuted_pipeline_is_config_error() {
        let mut cfg = CorruptionConfig::default();
        cfg.pipeline = Some(PIPELINE.iter().map(|s| s.to_string()).collect());
        assert!(cfg.validate().is_ok());
        let mut order: Vec<String> = PIPELINE.iter().map(|s| s.to_string()).collect();
        order.swap(0, 6);
        cfg.pipeline = Some(order);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn invalid_probabilities_rejected() {
        let mut cfg = CorruptionConfig::default();
        cfg.gaussian.probability = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = CorruptionConfig::default();
        cfg.dropouts.max_duration = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn gaussian_zero_probability_is_identity() {
        let x = ramp(1000);
        let cfg = GaussianConfig {
            probability: 0.0,
            ..CorruptionConfig::default().gaussian
        };
        assert_eq!(add_gaussian(&x, &cfg, &mut SeededRng::new(1, 0)), x);
    }

    #[test]
    fn gaussian_only_touches_logged_samples() {
        let x = ramp(5000);
        let cfg = CorruptionConfig::default().gaussian;
        let (y, hit) = add_gaussian_logged(&x, &cfg, &mut SeededRng::new(9, 0));
        assert_eq!(changed(&x, &y), hit);
    }

    #[test]
    fn gaussian_statistics() {
        let n = 1_000_000;
        let x = vec![0.0; n];
        let cfg = CorruptionConfig::default().gaussian;
        let y = add_gaussian(&x, &cfg, &mut SeededRng::new(2024, 0));
        let deltas: Vec<f64> = y.iter().filter(|v| **v != 0.0).cloned().collect();
        let frac = deltas.len() as f64 / n as f64;
        assert!((0.097..=0.103).contains(&frac), "{frac}");
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (deltas.len() - 1) as f64;
        assert!((1.188..=1.212).contains(&var.sqrt()), "{}", var.sqrt());
    }

    #[test]
    fn gaussian_is_deterministic() {
        let x = ramp(2000);
        let cfg = CorruptionConfig::default().gaussian;
        let a = add_gaussian(&x, &cfg, &mut SeededRng::new(3, 1));
        let b = add_gaussian(&x, &cfg, &mut SeededRng::new(3, 1));
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn salt_pepper_identity_and_count() {
        let x = ramp(100);
        let off = SaltPepperConfig {
            salt_prob: 0.0,
            pepper_prob: 0.0,
            ..CorruptionConfig::default().salt_pepper
        };
        assert_eq!(add_salt_pepper(&x, &off, &mut SeededRng::new(1, 0)), x);

        let n = 1_000_000;
        let x = vec![3.0; n];
        let cfg = CorruptionConfig::default().salt_pepper;
        let (y, hit) = add_salt_pepper_logged(&x, &cfg, &mut SeededRng::new(77, 0));
        assert!((140..=260).contains(&hit.len()), "{}", hit.len());
        assert_eq!(changed(&x, &y), hit);
        for i in hit {
            assert!(y[i] == 1e-5 || y[i] == -1e-5);
        }
    }

    #[test]
    fn baseline_wander_bounds() {
        let x = ramp(1000);
        let zero = BaselineConfig {
            amplitude: 0.0,
            period: 2.0,
        };
        assert_eq!(add_baseline_wander(&x, &zero, 100.0).unwrap(), x);
        let cfg = CorruptionConfig::default().baseline;
        let y = add_baseline_wander(&x, &cfg, 100.0).unwrap();
        let max = x.iter().zip(&y).map(|(a, b)| (b - a).abs()).fold(0.0, f64::max);
        assert!(max <= 0.02 + 1e-15);

        // 10 whole periods of 200 samples on a zero input
        let z = add_baseline_wander(&vec![0.0; 2000], &cfg, 100.0).unwrap();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        assert!(mean.abs() < 1e-12 * 0.02, "{mean}");
        assert!(add_baseline_wander(&x, &BaselineConfig { amplitude: 1.0, period: 0.0 }, 100.0).is_err());
    }

    #[test]
    fn muscle_statistics() {
        let x = vec![0.0; 10];
        assert_eq!(
            add_muscle_interference(&x, &MuscleConfig { amplitude: 0.0 }, &mut SeededRng::new(0, 0)),
            x
        );
        let n = 1_000_000;
        let y = add_muscle_interference(
            &vec![0.0; n],
            &MuscleConfig { amplitude: 0.05 },
            &mut SeededRng::new(11, 4),
        );
        let mean = y.iter().sum::<f64>() / n as f64;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((0.0495..=0.0505).contains(&sd), "{sd}");
        assert!(mean.abs() < 5.0 * 0.05 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn amplitude_changes_follow_event_log() {
        let x = ramp(6000);
        let off = AmpChangesConfig {
            count: 0,
            ..CorruptionConfig::default().amp_changes
        };
        assert_eq!(add_amplitude_changes(&x, &off, &mut SeededRng::new(1, 0)).unwrap(), x);

        let cfg = CorruptionConfig::default().amp_changes;
        let (y, events) = add_amplitude_changes_logged(&x, &cfg, &mut SeededRng::new(5, 2)).unwrap();
        assert_eq!(events.len(), 500);
        let step = 0.005 * peak_to_peak(&x);
        for ev in &events {
            assert!((1..=10).contains(&ev.duration));
            assert_eq!(ev.value.abs(), step);
        }
        // Overlapping steps of opposite sign cancel, so only indices with a
        // nonzero net step must change.
        let mut net = vec![0i32; x.len()];
        for ev in &events {
            for n in &mut net[ev.span(x.len())] {
                *n += ev.value.signum() as i32;
            }
        }
        let cov = covered(&events, x.len());
        let ch = changed(&x, &y);
        assert!(ch.iter().all(|i| cov.binary_search(i).is_ok()));
        for (i, n) in net.iter().enumerate() {
            if *n != 0 {
                assert!(ch.binary_search(&i).is_ok(), "index {i}");
            }
        }
        assert!(add_amplitude_changes(&[], &cfg, &mut SeededRng::new(1, 0)).is_err());
    }

    #[test]
    fn depth_variations_scale_range() {
        let x = ramp(6000);
        let off = DepthVariationsConfig {
            count: 0,
            ..CorruptionConfig::default().depth_variations
        };
        assert_eq!(add_depth_variations(&x, &off, &mut SeededRng::new(1, 0)).unwrap(), x);
        let flat = DepthVariationsConfig {
            count: 100,
            max_duration: 20,
            variation_factor: 0.0,
        };
        assert_eq!(add_depth_variations(&x, &flat, &mut SeededRng::new(1, 0)).unwrap(), x);

        let cfg = CorruptionConfig::default().depth_variations;
        let (y, events) = add_depth_variations_logged(&x, &cfg, &mut SeededRng::new(8, 0)).unwrap();
        for ev in &events {
            assert!((0.2..=1.8).contains(&ev.value));
            assert!((1..=20).contains(&ev.duration));
        }
        let cov = covered(&events, x.len());
        assert_eq!(changed(&x, &y), cov);
    }

    #[test]
    fn dropout_runs_match_log() {
        let x = ramp(6000);
        let off = DropoutsConfig {
            count: 0,
            max_duration: 10,
        };
        let y = add_dropouts(&x, &off, &mut SeededRng::new(1, 0)).unwrap();
        assert!(y.iter().all(|v| !v.is_nan()));

        let cfg = CorruptionConfig::default().dropouts;
        let (y, events) = add_dropouts_logged(&x, &cfg, &mut SeededRng::new(4, 0)).unwrap();
        let nan: Vec<usize> = (0..y.len()).filter(|&i| y[i].is_nan()).collect();
        assert!(nan.len() <= 5000);
        assert_eq!(nan, covered(&events, x.len()));
        assert!(events.iter().all(|e| (1..=10).contains(&e.duration)));

        let again = add_dropouts(&x, &cfg, &mut SeededRng::new(4, 0)).unwrap();
        let nan2: Vec<usize> = (0..again.len()).filter(|&i| again[i].is_nan()).collect();
        assert_eq!(nan, nan2);
    }

    #[test]
    fn disabled_pipeline_is_identity() {
        let s = default_session();
        let out = corrupt_session(&s, &CorruptionConfig::disabled(3)).unwrap();
        assert!(!out.is_clean);
        for c in CHANNELS {
            let a = s.channel(c);
            let b = out.channel(c);
            assert!(a.iter().zip(b).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }

    #[test]
    fn default_pipeline_fingerprint() {
        let s = default_session();
        let cfg = CorruptionConfig {
            seed: 17,
            ..Default::default()
        };
        let out = corrupt_session(&s, &cfg).unwrap();
        assert_eq!(out.len(), s.len());
        for c in CHANNELS {
            let y = out.channel(c);
            assert!(y.iter().any(|v| v.is_nan()), "{c}");
            assert!(
                y.iter().zip(s.channel(c)).any(|(a, b)| a.is_finite() && a != b),
                "{c}"
            );
        }
        let again = corrupt_session(&s, &cfg).unwrap();
        for c in CHANNELS {
            assert!(out
                .channel(c)
                .iter()
                .zip(again.channel(c))
                .all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }

    #[test]
    fn corrupting_twice_is_rejected() {
        let s = default_session();
        let once = corrupt_session(&s, &CorruptionConfig::default()).unwrap();
        assert!(corrupt_session(&once, &CorruptionConfig::default()).is_err());
    }
}
