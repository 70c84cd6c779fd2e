//! Babbs perfusion model and clean session synthesis.
//!
//! The scalar relations map chest compression depth, rate and duty cycle to
//! coronary perfusion pressure:
//!
//! ```text
//! CPP = DBP * duty / (duty + 1/R)
//! DBP = E(D) * D - F(D) * D^2
//! E(D) = Emin + (Emax - Emin) / (1 + exp(PE * (Dtarget - D)))
//! F(D) = Fmin + (Fmax - Fmin) / (1 + exp(PF * (Dtarget - D)))
//! ```
//!
//! `R` is used in compressions per minute, exactly as written.
//!
//! Waveforms are built from a single raised-cosine compression drive so that
//! every channel of a clean session is a deterministic function of it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::session::{Channel, SignalSession};

/// kPa to cmH2O.
const KPA_TO_CMH2O: f64 = 10.197;
/// Displaced lung volume per mm of sternal displacement (L/mm).
const VOLUME_PER_MM: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BabbsParams {
    /// mmHg/mm
    pub e_min: f64,
    pub e_max: f64,
    /// mmHg/mm²
    pub f_min: f64,
    pub f_max: f64,
    /// 1/mm
    pub pe: f64,
    pub pf: f64,
    /// mm
    pub d_target: f64,
}

impl Default for BabbsParams {
    fn default() -> Self {
        Self {
            e_min: 0.6,
            e_max: 2.2,
            f_min: 0.005,
            f_max: 0.02,
            pe: 0.2,
            pf: 0.2,
            d_target: 50.0,
        }
    }
}

impl BabbsParams {
    /// Parameters with depth-independent elastance and resistance.
    pub fn constant(e: f64, f: f64) -> Self {
        Self {
            e_min: e,
            e_max: e,
            f_min: f,
            f_max: f,
            ..Self::default()
        }
    }

    /// Strict validity used for synthesis.
    pub fn validate(&self) -> Result<()> {
        self.check_equation_domain()?;
        if !(self.e_min < self.e_max) {
            return Err(Error::invalid("e_min must be < e_max"));
        }
        if !(self.f_min < self.f_max) {
            return Err(Error::invalid("f_min must be < f_max"));
        }
        Ok(())
    }

    /// Looser check for the scalar equations: a flat sigmoid
    /// (`e_min == e_max`) is still well defined.
    fn check_equation_domain(&self) -> Result<()> {
        let all = [
            self.e_min,
            self.e_max,
            self.f_min,
            self.f_max,
            self.pe,
            self.pf,
            self.d_target,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Babbs parameters must be finite"));
        }
        if self.e_min > self.e_max || self.f_min > self.f_max {
            return Err(Error::invalid("min bound exceeds max bound"));
        }
        if self.pe <= 0.0 || self.pf <= 0.0 || self.d_target <= 0.0 {
            return Err(Error::invalid("pe, pf and d_target must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CprProtocol {
    /// compressions per minute
    pub compression_rate: f64,
    /// mm
    pub compression_depth: f64,
    /// mm
    pub decompression_depth: f64,
    /// fraction of the cycle spent compressing
    pub duty: f64,
    /// mmHg
    pub target_dbp: f64,
    pub n_cycles: usize,
    /// Hz
    pub sample_rate: f64,
}

impl Default for CprProtocol {
    fn default() -> Self {
        Self {
            compression_rate: 100.0,
            compression_depth: 50.0,
            decompression_depth: 10.0,
            duty: 0.5,
            target_dbp: 40.0,
            n_cycles: 100,
            sample_rate: 100.0,
        }
    }
}

impl CprProtocol {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            self.compression_rate,
            self.compression_depth,
            self.decompression_depth,
            self.duty,
            self.target_dbp,
            self.sample_rate,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("protocol values must be finite"));
        }
        if self.compression_rate <= 0.0 {
            return Err(Error::invalid("compression_rate must be positive"));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::invalid(format!("duty {} not in (0, 1)", self.duty)));
        }
        if !(self.compression_depth > self.decompression_depth && self.decompression_depth >= 0.0)
        {
            return Err(Error::invalid(
                "need compression_depth > decompression_depth >= 0",
            ));
        }
        if self.n_cycles < 1 {
            return Err(Error::invalid("n_cycles must be >= 1"));
        }
        if self.sample_rate < 20.0 * self.compression_rate / 60.0 {
            return Err(Error::invalid(
                "sample_rate must give at least 20 samples per compression cycle",
            ));
        }
        if self.target_dbp <= 0.0 {
            return Err(Error::invalid("target_dbp must be positive"));
        }
        Ok(())
    }

    pub fn cycle_seconds(&self) -> f64 {
        60.0 / self.compression_rate
    }

    pub fn session_len(&self) -> usize {
        (self.n_cycles as f64 * self.cycle_seconds() * self.sample_rate).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientProfile {
    pub patient_id: String,
    /// N
    pub external_force: f64,
    /// L/kPa
    pub chest_compliance: f64,
    /// cmH2O/(L/s)
    pub airway_resistance: f64,
}

impl PatientProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("external_force", self.external_force),
            ("chest_compliance", self.chest_compliance),
            ("airway_resistance", self.airway_resistance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.patient_id.is_empty() {
            return Err(Error::invalid("patient_id must not be empty"));
        }
        Ok(())
    }
}

/// Scalar hemodynamic state at one compression depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HemoState {
    pub cpp: f64,
    pub dbp: f64,
    pub e: f64,
    pub f: f64,
}

fn sigmoid_between(lo: f64, hi: f64, slope: f64, d_target: f64, d: f64) -> f64 {
    lo + (hi - lo) / (1.0 + (slope * (d_target - d)).exp())
}

fn check_depth(d: f64) -> Result<()> {
    if d.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("depth must be finite, got {d}")))
    }
}

/// Arterial elastance `E(D)` in mmHg/mm.
pub fn elastance(d: f64, p: &BabbsParams) -> Result<f64> {
    check_depth(d)?;
    p.check_equation_domain()?;
    Ok(sigmoid_between(p.e_min, p.e_max, p.pe, p.d_target, d))
}

/// Arterial resistance `F(D)` in mmHg/mm².
pub fn resistance(d: f64, p: &BabbsParams) -> Result<f64> {
    check_depth(d)?;
    p.check_equation_domain()?;
    Ok(sigmoid_between(p.f_min, p.f_max, p.pf, p.d_target, d))
}

pub fn diastolic_bp(d: f64, p: &BabbsParams) -> Result<f64> {
    check_depth(d)?;
    if d < 0.0 {
        return Err(Error::invalid(format!("depth must be >= 0, got {d}")));
    }
    Ok(elastance(d, p)? * d - resistance(d, p)? * d * d)
}

/// Coronary perfusion pressure; `rate` in compressions per minute.
pub fn coronary_pp(dbp: f64, duty: f64, rate: f64) -> Result<f64> {
    if !dbp.is_finite() {
        return Err(Error::invalid("dbp must be finite"));
    }
    if !(duty > 0.0 && duty < 1.0) {
        return Err(Error::invalid(format!("duty {duty} not in (0, 1)")));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid(format!("rate must be positive, got {rate}")));
    }
    Ok(dbp * duty / (duty + 1.0 / rate))
}

pub fn hemo_state(d: f64, duty: f64, rate: f64, p: &BabbsParams) -> Result<HemoState> {
    let dbp = diastolic_bp(d, p)?;
    Ok(HemoState {
        cpp: coronary_pp(dbp, duty, rate)?,
        dbp,
        e: elastance(d, p)?,
        f: resistance(d, p)?,
    })
}

/// Raised-cosine compression drive sampled over the whole session.
///
/// The phase origin sits in the middle of the decompression rest, so a
/// session begins and ends at the decompression depth with zero slope.
pub fn compression_waveform(protocol: &CprProtocol) -> Vec<f64> {
    let n = protocol.session_len();
    let span = protocol.compression_depth - protocol.decompression_depth;
    let phase0 = 0.5 * (1.0 + protocol.duty);
    let cycles_per_sample = protocol.compression_rate / (60.0 * protocol.sample_rate);
    (0..n)
        .map(|i| {
            let phase = (i as f64 * cycles_per_sample + phase0).fract();
            if phase < protocol.duty {
                let arg = 2.0 * std::f64::consts::PI * phase / protocol.duty;
                protocol.decompression_depth + span * 0.5 * (1.0 - arg.cos())
            } else {
                protocol.decompression_depth
            }
        })
        .collect()
}

/// Central-difference derivative (one-sided at the ends), scaled by the
/// sample rate.
pub fn derivative(x: &[f64], sample_rate: f64) -> Vec<f64> {
    let n = x.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| {
                let diff = if i == 0 {
                    x[1] - x[0]
                } else if i == n - 1 {
                    x[n - 1] - x[n - 2]
                } else {
                    0.5 * (x[i + 1] - x[i - 1])
                };
                diff * sample_rate
            })
            .collect(),
    }
}

pub fn synthesize_session(
    profile: &PatientProfile,
    protocol: &CprProtocol,
    params: &BabbsParams,
) -> Result<SignalSession> {
    profile.validate()?;
    protocol.validate()?;
    params.validate()?;

    let depth = compression_waveform(protocol);
    let span = protocol.compression_depth - protocol.decompression_depth;
    let unit: Vec<f64> = depth
        .iter()
        .map(|d| (d - protocol.decompression_depth) / span)
        .collect();

    // The model's DBP at full depth is rescaled by target/raw so the cycle
    // peak hits the protocol target; the perfusion trough follows from the
    // calibrated value.
    let raw = hemo_state(
        protocol.compression_depth,
        protocol.duty,
        protocol.compression_rate,
        params,
    )?;
    if raw.dbp <= 0.0 {
        return Err(Error::invalid(format!(
            "model DBP {} at compression depth is not positive",
            raw.dbp
        )));
    }
    let dbp_cal = protocol.target_dbp;
    let cpp = coronary_pp(dbp_cal, protocol.duty, protocol.compression_rate)?;

    let pressure: Vec<f64> = unit.iter().map(|u| cpp + (dbp_cal - cpp) * u).collect();
    let velocity = derivative(&depth, protocol.sample_rate);
    let force: Vec<f64> = unit.iter().map(|u| profile.external_force * u).collect();

    let volume: Vec<f64> = depth
        .iter()
        .map(|d| VOLUME_PER_MM * (d - protocol.decompression_depth))
        .collect();
    let flow = derivative(&volume, protocol.sample_rate);
    let elastic = 1.0 / (profile.chest_compliance * KPA_TO_CMH2O);
    let pmouth: Vec<f64> = volume
        .iter()
        .zip(&flow)
        .map(|(v, q)| profile.airway_resistance * q + v * elastic)
        .collect();

    let mut channels = BTreeMap::new();
    channels.insert(Channel::Compression, depth);
    channels.insert(Channel::Pressure, pressure);
    channels.insert(Channel::Velocity, velocity);
    channels.insert(Channel::Force, force);
    channels.insert(Channel::Pmouth, pmouth);
    SignalSession::new(
        profile.patient_id.clone(),
        protocol.sample_rate,
        channels,
        true,
    )
}

/// Force-major grid over the three patient sweep variables.
pub fn patient_sweep() -> Vec<PatientProfile> {
    let mut out = Vec::with_capacity(150);
    for fi in 0..6u32 {
        let force = 500.0 + 100.0 * fi as f64;
        for ci in 1..=5u32 {
            let compliance = ci as f64 / 100.0;
            for ri in 1..=5u32 {
                let resistance = ri as f64;
                out.push(PatientProfile {
                    patient_id: format!("p{:03}", out.len()),
                    external_force: force,
                    chest_compliance: compliance,
                    airway_resistance: resistance,
                });
            }
        }
    }
    out
}
