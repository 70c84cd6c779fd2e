//! Signal-quality metrics and correlation-structure comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::session::{Channel, SignalSession, CHANNELS};
use crate::trainer::impute;

pub type CorrMatrix = [[f64; 5]; 5];

fn check_pair(clean: &[f64], estimate: &[f64]) -> Result<()> {
    if clean.len() != estimate.len() {
        return Err(Error::Shape {
            op: "metric",
            left: format!("{} samples", clean.len()),
            right: format!("{} samples", estimate.len()),
        });
    }
    if clean.is_empty() {
        return Err(Error::invalid("metrics need at least one sample"));
    }
    if clean.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("clean reference must be finite"));
    }
    Ok(())
}

fn residual_power(clean: &[f64], estimate: &[f64]) -> f64 {
    clean
        .iter()
        .zip(estimate)
        .map(|(c, e)| (e - c) * (e - c))
        .sum()
}

/// `10·log10(Σclean² / Σ(estimate − clean)²)`; `+inf` when the residual is zero.
pub fn snr_db(clean: &[f64], estimate: &[f64]) -> Result<f64> {
    check_pair(clean, estimate)?;
    let s: f64 = clean.iter().map(|c| c * c).sum();
    if s == 0.0 {
        return Err(Error::UndefinedSignal);
    }
    let n = residual_power(clean, estimate);
    if n == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (s / n).log10())
}

/// `10·log10(M² / MSE)` with `M = max|clean|`; `+inf` when the residual is zero.
pub fn psnr_db(clean: &[f64], estimate: &[f64]) -> Result<f64> {
    check_pair(clean, estimate)?;
    let m = clean.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if m == 0.0 {
        return Err(Error::UndefinedSignal);
    }
    let mse = residual_power(clean, estimate) / clean.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (m * m / mse).log10())
}

/// Pearson correlation over indices where both inputs are finite.
/// `None` when either side has zero variance there.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pairwise Pearson correlations between the five channels, canonical order.
pub fn correlation_matrix(s: &SignalSession) -> Result<CorrMatrix> {
    let cols: Vec<&[f64]> = CHANNELS.iter().map(|&c| s.channel(c)).collect();
    for (c, col) in CHANNELS.iter().zip(&cols) {
        let mut finite = col.iter().filter(|v| v.is_finite());
        let first = finite.next();
        if first.is_none() || finite.all(|v| Some(v) == first) {
            return Err(Error::DegenerateChannel(c.name().into()));
        }
    }
    let mut m = [[0.0; 5]; 5];
    for i in 0..5 {
        m[i][i] = 1.0;
        for j in i + 1..5 {
            let r = pearson(cols[i], cols[j])
                .ok_or_else(|| Error::DegenerateChannel(CHANNELS[j].name().into()))?;
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(m)
}

/// The 10 entries above the diagonal, row by row.
pub fn upper_triangle(m: &CorrMatrix) -> Vec<f64> {
    let mut v = Vec::with_capacity(10);
    for i in 0..5 {
        for j in i + 1..5 {
            v.push(m[i][j]);
        }
    }
    v
}

/// Pearson correlation between the off-diagonal upper triangles.
pub fn matrix_similarity(a: &CorrMatrix, b: &CorrMatrix) -> Result<f64> {
    pearson(&upper_triangle(a), &upper_triangle(b)).ok_or(Error::DegenerateMatrix)
}

/// Copy of `s` with every channel's NaN gaps linearly interpolated.
pub fn imputed(s: &SignalSession) -> Result<SignalSession> {
    let mut out = s.clone();
    for c in CHANNELS {
        out.set_channel(c, impute(s.channel(c))?.0)?;
    }
    Ok(out)
}

/// Serializes non-finite values as the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod json_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScore {
    #[serde(with = "json_f64")]
    pub snr_db: f64,
    #[serde(with = "json_f64")]
    pub psnr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub per_channel: BTreeMap<Channel, ChannelScore>,
    #[serde(with = "json_f64")]
    pub aggregate_snr_db: f64,
    #[serde(with = "json_f64")]
    pub aggregate_psnr_db: f64,
    /// Noisy input (imputed).
    pub corr_before: CorrMatrix,
    /// Method output.
    pub corr_after: CorrMatrix,
    pub corr_clean: CorrMatrix,
    /// Similarity of `corr_before` and `corr_after`.
    #[serde(with = "json_f64")]
    pub corr_similarity: f64,
    #[serde(with = "json_f64")]
    pub clean_vs_before: f64,
    #[serde(with = "json_f64")]
    pub clean_vs_after: f64,
}

/// Scores `estimate` against `clean`; `noisy` supplies the "before" matrix.
pub fn evaluate(
    method: &str,
    clean: &SignalSession,
    noisy: &SignalSession,
    estimate: &SignalSession,
) -> Result<EvalReport> {
    let mut per_channel = BTreeMap::new();
    for c in CHANNELS {
        per_channel.insert(
            c,
            ChannelScore {
                snr_db: snr_db(clean.channel(c), estimate.channel(c))?,
                psnr_db: psnr_db(clean.channel(c), estimate.channel(c))?,
            },
        );
    }
    let n = per_channel.len() as f64;
    let aggregate_snr_db = per_channel.values().map(|s| s.snr_db).sum::<f64>() / n;
    let aggregate_psnr_db = per_channel.values().map(|s| s.psnr_db).sum::<f64>() / n;
    let corr_before = correlation_matrix(&imputed(noisy)?)?;
    let corr_after = correlation_matrix(estimate)?;
    let corr_clean = correlation_matrix(clean)?;
    Ok(EvalReport {
        method: method.into(),
        per_channel,
        aggregate_snr_db,
        aggregate_psnr_db,
        corr_similarity: matrix_similarity(&corr_before, &corr_after)?,
        clean_vs_before: matrix_similarity(&corr_clean, &corr_before)?,
        clean_vs_after: matrix_similarity(&corr_clean, &corr_after)?,
        corr_before,
        corr_after,
        corr_clean,
    })
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// `method,channel,snr_db,psnr_db` rows, including an `aggregate` row per method.
pub fn scores_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("method,channel,snr_db,psnr_db\n");
    for r in reports {
        for (c, s) in &r.per_channel {
            out.push_str(&format!("{},{},{},{}\n", r.method, c, fmt_num(s.snr_db), fmt_num(s.psnr_db)));
        }
        out.push_str(&format!(
            "{},aggregate,{},{}\n",
            r.method,
            fmt_num(r.aggregate_snr_db),
            fmt_num(r.aggregate_psnr_db)
        ));
    }
    out
}

/// Flattened matrices: `method,matrix,row,col,value`.
pub fn correlation_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("method,matrix,row,col,value\n");
    for r in reports {
        for (label, m) in [("before", &r.corr_before), ("after", &r.corr_after), ("clean", &r.corr_clean)] {
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},{},{},{}\n",
                        r.method,
                        label,
                        CHANNELS[i],
                        CHANNELS[j],
                        fmt_num(*v)
                    ));
                }
            }
        }
    }
    out
}
