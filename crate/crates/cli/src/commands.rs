use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use cprlab_core::babbs::{patient_sweep, synthesize_session, BabbsParams, CprProtocol};
use cprlab_core::baselines::{
    nlms_denoise_session, vanilla_ae_denoise, vanilla_ae_fit, NlmsConfig, VanillaAeConfig,
};
use cprlab_core::corruption::{corrupt_session, CorruptionConfig};
use cprlab_core::denoiser::checkpoint::{decode_model, encode_model};
use cprlab_core::denoiser::model::{build_model_with_window, DenoiserModel, TRAIN_STRIDE};
use cprlab_core::denoiser::denoise_session;
use cprlab_core::metrics::{correlation_csv, evaluate as score, imputed, scores_csv, EvalReport};
use cprlab_core::rng::{hash_label, mix_seed, SeededRng};
use cprlab_core::session::{
    read_session, session_to_csv, sidecar_path, SessionSidecar, SignalSession, CHANNELS,
};
use cprlab_core::trainer::{fit_with_progress, make_dataset, make_dataset_with_stats, prepare_session, TrainConfig};
use cprlab_core::{Error, GENERATOR_VERSION};

use crate::manifest::{merge_json, sha256_hex, ManifestBuilder, Outputs};
use crate::{CompareArgs, CorruptArgs, DenoiseArgs, EvaluateArgs, GenerateArgs, TrainArgs};

const METHODS: [&str; 3] = ["proposed", "nlms", "vanilla"];

/// Defaults, overlaid with the JSON file if one is given.
fn load_config<T: Serialize + DeserializeOwned>(default: &T, path: Option<&Path>) -> Result<T> {
    let mut value = serde_json::to_value(default)?;
    if let Some(p) = path {
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let patch: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
        merge_json(&mut value, patch);
    }
    serde_json::from_value(value).map_err(|e| {
        let src = path.map_or("config".into(), |p| p.display().to_string());
        Error::Schema(format!("{src}: {e}")).into()
    })
}

/// Files as given; directories contribute their `*.csv` files in name order.
fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("no input session files found").into());
    }
    Ok(out)
}

fn read(path: &Path) -> Result<(SignalSession, Option<SessionSidecar>)> {
    read_session(path).with_context(|| format!("reading {}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

fn file_name(p: &Path) -> Result<&std::ffi::OsStr> {
    p.file_name()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", p.display())).into())
}

fn write_session(
    outputs: &mut Outputs,
    path: &Path,
    s: &SignalSession,
    provenance: BTreeMap<String, Value>,
) -> Result<()> {
    let sidecar = SessionSidecar {
        patient_id: s.patient_id.clone(),
        sample_rate: s.sample_rate,
        is_clean: s.is_clean,
        generator_version: GENERATOR_VERSION.into(),
        provenance,
    };
    outputs.write(path, session_to_csv(s).as_bytes())?;
    outputs.write(&sidecar_path(path), serde_json::to_string_pretty(&sidecar)?.as_bytes())
}

/// Runs `body`, deleting everything it wrote if it fails.
fn transactional(body: impl FnOnce(&mut Outputs) -> Result<()>) -> Result<()> {
    let mut outputs = Outputs::default();
    let r = body(&mut outputs);
    if r.is_err() {
        outputs.rollback();
    }
    r
}

fn seeds(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateConfig {
    protocol: CprProtocol,
    params: BabbsParams,
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let cfg: GenerateConfig = load_config(&GenerateConfig::default(), a.config.as_deref())?;
    let sweep = patient_sweep();
    let profiles = if a.sweep {
        sweep
    } else {
        if a.patients == 0 || a.patients > sweep.len() {
            return Err(Error::invalid(format!(
                "--patients must be in 1..={}",
                sweep.len()
            ))
            .into());
        }
        let mut idx: Vec<usize> = (0..sweep.len()).collect();
        SeededRng::new(a.seed, hash_label("generate")).shuffle(&mut idx);
        idx[..a.patients].iter().map(|&i| sweep[i].clone()).collect()
    };
    // Synthesize everything before touching the output directory.
    let sessions = profiles
        .iter()
        .map(|p| Ok((p, synthesize_session(p, &cfg.protocol, &cfg.params)?)))
        .collect::<Result<Vec<_>>>()?;
    ensure_dir(&a.out)?;
    let mode = if a.sweep { "sweep" } else { "default" };
    let mut manifest = ManifestBuilder::new(
        "generate",
        json!({ "mode": mode, "patients": profiles.len(), "config": cfg }),
        seeds(&[("seed", a.seed)]),
        &[],
    );
    transactional(|outputs| {
        for (profile, s) in &sessions {
            let prov = BTreeMap::from([
                ("protocol".to_string(), serde_json::to_value(cfg.protocol)?),
                ("params".to_string(), serde_json::to_value(cfg.params)?),
                ("profile".to_string(), serde_json::to_value(profile)?),
            ]);
            write_session(outputs, &a.out.join(format!("{}.csv", s.patient_id)), s, prov)?;
        }
        let ids: Vec<&str> = sessions.iter().map(|(_, s)| s.patient_id.as_str()).collect();
        manifest.result("patients", json!(ids));
        manifest.finish(&a.out.join("manifest.json"), outputs)?;
        Ok(())
    })
}

pub fn corrupt(a: &CorruptArgs) -> Result<()> {
    let mut cfg: CorruptionConfig = load_config(&CorruptionConfig::default(), a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let inputs = expand_inputs(&a.input)?;
    let mut results = Vec::new();
    for p in &inputs {
        let (clean, side) = read(p)?;
        // Each patient gets its own stream family so adding files does not
        // change the noise of the others.
        let session_cfg = CorruptionConfig {
            seed: mix_seed(cfg.seed, hash_label(&clean.patient_id)),
            ..cfg.clone()
        };
        let noisy = corrupt_session(&clean, &session_cfg)?;
        let mut prov = side.map(|s| s.provenance).unwrap_or_default();
        prov.insert("corruption".into(), serde_json::to_value(&session_cfg)?);
        results.push((a.out.join(file_name(p)?), noisy, prov));
    }
    ensure_dir(&a.out)?;
    let mut manifest = ManifestBuilder::new(
        "corrupt",
        serde_json::to_value(&cfg)?,
        seeds(&[("seed", cfg.seed)]),
        &inputs,
    );
    transactional(|outputs| {
        for (path, s, prov) in results {
            write_session(outputs, &path, &s, prov)?;
        }
        manifest.result("session_seed_rule", json!("mix_seed(seed, fnv1a(patient_id))"));
        manifest.finish(&a.out.join("manifest.json"), outputs)?;
        Ok(())
    })
}

fn load_sessions(inputs: &[PathBuf]) -> Result<Vec<SignalSession>> {
    inputs.iter().map(|p| Ok(read(p)?.0)).collect()
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = load_config(&TrainConfig::default(), a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(e) = a.epochs {
        cfg.max_epochs = e;
    }
    cfg.validate()?;
    let inputs = expand_inputs(&a.input)?;
    let sessions = load_sessions(&inputs)?;
    ensure_dir(&a.out)?;
    let data = make_dataset(&sessions, cfg.window, cfg.stride, cfg.val_fraction, cfg.seed)?;
    eprintln!(
        "training on {} windows, validating on {}",
        data.train.len(),
        data.val.len()
    );
    let model = build_model_with_window(cfg.seed, cfg.window);
    let (trained, history) = fit_with_progress(&model, &data, &cfg, |epoch, l| {
        eprintln!("epoch {epoch:>3}  train {:.6}  val {:.6}", l.train_loss, l.val_loss);
    })?;
    let ckpt = encode_model(&trained)?;
    let mut manifest = ManifestBuilder::new(
        "train",
        serde_json::to_value(&cfg)?,
        seeds(&[("seed", cfg.seed)]),
        &inputs,
    );
    transactional(|outputs| {
        outputs.write(&a.out.join("model.ckpt"), &ckpt)?;
        outputs.write(&a.out.join("loss_curve.csv"), history.to_csv().as_bytes())?;
        outputs.write(
            &a.out.join("history.json"),
            serde_json::to_string_pretty(&history)?.as_bytes(),
        )?;
        manifest.result("history", serde_json::to_value(&history)?);
        manifest.result("checkpoint_sha256", json!(sha256_hex(&ckpt)));
        manifest.finish(&a.out.join("manifest.json"), outputs)?;
        Ok(())
    })
}

fn load_checkpoint(path: &Path) -> Result<(DenoiserModel, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let model = decode_model(&bytes).with_context(|| format!("loading {}", path.display()))?;
    Ok((model, sha256_hex(&bytes)))
}

pub fn denoise(a: &DenoiseArgs) -> Result<()> {
    let (model, hash) = load_checkpoint(&a.model)?;
    let inputs = expand_inputs(&a.input)?;
    let mut results = Vec::new();
    for p in &inputs {
        let (noisy, side) = read(p)?;
        let out = denoise_session(&model, &noisy)?;
        let mut prov = side.map(|s| s.provenance).unwrap_or_default();
        prov.insert("method".into(), json!("proposed"));
        prov.insert("checkpoint_sha256".into(), json!(hash));
        results.push((a.out.join(file_name(p)?), out, prov));
    }
    ensure_dir(&a.out)?;
    let mut all_inputs = inputs.clone();
    all_inputs.push(a.model.clone());
    let manifest = ManifestBuilder::new(
        "denoise",
        json!({ "checkpoint_sha256": hash, "window": model.window, "stride": model.stride }),
        BTreeMap::new(),
        &all_inputs,
    );
    transactional(|outputs| {
        for (path, s, prov) in results {
            write_session(outputs, &path, &s, prov)?;
        }
        manifest.finish(&a.out.join("manifest.json"), outputs)?;
        Ok(())
    })
}

fn check_same_patient(a: &SignalSession, b: &SignalSession) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "sessions differ in length: {} vs {}",
            a.len(),
            b.len()
        ))
        .into());
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let (clean, _) = read(&a.clean)?;
    let (noisy, _) = read(&a.noisy)?;
    let (est, _) = read(&a.denoised)?;
    check_same_patient(&clean, &noisy)?;
    check_same_patient(&clean, &est)?;
    let report = score(&a.method, &clean, &noisy, &est)?;
    if let Some(dir) = a.report.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let inputs = [a.clean.clone(), a.noisy.clone(), a.denoised.clone()];
    let manifest = ManifestBuilder::new("evaluate", json!({ "method": a.method }), BTreeMap::new(), &inputs);
    transactional(|outputs| {
        outputs.write(&a.report, serde_json::to_string_pretty(&report)?.as_bytes())?;
        outputs.write(
            &with_suffix(&a.report, "_scores.csv"),
            scores_csv(std::slice::from_ref(&report)).as_bytes(),
        )?;
        outputs.write(
            &with_suffix(&a.report, "_correlation.csv"),
            correlation_csv(std::slice::from_ref(&report)).as_bytes(),
        )?;
        manifest.finish(&with_suffix(&a.report, ".manifest.json"), outputs)?;
        Ok(())
    })
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareConfig {
    nlms: NlmsConfig,
    vanilla: VanillaAeConfig,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    patient_id: String,
    /// Scores of the imputed noisy input, for reference.
    input: EvalReport,
    methods: Vec<EvalReport>,
    /// SHA-256 of the imputed, normalized evaluation input each method saw.
    preprocessing_hash: BTreeMap<String, String>,
    notes: BTreeMap<String, String>,
}

fn preprocessing_hash(s: &SignalSession, stats: &BTreeMap<cprlab_core::Channel, cprlab_core::trainer::NormStats>) -> Result<String> {
    let p = prepare_session(s, stats)?;
    let mut bytes = Vec::with_capacity(p.signal.data().len() * 9);
    for v in p.signal.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.extend(p.mask.iter().map(|&m| m as u8));
    Ok(sha256_hex(&bytes))
}

/// Wide CSV for plotting: time, then clean / noisy / each method per channel.
fn signals_csv(clean: &SignalSession, noisy: &SignalSession, outs: &[(String, SignalSession)]) -> String {
    let mut header = vec!["t".to_string()];
    for c in CHANNELS {
        header.push(format!("clean_{c}"));
        header.push(format!("noisy_{c}"));
        for (m, _) in outs {
            header.push(format!("{m}_{c}"));
        }
    }
    let mut text = header.join(",");
    text.push('\n');
    let fmt = |v: f64| if v.is_nan() { "NaN".to_string() } else { v.to_string() };
    for i in 0..clean.len() {
        let mut row = vec![format!("{:.6}", i as f64 / clean.sample_rate)];
        for c in CHANNELS {
            row.push(fmt(clean.channel(c)[i]));
            row.push(fmt(noisy.channel(c)[i]));
            for (_, s) in outs {
                row.push(fmt(s.channel(c)[i]));
            }
        }
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let mut cfg: CompareConfig = load_config(&CompareConfig::default(), a.config.as_deref())?;
    cfg.vanilla.seed = a.seed;
    cfg.nlms.validate()?;
    cfg.vanilla.validate()?;
    for m in &a.methods {
        if !METHODS.contains(&m.as_str()) {
            return Err(Error::invalid(format!(
                "unknown method {m:?}; expected one of {}",
                METHODS.join(",")
            ))
            .into());
        }
    }
    let (model, ckpt_hash) = load_checkpoint(&a.model)?;
    let (clean, _) = read(&a.clean)?;
    let (noisy, _) = read(&a.noisy)?;
    check_same_patient(&clean, &noisy)?;
    let train_inputs = expand_inputs(&a.train)?;

    let mut outs: Vec<(String, SignalSession)> = Vec::new();
    let mut hashes = BTreeMap::new();
    for m in &a.methods {
        let (out, stats) = match m.as_str() {
            "proposed" => (denoise_session(&model, &noisy)?, model.norm_stats.clone()),
            "nlms" => (
                nlms_denoise_session(&noisy, &model.norm_stats, &cfg.nlms)?,
                model.norm_stats.clone(),
            ),
            _ => {
                let sessions = load_sessions(&train_inputs)?;
                let data = make_dataset_with_stats(
                    &sessions,
                    cfg.vanilla.window,
                    TRAIN_STRIDE,
                    0.2,
                    a.seed,
                    Some(&model.norm_stats),
                )?;
                let vae = vanilla_ae_fit(&data, &cfg.vanilla)?;
                (vanilla_ae_denoise(&vae, &noisy)?, vae.norm_stats.clone())
            }
        };
        hashes.insert(m.clone(), preprocessing_hash(&noisy, &stats)?);
        outs.push((m.clone(), out));
    }
    let reports = outs
        .iter()
        .map(|(m, s)| score(m, &clean, &noisy, s))
        .collect::<cprlab_core::Result<Vec<_>>>()?;
    let report = CompareReport {
        patient_id: clean.patient_id.clone(),
        input: score("noisy", &clean, &noisy, &imputed(&noisy)?)?,
        methods: reports.clone(),
        preprocessing_hash: hashes,
        notes: BTreeMap::from([
            ("nlms".into(), "stand-in: NLMS linear predictor for the filtering baseline".into()),
            ("vanilla".into(), "stand-in: dense undercomplete autoencoder for the prior unsupervised ML baseline".into()),
        ]),
    };

    ensure_dir(&a.out)?;
    let report_path = a.report.clone().unwrap_or_else(|| a.out.join("report.json"));
    let mut inputs = vec![a.model.clone(), a.clean.clone(), a.noisy.clone()];
    inputs.extend(train_inputs.iter().cloned());
    let mut manifest = ManifestBuilder::new(
        "compare",
        json!({ "methods": a.methods, "config": cfg, "checkpoint_sha256": ckpt_hash }),
        seeds(&[("seed", a.seed)]),
        &inputs,
    );
    transactional(|outputs| {
        for (m, s) in &outs {
            let prov = BTreeMap::from([("method".to_string(), json!(m))]);
            write_session(outputs, &a.out.join(format!("{m}.csv")), s, prov)?;
        }
        outputs.write(&report_path, serde_json::to_string_pretty(&report)?.as_bytes())?;
        outputs.write(&a.out.join("scores.csv"), scores_csv(&reports).as_bytes())?;
        outputs.write(&a.out.join("correlation.csv"), correlation_csv(&reports).as_bytes())?;
        outputs.write(&a.out.join("signals.csv"), signals_csv(&clean, &noisy, &outs).as_bytes())?;
        let summary: BTreeMap<&str, (f64, f64)> = reports
            .iter()
            .map(|r| (r.method.as_str(), (r.aggregate_snr_db, r.aggregate_psnr_db)))
            .collect();
        manifest.result("aggregate_snr_psnr_db", serde_json::to_value(summary)?);
        manifest.finish(&a.out.join("manifest.json"), outputs)?;
        Ok(())
    })
}
