use cprlab_core::babbs::{patient_sweep, synthesize_session, BabbsParams, CprProtocol};
use cprlab_core::baselines::{nlms_denoise_session, NlmsConfig};
use cprlab_core::corruption::{corrupt_session, CorruptionConfig};
use cprlab_core::denoiser::checkpoint::{decode_model, encode_model};
use cprlab_core::denoiser::denoise_session;
use cprlab_core::denoiser::model::build_model_with_window;
use cprlab_core::metrics::evaluate;
use cprlab_core::trainer::{fit, make_dataset, TrainConfig};
use cprlab_core::SignalSession;

fn sessions(ids: &[usize]) -> (Vec<SignalSession>, Vec<SignalSession>) {
    let proto = CprProtocol {
        n_cycles: 30,
        ..CprProtocol::default()
    };
    let sweep = patient_sweep();
    let clean: Vec<_> = ids
        .iter()
        .map(|&i| synthesize_session(&sweep[i], &proto, &BabbsParams::default()).unwrap())
        .collect();
    let noisy = clean
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let cfg = CorruptionConfig {
                seed: 40 + k as u64,
                ..CorruptionConfig::default()
            };
            corrupt_session(c, &cfg).unwrap()
        })
        .collect();
    (clean, noisy)
}

#[test]
fn small_window_pipeline_runs_end_to_end() {
    let (clean, noisy) = sessions(&[3, 60, 120, 33]);
    let data = make_dataset(&noisy[..3], 64, 16, 0.2, 5).unwrap();
    let cfg = TrainConfig {
        max_epochs: 3,
        window: 64,
        stride: 16,
        seed: 5,
        ..TrainConfig::default()
    };
    let (model, hist) = fit(&build_model_with_window(5, 64), &data, &cfg).unwrap();
    assert_eq!(hist.epochs.len(), 3);
    assert!(hist.epochs.iter().all(|e| e.train_loss.is_finite() && e.val_loss.is_finite()));
    assert!(hist.epochs[2].train_loss < hist.epochs[0].train_loss);

    let back = decode_model(&encode_model(&model).unwrap()).unwrap();
    assert_eq!(back, model);

    let out = denoise_session(&model, &noisy[3]).unwrap();
    assert_eq!(out.len(), noisy[3].len());
    assert_eq!(out.nan_count(), 0);
    assert_eq!(out, denoise_session(&back, &noisy[3]).unwrap());

    let report = evaluate("proposed", &clean[3], &noisy[3], &out).unwrap();
    assert!(report.aggregate_snr_db.is_finite());
    assert!((-1.0..=1.0).contains(&report.corr_similarity));

    let nl = nlms_denoise_session(&noisy[3], &model.norm_stats, &NlmsConfig::default()).unwrap();
    assert_eq!(nl.nan_count(), 0);
    assert!(evaluate("nlms", &clean[3], &noisy[3], &nl).unwrap().aggregate_psnr_db.is_finite());
}

#[test]
fn dropouts_never_reach_the_output() {
    let (_, noisy) = sessions(&[7]);
    assert!(noisy[0].nan_count() > 0);
    let model = build_model_with_window(2, 64);
    let out = denoise_session(&model, &noisy[0]).unwrap();
    assert_eq!(out.nan_count(), 0);
}
