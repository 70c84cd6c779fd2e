#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn cprlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cprlab"))
        .args(args)
        .env("CPRLAB_THREADS", "1")
        .output()
        .expect("spawn cprlab")
}

/// Runs the binary and panics with its stderr unless it succeeds.
pub fn ok(args: &[&str]) -> Output {
    let out = cprlab(args);
    assert!(
        out.status.success(),
        "cprlab {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

pub fn write(path: &Path, text: &str) -> PathBuf {
    fs::write(path, text).unwrap();
    path.to_path_buf()
}

pub fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map(|r| r.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    v.sort();
    v
}

/// Small but complete generate -> corrupt -> train -> denoise -> evaluate
/// -> compare run under `root`. Sessions are 15 cycles, the model window 64.
pub fn short_pipeline(root: &Path, seed: u64) {
    let s = seed.to_string();
    let gen_cfg = write(&root.join("gen.json"), r#"{"protocol": {"n_cycles": 15}}"#);
    let train_cfg = write(&root.join("train.json"), r#"{"window": 64, "stride": 32, "batch_size": 16}"#);
    let cmp_cfg = write(
        &root.join("compare.json"),
        r#"{"vanilla": {"window": 64, "hidden": 8, "epochs": 2}}"#,
    );
    let (clean, noisy, model) = (root.join("clean"), root.join("noisy"), root.join("model"));
    ok(&["generate", "--patients", "3", "--seed", &s, "--config", p(&gen_cfg), "--out", p(&clean)]);
    ok(&["corrupt", "--input", p(&clean), "--seed", &s, "--out", p(&noisy)]);
    let noisy_files: Vec<PathBuf> = files(&noisy)
        .into_iter()
        .filter(|f| f.extension().is_some_and(|x| x == "csv"))
        .collect();
    let (train, eval) = noisy_files.split_at(2);
    let eval = &eval[0];
    ok(&[
        "train", "--input", p(&train[0]), p(&train[1]), "--config", p(&train_cfg), "--seed", &s,
        "--epochs", "2", "--out", p(&model),
    ]);
    let ckpt = model.join("model.ckpt");
    ok(&["denoise", "--model", p(&ckpt), "--input", p(eval), "--out", p(&root.join("denoised"))]);
    let name = eval.file_name().unwrap();
    let clean_eval = clean.join(name);
    ok(&[
        "evaluate", "--clean", p(&clean_eval), "--noisy", p(eval),
        "--denoised", p(&root.join("denoised").join(name)),
        "--report", p(&root.join("eval").join("report.json")),
    ]);
    ok(&[
        "compare", "--model", p(&ckpt), "--train", p(&train[0]), p(&train[1]),
        "--clean", p(&clean_eval), "--noisy", p(eval), "--config", p(&cmp_cfg), "--seed", &s,
        "--out", p(&root.join("compare")),
    ]);
}

/// Every file below `dir`, relative, in sorted order.
pub fn tree(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    fn walk(base: &Path, d: &Path, out: &mut Vec<PathBuf>) {
        for f in files(d) {
            if f.is_dir() {
                walk(base, &f, out);
            } else {
                out.push(f.strip_prefix(base).unwrap().to_path_buf());
            }
        }
    }
    walk(dir, dir, &mut out);
    out
}
