use std::path::Path;
use std::process::{Command, Output};

use sparsect::core::projector::{apply_zero_mask, build_zero_mask};
use sparsect::core::RaySystem;
use sparsect::formats::{read_image_ascii, read_sinogram_ascii};
use sparsect::RunConfig;
use tempfile::tempdir;

const SMALL: [&str; 6] = ["--rows", "48", "--cols", "48", "--detectors", "71"];

fn sparsect(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsect"))
        .arg("--quiet")
        .args(args)
        .env("SPARSECT_OUT", out)
        .output()
        .unwrap()
}

fn with<'a>(cmd: &[&'a str]) -> Vec<&'a str> {
    [cmd, &SMALL[..]].concat()
}

fn small_config(views: usize) -> RunConfig {
    RunConfig {
        views,
        rows: 48,
        cols: 48,
        detectors: 71,
        ..RunConfig::default()
    }
}

#[test]
fn zero_iterations_return_the_masked_initial() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("run");

    let o = sparsect(&out, &with(&["simulate", "--views", "270"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = sparsect(&out, &with(&["reconstruct", "fbp"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = sparsect(&out, &with(&["correct", "--iters", "0"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let config = small_config(270);
    let sino = read_sinogram_ascii(&out.join("sinogram.txt"), 71, 270).unwrap();
    let fbp = read_image_ascii(&out.join("fbp.txt"), 48, 48).unwrap();
    let system = RaySystem::trace(&config.geometry(270).unwrap()).unwrap();
    let mask = build_zero_mask(&sino, &system).unwrap();
    let expected = apply_zero_mask(&fbp, &mask).unwrap();
    let corrected = read_image_ascii(&out.join("corrected.txt"), 48, 48).unwrap();
    assert_eq!(corrected, expected);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest-correct.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"][0]["usable_iterations"], 0);
    assert_eq!(manifest["config"]["views"], 270);
}

#[test]
fn unknown_method_is_a_usage_error() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("run");
    let o = sparsect(&out, &["reconstruct", "art"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("run");
    let o = sparsect(&out, &["correct"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let o = sparsect(&out, &["--config", "no-such.cfg", "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn sinogram_view_count_must_match() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("run");
    assert!(sparsect(&out, &with(&["simulate", "--views", "20"])).status.success());
    let o = sparsect(&out, &with(&["reconstruct", "dint", "--views", "30"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("dint.txt").exists());
    assert!(sparsect(&out, &with(&["reconstruct", "dint"])).status.success());
    assert!(out.join("dint.txt").exists() && out.join("dint.pgm").exists());
}

#[test]
fn saved_pools_replay_like_generated_ones() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("run");
    fn run40<'a>(cmd: &[&'a str]) -> Vec<&'a str> {
        with(&[cmd, &["--views", "40", "--seed", "9"]].concat())
    }
    assert!(sparsect(&out, &run40(&["simulate"])).status.success());
    assert!(sparsect(&out, &run40(&["reconstruct", "fbp"])).status.success());
    let o = sparsect(&out, &run40(&["pairs", "--budget", "3000"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pool = out.join("pairs.txt");
    let pool = pool.to_str().unwrap();
    let o = sparsect(&out, &run40(&["correct", "--iters", "3000", "--pairs", pool, "--name", "replayed"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(sparsect(&out, &run40(&["correct", "--iters", "3000"])).status.success());
    assert_eq!(
        std::fs::read(out.join("replayed.txt")).unwrap(),
        std::fs::read(out.join("corrected.txt")).unwrap()
    );
}
