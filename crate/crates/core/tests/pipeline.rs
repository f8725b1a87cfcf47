//! Library-level pipeline checks: artifact determinism, figure content,
//! and the partial manifest on failure.

use cuspfuse::config::RunConfig;
use cuspfuse::pipeline::{artifacts, run_pipeline};
use cuspfuse::sampler::SamplerConfig;
use std::fs;
use std::path::Path;

fn small_config(out: &Path) -> RunConfig {
    RunConfig {
        sampler: SamplerConfig {
            n: 400,
            seed: 5,
            ..SamplerConfig::default()
        },
        grid_resolution: 15,
        output_dir: out.to_path_buf(),
        ..RunConfig::default()
    }
}

#[test]
fn two_runs_are_byte_identical_including_svg() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("one");
    let second = dir.path().join("two");
    let manifest_one = run_pipeline(&small_config(&first)).unwrap();
    let manifest_two = run_pipeline(&small_config(&second)).unwrap();
    assert_eq!(manifest_one, manifest_two);
    assert!(!manifest_one.partial);
    for entry in &manifest_one.files {
        let left = fs::read(first.join(&entry.path)).unwrap();
        let right = fs::read(second.join(&entry.path)).unwrap();
        assert_eq!(left, right, "artifact {} differs", entry.path);
    }
    // Every non-manifest file on disk is listed.
    let mut on_disk: Vec<String> = fs::read_dir(&first)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != artifacts::MANIFEST)
        .collect();
    on_disk.sort();
    let listed: Vec<String> = manifest_one.files.iter().map(|f| f.path.clone()).collect();
    assert_eq!(listed, on_disk);
}

#[test]
fn switching_figure_carries_fold_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_pipeline(&small_config(&out)).unwrap();
    let svg = fs::read_to_string(out.join(artifacts::FIG_2B)).unwrap();
    assert!(svg.contains(r#"class="cusp-curve""#));
    // Dashed switching line at b = 3 / (2 * 2^(1/3)).
    let expected = 3.0 / (2.0 * 2.0_f64.cbrt());
    let marker = r#"class="switch-line" data-b=""#;
    let start = svg.find(marker).expect("switch line present") + marker.len();
    let value: f64 = svg[start..].split('"').next().unwrap().parse().unwrap();
    assert!(
        (value - expected).abs() <= 1e-6,
        "switch line at b = {value}"
    );

    // The emitted fold polyline satisfies the curve equation.
    let curve = fs::read_to_string(out.join(artifacts::CUSP_CURVE)).unwrap();
    for line in curve.lines().skip(1) {
        let (a, b) = line.split_once(',').unwrap();
        let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
        assert!((2.0 * (b / 3.0).powf(1.5) - a.abs()).abs() <= 1e-9);
    }
}

#[test]
fn default_size_run_yields_plenty_of_targets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = RunConfig {
        output_dir: out.clone(),
        emit_svg: false,
        ..RunConfig::default()
    };
    run_pipeline(&cfg).unwrap();
    let ranking = fs::read_to_string(out.join(artifacts::SUSCEPTIBILITY)).unwrap();
    let metastable = ranking
        .lines()
        .filter(|l| l.contains(",metastable,"))
        .count();
    assert!(
        metastable >= 2,
        "only {metastable} metastable entries at n = 1000"
    );
}

#[test]
fn failed_run_leaves_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    fs::create_dir_all(out.join(artifacts::POPULATION)).unwrap(); // blocks the first write
    let err = run_pipeline(&small_config(&out)).unwrap_err();
    assert!(matches!(err, cuspfuse::pipeline::PipelineError::Io { .. }));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join(artifacts::MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest["partial"], true);
    assert_eq!(manifest["files"].as_array().unwrap().len(), 0);
}
