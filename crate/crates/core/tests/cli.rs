//! Command-line contract on a small configuration.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use simclass::cli::Manifest;

const SMALL: &str = "\
seed = 3
mesh.nx = 12
mesh.ny = 10
field.n_modes = 6
data.n_samples = 80
labeling.k = 3
feature_selection.n_probe_nodes = 4
feature_selection.n_bins = 6
feature_selection.pairs_near = 20
feature_selection.pairs_far = 5
feature_selection.max_features = 8
augment.n_seeds = 6
evaluate.pca_components = 4
audit.sample_size = 20
";

const STAGES: [&str; 6] = ["generate", "label", "select-features", "augment", "evaluate", "audit-augmentation"];

fn simclass(dir: &Path, config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simclass"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary starts")
}

fn setup(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    fs::write(&config, text).unwrap();
    (dir, config)
}

fn run_stages(dir: &Path, config: &Path, stages: &[&str]) {
    for stage in stages {
        let out = simclass(dir, config, &[stage]);
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn full_chain_records_every_artifact() {
    let (dir, config) = setup(SMALL);
    run_stages(dir.path(), &config, &STAGES);
    let out = dir.path().join("out");
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let expected = [
        "audit.json",
        "augmented.json",
        "augmented.txt",
        "clustering.json",
        "dataset.txt",
        "dissimilarity.txt",
        "features.json",
        "labels.txt",
        "mesh.txt",
        "report.csv",
        "report.json",
        "splits.txt",
    ];
    assert_eq!(manifest.artifacts.keys().map(String::as_str).collect::<Vec<_>>(), expected);
    let hashes: std::collections::BTreeSet<_> = manifest.artifacts.values().map(|r| r.config_hash.clone()).collect();
    assert_eq!(hashes.len(), 1);
    for (name, record) in &manifest.artifacts {
        assert_eq!(simclass::io::sha256_file(&out.join(name)).unwrap(), record.sha256, "{name}");
    }
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("classifier,reducer,augmented,accuracy\n"));
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn rerunning_a_stage_is_byte_identical() {
    let (dir, config) = setup(SMALL);
    run_stages(dir.path(), &config, &STAGES[..3]);
    let out = dir.path().join("out");
    let before: Vec<Vec<u8>> = ["labels.txt", "dissimilarity.txt", "features.json"].iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
    run_stages(dir.path(), &config, &STAGES[1..3]);
    let after: Vec<Vec<u8>> = ["labels.txt", "dissimilarity.txt", "features.json"].iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
    assert!(before == after);
}

#[test]
fn mixing_config_hashes_needs_force() {
    let (dir, config) = setup(SMALL);
    run_stages(dir.path(), &config, &STAGES[..2]);
    let refused = simclass(dir.path(), &config, &["--seed", "4", "select-features"]);
    assert_eq!(refused.status.code(), Some(3));
    assert!(stderr(&refused).contains("--force"), "{}", stderr(&refused));
    let forced = simclass(dir.path(), &config, &["--seed", "4", "--force", "select-features"]);
    assert!(forced.status.success(), "{}", stderr(&forced));
}

#[test]
fn modified_artifact_is_detected() {
    let (dir, config) = setup(SMALL);
    run_stages(dir.path(), &config, &STAGES[..2]);
    let labels = dir.path().join("out/labels.txt");
    let mut text = fs::read_to_string(&labels).unwrap();
    text.replace_range(0..1, if text.starts_with('1') { "2" } else { "1" });
    fs::write(&labels, text).unwrap();
    let out = simclass(dir.path(), &config, &["select-features"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("labels.txt"), "{}", stderr(&out));
}

#[test]
fn stage_without_inputs_is_an_artifact_error() {
    let (dir, config) = setup(SMALL);
    assert_eq!(simclass(dir.path(), &config, &["label"]).status.code(), Some(3));
    run_stages(dir.path(), &config, &STAGES[..1]);
    let out = simclass(dir.path(), &config, &["augment"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("labels.txt"), "{}", stderr(&out));
}

#[test]
fn config_errors_name_the_key() {
    let (dir, config) = setup("seed = 1\nlabeling.kk = 3\n");
    let out = simclass(dir.path(), &config, &["generate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("labeling.kk"));

    let (dir, config) = setup("mesh.nx = 12\n");
    let out = simclass(dir.path(), &config, &["generate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`seed`"));
    // the flag supplies the missing seed
    let (dir, config) = setup(&SMALL.replace("seed = 3\n", ""));
    assert!(simclass(dir.path(), &config, &["--seed", "3", "generate"]).status.success());

    let (dir, config) = setup(&SMALL.replace("augment.n_seeds = 6", "augment.n_seeds = many"));
    let out = simclass(dir.path(), &config, &["generate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("augment.n_seeds"));
}

#[test]
fn generate_summary_carries_the_config_hash() {
    let (dir, config) = setup(SMALL);
    let out = simclass(dir.path(), &config, &["generate"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let hash = simclass::config::Config::parse(SMALL).unwrap().hash();
    assert!(text.contains("80 samples x 120 nodes"), "{text}");
    assert!(text.contains(&hash[..12]), "{text}");
}
