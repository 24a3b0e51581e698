//! End-to-end tests driving the `fibra` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fibra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fibra"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fibra_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fibra"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_cycle3(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("cycle3.json");
    fs::write(
        &path,
        r#"{"directed": true,
            "nodes": [{"id": 0}, {"id": 1}, {"id": 2}],
            "edges": [{"src": 0, "dst": 1}, {"src": 1, "dst": 2}, {"src": 2, "dst": 0}]}"#,
    )
    .unwrap();
    path
}

fn molecule_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/tricyclooctane.json")
        .canonicalize()
        .unwrap()
}

/// Writes a tiny IDX image/label pair: 28x28 images with a class-dependent
/// bright block, enough for the trainer to make progress.
fn write_idx_pair(dir: &Path, name: &str, samples: usize) -> (std::path::PathBuf, std::path::PathBuf) {
    let rows = 28usize;
    let cols = 28usize;
    let mut img = Vec::new();
    img.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    img.extend_from_slice(&(samples as u32).to_be_bytes());
    img.extend_from_slice(&(rows as u32).to_be_bytes());
    img.extend_from_slice(&(cols as u32).to_be_bytes());
    let mut lbl = Vec::new();
    lbl.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    lbl.extend_from_slice(&(samples as u32).to_be_bytes());
    for i in 0..samples {
        let class = i % 10;
        let mut pixels = vec![200u8; rows * cols];
        for r in 0..6 {
            for c in 0..6 {
                pixels[(2 + r) * cols + 2 + class + c] = 30;
            }
        }
        img.extend_from_slice(&pixels);
        lbl.push(class as u8);
    }
    let ip = dir.join(format!("{name}-images.idx"));
    let lp = dir.join(format!("{name}-labels.idx"));
    fs::write(&ip, img).unwrap();
    fs::write(&lp, lbl).unwrap();
    (ip, lp)
}

#[test]
fn color_reports_single_fiber_for_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cycle3(dir.path());
    let out = fibra(&["color", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("1 fiber"), "got: {text}");
    assert!(text.contains("size 3: 0 1 2"), "got: {text}");
}

#[test]
fn base_prints_molecule_compression_factor() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("base.json");
    let out = fibra(&[
        "base",
        molecule_path().to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("compression_factor 0.200"), "got: {text}");
    assert!(text.contains("base: 4 nodes"), "got: {text}");
    let doc = fs::read_to_string(out_path).unwrap();
    assert!(doc.contains("\"fiber_map\""));
}

#[test]
fn test_exit_codes_encode_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cycle = write_cycle3(dir.path());
    let chain = dir.path().join("chain3.txt");
    fs::write(&chain, "0 1\n1 2\n").unwrap();

    // Chain vs cycle: definitively non-isomorphic, exit 3.
    let out = fibra(&[
        "test",
        chain.to_str().unwrap(),
        cycle.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    assert!(text.contains("DifferentBases"), "got: {text}");
    assert!(text.contains("NotIsomorphic"), "got: {text}");

    // A graph against itself: no negative verdict, exit 0.
    let out = fibra(&[
        "test",
        cycle.to_str().unwrap(),
        cycle.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("SameBases"));
}

#[test]
fn gnn_check_reports_tiny_deviation() {
    let out = fibra(&[
        "gnn-check",
        "--seed",
        "1",
        molecule_path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("seed 1"), "got: {text}");
    assert!(text.contains("max deviation"), "got: {text}");
}

#[test]
fn fibra_seed_env_sets_default_seed() {
    let molecule = molecule_path();
    let via_env = fibra_env(
        &["gnn-check", molecule.to_str().unwrap()],
        "FIBRA_SEED",
        "42",
    );
    let via_flag = fibra(&["gnn-check", "--seed", "42", molecule.to_str().unwrap()]);
    assert_eq!(stdout(&via_env), stdout(&via_flag));
    // An explicit flag wins over the environment.
    let flag_wins = fibra_env(
        &["gnn-check", "--seed", "7", molecule.to_str().unwrap()],
        "FIBRA_SEED",
        "42",
    );
    let plain_seed7 = fibra(&["gnn-check", "--seed", "7", molecule.to_str().unwrap()]);
    assert_eq!(stdout(&flag_wins), stdout(&plain_seed7));
}

#[test]
fn train_fbgd_emits_csv_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = write_idx_pair(dir.path(), "train", 80);
    let ckpt = dir.path().join("model.json");
    let out = fibra(&[
        "train-fbgd",
        ip.to_str().unwrap(),
        lp.to_str().unwrap(),
        "--epochs",
        "3",
        "--period",
        "2",
        "--epsilon",
        "0.05",
        "--lr",
        "0.005",
        "--batch",
        "16",
        "--seed",
        "3",
        "--hidden1",
        "12",
        "--hidden2",
        "10",
        "--checkpoint",
        ckpt.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("epoch,loss,accuracy,size_l1,size_l2"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("1,"));
    for row in &rows {
        assert_eq!(row.split(',').count(), 5);
    }
    assert!(ckpt.exists());
    let saved = fs::read_to_string(ckpt).unwrap();
    assert!(saved.contains("\"layer_sizes\""));
}

#[test]
fn train_fbgd_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = write_idx_pair(dir.path(), "repro", 40);
    let args = [
        "train-fbgd",
        ip.to_str().unwrap(),
        lp.to_str().unwrap(),
        "--epochs",
        "2",
        "--seed",
        "9",
        "--hidden1",
        "8",
        "--hidden2",
        "8",
        "--lr",
        "0.01",
    ];
    let a = fibra(&args);
    let b = fibra(&args);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn train_fbgd_warns_on_oversized_limit() {
    let dir = tempfile::tempdir().unwrap();
    let (ip, lp) = write_idx_pair(dir.path(), "limit", 30);
    let out = fibra(&[
        "train-fbgd",
        ip.to_str().unwrap(),
        lp.to_str().unwrap(),
        "--limit",
        "500",
        "--epochs",
        "1",
        "--hidden1",
        "8",
        "--hidden2",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("limit exceeds"), "stderr: {err}");
}

#[test]
fn stats_builds_histogram_over_directory() {
    let dir = tempfile::tempdir().unwrap();
    write_cycle3(dir.path());
    fs::write(dir.path().join("chain.txt"), "0 1\n1 2\n").unwrap();
    fs::copy(molecule_path(), dir.path().join("molecule.json")).unwrap();
    let out = fibra(&["stats", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("histogram over 3 graphs"), "got: {text}");
    assert!(text.contains("mean"), "got: {text}");
}

#[test]
fn bad_flags_exit_with_usage_error() {
    let out = fibra(&["color", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = fibra(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_is_a_runtime_error() {
    let out = fibra(&["color", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn malformed_document_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{\"directed\": true, \"nodes\": [").unwrap();
    let out = fibra(&["color", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("invalid JSON"), "stderr: {err}");
}
