use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qaw"))
        .args(args)
        .current_dir(workspace())
        .output()
        .expect("spawn qaw")
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

fn write_config(dir: &TempDir, body: &str) -> String {
    let path = dir.path().join("config.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn run(target: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", target, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    qaw(&args)
}

/// Data rows of a report, without the header and the `# summary` block.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let body = fs::read_to_string(path).unwrap();
    body.lines()
        .skip(1)
        .take_while(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn summary(path: &Path, key: &str) -> Option<String> {
    let body = fs::read_to_string(path).unwrap();
    body.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .find_map(|l| l.strip_prefix(&format!("{key},")).map(str::to_string))
}

fn csvs(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn every_shipped_config_validates() {
    let mut n = 0;
    for entry in fs::read_dir(workspace().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let out = qaw(&["validate", "--config", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), text(&out));
        assert!(text(&out).starts_with("valid"));
        n += 1;
    }
    assert!(n >= 7);
}

#[test]
fn deformation_of_modulus_one_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "n_max = 2\n[space]\ndim = 1\nblocks = [0]\nq = [[1.0]]\n");
    let out = qaw(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out).contains("max|q_ij| < 1"), "{}", text(&out));
}

#[test]
fn oversized_level_names_the_word_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "n_max = 6\n[space]\ndim = 4\nblocks = [0, 1, 2, 3]\nq = [[0.1, 0.1, 0.1, 0.1], [0.1, 0.1, 0.1, 0.1], [0.1, 0.1, 0.1, 0.1], [0.1, 0.1, 0.1, 0.1]]\n",
    );
    let out = qaw(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out).contains("4^6 = 4096"), "{}", text(&out));
}

#[test]
fn violations_are_reported_together() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "n_max = 0\n[space]\ndim = 1\nblocks = [0]\nq = [[1.5]]\n[tolerances]\nbraid = -1.0\n");
    let out = qaw(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let listed = text(&out).lines().filter(|l| l.starts_with("  - ")).count();
    assert!(listed >= 3, "{}", text(&out));
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "n_max = 2\ncolour = 1\n[space]\ndim = 1\nblocks = [0]\nq = [[0.3]]\n");
    assert_eq!(qaw(&["validate", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn missing_config_is_an_io_error() {
    let out = qaw(&["validate", "--config", "/nonexistent/qaw.toml"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qaw(&["run", "everything", "--config", "configs/minimal.toml"]).status.code(), Some(1));
    assert_eq!(qaw(&["--help"]).status.code(), Some(0));
}

#[test]
fn moments_fixture_agrees_on_both_paths_and_exactly() {
    let dir = TempDir::new().unwrap();
    let out = run("moments", "configs/moments.toml", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let table = rows(&dir.path().join("moments.csv"));
    let fixture = &table[0];
    assert_eq!(fixture[1], "config");
    assert_eq!(fixture[5], "2.30000000000000e0");
    assert_eq!(fixture[7], "2.30000000000000e0");
    assert_eq!(fixture[10], "23/10");
    assert!(table.iter().all(|r| r.last().unwrap() == "true"));
    assert!(!dir.path().join("failures.json").exists());
}

#[test]
fn ultra_converges_at_rate_one_over_m() {
    let dir = TempDir::new().unwrap();
    let out = run("ultra", "configs/ultra.toml", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    let path = dir.path().join("ultra.csv");
    let slope: f64 = summary(&path, "word_0_slope").unwrap().parse().unwrap();
    assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
    assert_eq!(summary(&path, "word_1_vanishing").as_deref(), Some("true"));
    assert_eq!(rows(&path)[0][9], "106/25");
    let remainder = dir.path().join("ultra_remainder.csv");
    assert_eq!(summary(&remainder, "decreasing").as_deref(), Some("true"));
}

#[test]
fn full_run_is_reproducible_and_well_formed() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = run("all", "configs/all.toml", dir.path(), &[]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out));
    }
    let files = csvs(a.path());
    assert_eq!(files.len(), 7);
    for file in &files {
        let name = file.file_name().unwrap();
        assert_eq!(fs::read(file).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
        let body = fs::read_to_string(file).unwrap();
        let header = body.lines().next().unwrap();
        assert!(!header.starts_with('#') && header.contains(','), "{name:?}");
        assert!(body.contains("\n# summary\n# config_hash,"), "{name:?}");
        let n = rows(file).len();
        assert_eq!(summary(file, "rows"), Some(n.to_string()), "{name:?}");
    }
    let manifest: Value = serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "pass");
    assert_eq!(manifest["experiments"].as_array().unwrap().len(), 5);
    let listed: usize = manifest["experiments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["files"].as_array().unwrap().len())
        .sum();
    assert_eq!(listed, files.len());
    assert!(fs::read_dir(a.path()).unwrap().all(|e| !e.unwrap().path().to_string_lossy().ends_with(".partial")));
}

#[test]
fn seed_override_changes_random_words_only() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    run("moments", "configs/moments.toml", a.path(), &["--seed", "1"]);
    run("moments", "configs/moments.toml", b.path(), &["--seed", "2"]);
    let (ra, rb) = (rows(&a.path().join("moments.csv")), rows(&b.path().join("moments.csv")));
    assert_eq!(ra[0], rb[0]);
    assert_ne!(ra[1], rb[1]);
}

#[test]
fn assertion_failures_exit_two_with_replay() {
    let dir = TempDir::new().unwrap();
    let out = run("moments", "configs/moments.toml", dir.path(), &["--tolerance-scale", "1e-30"]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out));
    let doc: Value = serde_json::from_slice(&fs::read(dir.path().join("failures.json")).unwrap()).unwrap();
    let failures = doc["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    for f in failures {
        assert_eq!(f["experiment"], "moments");
        assert!(f["replay"]["experiment_seed"].is_u64());
    }
    assert!((doc["tolerance_scale"].as_f64().unwrap() / 1e-30 - 1.0).abs() < 1e-12);

    // A clean rerun into the same directory clears the stale failure record.
    let out = run("moments", "configs/moments.toml", dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!dir.path().join("failures.json").exists());
}
