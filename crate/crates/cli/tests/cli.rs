use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shl-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn shl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shl")).args(args).output().unwrap()
}

fn config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, json).unwrap();
    p.display().to_string()
}

#[test]
fn passing_run_writes_all_artifacts() {
    let dir = scratch("pass");
    let cfg = config(&dir, r#"{"mu": 0.3, "seed": 5}"#);
    let out_dir = dir.join("out");
    let o = shl(&["profile", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS profile[0].residual")));
    for f in ["record.json", "certificate.json", "profile_0.csv", "profile_1.csv"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
    let record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("record.json")).unwrap()).unwrap();
    // flags override the file
    assert_eq!(record["config"]["seed"], 9);
    assert_eq!(record["command"], "profile");
    assert!(record["config"].get("output_dir").is_none());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn config_problems_exit_with_4() {
    let dir = scratch("config");
    let unknown = config(&dir, r#"{"mu": 0.3, "typo_key": 1}"#);
    assert_eq!(shl(&["profile", "--config", &unknown]).status.code(), Some(4));
    let missing = dir.join("absent.json");
    assert_eq!(shl(&["profile", "--config", missing.to_str().unwrap()]).status.code(), Some(4));
    let geometry = config(&dir, r#"{"delta": 2.0, "R": 1.0}"#);
    assert_eq!(shl(&["ball", "--config", &geometry]).status.code(), Some(4));
    assert_eq!(shl(&["sideways", "--config", &geometry]).status.code(), Some(4));
    assert_eq!(shl(&["profile"]).status.code(), Some(4));
    assert_eq!(shl(&["--help"]).status.code(), Some(0));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn failed_checks_exit_with_3() {
    let dir = scratch("fail");
    let cfg = config(&dir, r#"{"mu": 0.3, "zeros": [0]}"#);
    let o = shl(&["nonunique", "--config", &cfg, "--out", dir.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["verdict"], "FAIL");
    std::fs::remove_dir_all(dir).unwrap();
}
