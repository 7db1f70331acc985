use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn pqc(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqc"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--json-errors")
        .output()
        .unwrap()
}

fn error_body(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("error body is JSON")
}

#[test]
fn rep_build_writes_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pqc(
        &["rep", "build"],
        &configs().join("reducible.json"),
        tmp.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rep: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("rep.json")).unwrap()).unwrap();
    let m = &rep["manifest"];
    assert_eq!(m["subcommand"], "rep build");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["seed"].is_u64());
    assert!(m["core_version"].is_string());
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, "{ \"rep\": ").unwrap();
    let o = pqc(&["rep", "build"], &cfg, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let body = error_body(&o);
    assert_eq!(body["error"]["code"], 2);
    assert_eq!(body["error"]["kind"], "config");
}

#[test]
fn unknown_config_field_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("extra.json");
    std::fs::write(&cfg, r#"{ "rep": { "field": "R", "d": 3, "p": 2, "q": 1, "recipe": "reducible", "params": { "translation": 3.0, "angles": [0.0, 1.2] } }, "colour": 1 }"#).unwrap();
    assert_eq!(pqc(&["enumerate"], &cfg, tmp.path()).status.code(), Some(2));
}

#[test]
fn word_cap_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_pqc"))
        .args(["count", "--max-words", "10", "--json-errors", "--config"])
        .arg(configs().join("single_orbit.json"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_body(&o)["error"]["kind"], "resource-cap");
}

#[test]
fn uncertified_rotation_group_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("rotation_control.json");
    for cmd in [&["rep", "build"][..], &["count"], &["gap-check"]] {
        let o = pqc(cmd, &cfg, tmp.path());
        assert_eq!(o.status.code(), Some(3), "{cmd:?}");
    }
}

#[test]
fn singular_matrix_exits_5() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("singular.json");
    std::fs::write(
        &cfg,
        r#"{ "rep": { "field": "R", "d": 3, "p": 2, "q": 1, "recipe": "reducible", "params": { "translation": 3.0, "angles": [0.0, 1.2] }, "power": 6 },
            "matrices": [[[1, 0, 0], [0, 1, 0], [0, 0, 0]]] }"#,
    )
    .unwrap();
    let o = pqc(&["project"], &cfg, tmp.path());
    assert_eq!(
        o.status.code(),
        Some(5),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
}

#[test]
fn same_seed_gives_identical_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("single_orbit.json");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(
        pqc(&["cocycle-check", "--seed", "9"], &cfg, &a)
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        pqc(&["cocycle-check", "--seed", "9"], &cfg, &b)
            .status
            .code(),
        Some(0)
    );
    let ja = std::fs::read(a.join("cocycle_check.json")).unwrap();
    assert_eq!(ja, std::fs::read(b.join("cocycle_check.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(v["manifest"]["seed"], 9);
}

#[test]
fn enumerate_writes_csv_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pqc(
        &["enumerate"],
        &configs().join("reducible.json"),
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(tmp.path().join("enumerate.csv")).unwrap();
    let rows = r.records().count();
    assert!(rows > 0);
}
