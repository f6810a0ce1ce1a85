use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn freerep(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_freerep")).args(args).output().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(freerep(&["spec", "--out", out]).status.code(), Some(0));
    assert_eq!(freerep(&["bogus"]).status.code(), Some(1));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"metric\": {\"kind\": \"weighted\",\n    \"lengths\": [\"1\", \"2/0\"]}\n}").unwrap();
    let r = freerep(&["spec", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("metric.lengths[1]"), "{err}");

    let r = freerep(&["rd", "--out", out, "--budget", "100"]);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stdout));

    let gvb = tmp.path().join("gvb.json");
    std::fs::write(&gvb, r#"{"grid": [1, 2, 3]}"#).unwrap();
    assert_eq!(freerep(&["gvb", "--config", gvb.to_str().unwrap(), "--out", out]).status.code(), Some(2));
}

#[test]
fn manifest_lists_every_file_with_its_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    assert!(freerep(&["conv", "--out", out.to_str().unwrap()]).status.success());
    let m = manifest(out);
    let files = m["files"].as_array().unwrap();
    let mut listed: Vec<String> = files.iter().map(|f| f["path"].as_str().unwrap().to_string()).collect();
    for f in files {
        let bytes = std::fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), freerep_cli::cache::sha256_hex(&bytes));
    }
    listed.push("manifest.json".into());
    listed.sort();
    let mut on_disk: Vec<String> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
}

#[test]
fn cache_hits_and_forced_recompute_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (a, b) = (a.to_str().unwrap(), b.to_str().unwrap());
    assert!(freerep(&["xi", "--out", a]).status.success());
    assert!(manifest(Path::new(a))["cache"]["hits"].as_array().unwrap().is_empty());
    assert!(freerep(&["xi", "--out", a]).status.success());
    assert!(!manifest(Path::new(a))["cache"]["hits"].as_array().unwrap().is_empty());
    let cached = std::fs::read(Path::new(a).join("xi.csv")).unwrap();

    assert!(freerep(&["xi", "--out", b, "--no-cache"]).status.success());
    assert!(!Path::new(b).join("cache").exists());
    assert_eq!(std::fs::read(Path::new(b).join("xi.csv")).unwrap(), cached);
}
