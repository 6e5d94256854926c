use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn gazeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gazeq"))
        .args(args)
        .env("GAZEQ_LOG", "warn")
        .output()
        .expect("spawn gazeq")
}

fn ok(args: &[&str]) -> Output {
    let out = gazeq(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(sessions: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--out-dir", s(&dir.path().join("data")), "--seed", "3", "--sessions", sessions]);
    dir
}

fn write_config(dir: &Path, variants: &[&str]) -> PathBuf {
    let cfg = serde_json::json!({
        "paths": {
            "sessions": "data/sessions",
            "taxonomy": "data/taxonomy.tsv",
            "thesaurus": "data/thesaurus.tsv",
            "embeddings": "data/vectors.txt",
            "output": "out"
        },
        "variants": variants,
        "seed": 2
    });
    let path = dir.join("pipeline.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
    path
}

fn report_json(path: &Path) -> Value {
    let mut v: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("runtime_s");
    v
}

#[test]
fn separate_stages_reproduce_the_run_artifacts() {
    let dir = synth("40");
    let root = dir.path();
    let data = root.join("data");
    let cfg = write_config(root, &["rf", "rf-glf"]);
    let run_out = root.join("run");
    let table = ok(&["run", "--config", s(&cfg), "--out", s(&run_out)]);
    let table = String::from_utf8(table.stdout).unwrap();
    assert!(table.contains("RF-GLF") && table.contains("F1"), "{table}");

    let st = root.join("stages");
    std::fs::create_dir_all(&st).unwrap();
    let agg = st.join("sessions.agg.json");
    ok(&["ingest", s(&data.join("sessions")), "--out", s(&agg)]);
    ok(&["topics", s(&agg), "--thesaurus", s(&data.join("thesaurus.tsv")), "--out", s(&st.join("topics.json"))]);
    let matrix = st.join("matrix.csv");
    ok(&[
        "featurize",
        "--sessions",
        s(&data.join("sessions")),
        "--taxonomy",
        s(&data.join("taxonomy.tsv")),
        "--thesaurus",
        s(&data.join("thesaurus.tsv")),
        "--embeddings",
        s(&data.join("vectors.txt")),
        "--out",
        s(&matrix),
    ]);
    for v in ["rf", "rf-glf"] {
        let out = st.join(format!("report_{v}.json"));
        ok(&["train", "--matrix", s(&matrix), "--variant", v, "--seed", "2", "--out", s(&out)]);
    }

    for name in ["sessions.agg.json", "topics.json", "matrix.csv", "matrix.glf.csv"] {
        assert!(
            std::fs::read(run_out.join(name)).unwrap() == std::fs::read(st.join(name)).unwrap(),
            "{name} differs between run and single stages"
        );
    }
    for v in ["rf", "rf-glf"] {
        let name = format!("report_{v}.json");
        assert_eq!(report_json(&run_out.join(&name)), report_json(&st.join(&name)), "{name}");
    }

    let rendered = ok(&["report", s(&st.join("report_rf.json")), s(&st.join("report_rf-glf.json"))]);
    let rendered = String::from_utf8(rendered.stdout).unwrap();
    let lines: Vec<&str> = rendered.lines().collect();
    assert_eq!(lines.len(), 4, "{rendered}");
    assert!(lines[0].starts_with("Method"));
    assert!(lines[2].starts_with("RF ") && lines[3].starts_with("RF-GLF"));
}

#[test]
fn missing_embeddings_fail_in_featurize_without_partial_output() {
    let dir = synth("4");
    let root = dir.path();
    let data = root.join("data");
    let matrix = root.join("m/matrix.csv");
    let out = gazeq(&[
        "featurize",
        "--sessions",
        s(&data.join("sessions")),
        "--taxonomy",
        s(&data.join("taxonomy.tsv")),
        "--thesaurus",
        s(&data.join("thesaurus.tsv")),
        "--embeddings",
        s(&root.join("absent.txt")),
        "--out",
        s(&matrix),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("featurize"), "{err}");
    assert!(!matrix.exists() && !root.join("m/matrix.glf.csv").exists());

    std::fs::remove_file(data.join("vectors.txt")).unwrap();
    let cfg = write_config(root, &["rf"]);
    let out = gazeq(&["run", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("featurize"));
    let produced: Vec<String> = std::fs::read_dir(root.join("out"))
        .map(|rd| rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    assert!(produced.iter().all(|f| !f.starts_with("matrix") && !f.starts_with("report")), "{produced:?}");
}

#[test]
fn malformed_session_names_the_ingest_stage() {
    let dir = synth("3");
    let sessions = dir.path().join("data/sessions");
    let first = std::fs::read_dir(&sessions).unwrap().next().unwrap().unwrap().path();
    std::fs::write(&first, b"{\"session_id\": ").unwrap();
    let agg = dir.path().join("agg.json");
    let out = gazeq(&["ingest", s(&sessions), "--out", s(&agg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));
    assert!(!agg.exists());
}

#[test]
fn unknown_variant_is_a_usage_error() {
    let out = gazeq(&["train", "--matrix", "m.csv", "--variant", "knn", "--out", "r.json"]);
    assert!(!out.status.success());
}
