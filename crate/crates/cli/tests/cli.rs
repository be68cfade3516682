use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_linkdcm"));
    c.env_remove("LINKDCM_SEED").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SPEC: &str = r#"{"n_links": 60, "n_steps": 31, "seed": 5,
 "truth": {"model": "MNL", "parameters": {"ASC_Low": 22, "ASC_Medium": 11.8,
  "Beta_Medium_LinkSpeed": 13.7, "Beta_Medium_Density": 2.59, "Beta_Medium_FreeSpeed": 3.11, "Beta_Medium_NumLanes": 0.48,
  "Beta_Medium_PrevMediumGHG": 0.46, "Beta_Medium_PrevHighGHG": 0.74,
  "Beta_High_LinkSpeed": 11.7, "Beta_High_Density": -9.86, "Beta_High_FreeSpeed": 18.6, "Beta_High_NumLanes": 0.58,
  "Beta_High_PrevMediumGHG": 0.46, "Beta_High_PrevHighGHG": 0.74}},
 "attribute_laws": [{"kind": "uniform"}, {"kind": "beta", "alpha": 2, "beta": 2, "persistence": 0.2},
                    {"kind": "uniform"}, {"kind": "discrete", "levels": 4}]}"#;

/// Writes the generator spec and runs `synth`; returns the table path.
fn synth(dir: &Path) -> PathBuf {
    let spec = dir.join("spec.json");
    std::fs::write(&spec, SPEC).unwrap();
    let out = dir.join("synth");
    ok(&["synth", "--input", spec.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    out.join("table.csv")
}

#[test]
fn synth_writes_table_levels_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let table = synth(dir.path());
    let truth = json(&table.with_file_name("truth.json"));
    assert_eq!(truth["spec_version"], linkdcm::SCHEMA_VERSION);
    assert_eq!(truth["rows"], 1860);
    assert_eq!(truth["truth"]["model"], "MNL");
    let header = std::fs::read_to_string(&table).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("Scenario,Link Number,Time,Free Flow Speed"));
    assert!(header.ends_with("GHG ER g/sec"));
}

#[test]
fn pipeline_bundle_is_complete_and_versioned() {
    let dir = tempfile::tempdir().unwrap();
    let table = synth(dir.path());
    let out = dir.path().join("out");
    ok(&[
        "pipeline",
        "--input",
        table.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--seed",
        "42",
        "--n-train",
        "1200",
        "--n-test",
        "500",
    ]);
    let mut names: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    let expected = [
        "clustering.json",
        "confusion_mnl.csv",
        "confusion_ol.csv",
        "elasticity_mnl.csv",
        "elasticity_mnl.json",
        "elasticity_ol.csv",
        "elasticity_ol.json",
        "fitted_mnl.json",
        "fitted_ol.json",
        "levels.csv",
        "metrics.json",
        "predictions_mnl.csv",
        "predictions_ol.csv",
        "scaler.json",
        "test_frame.csv",
        "train_frame.csv",
    ];
    assert_eq!(names, expected);
    for n in names.iter().filter(|n| n.ends_with(".json")) {
        assert_eq!(json(&out.join(n))["spec_version"], linkdcm::SCHEMA_VERSION, "{n}");
    }
    let metrics = json(&out.join("metrics.json"));
    assert_eq!(metrics["split"]["n_train"], 1200);
    // accuracy is recomputable from the predictions file
    let preds = std::fs::read_to_string(out.join("predictions_mnl.csv")).unwrap();
    let rows: Vec<&str> = preds.lines().skip(1).collect();
    let hits = rows.iter().filter(|l| {
        let c: Vec<&str> = l.split(',').collect();
        c[3] == c[4]
    });
    let acc = hits.count() as f64 / rows.len() as f64;
    assert_eq!(metrics["models"][0]["accuracy"].as_f64().unwrap(), acc);
}

#[test]
fn oversized_split_fails_in_split_stage() {
    let dir = tempfile::tempdir().unwrap();
    let table = synth(dir.path());
    let out = dir.path().join("out");
    let res = run(&[
        "pipeline",
        "--input",
        table.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--n-train",
        "5000",
        "--n-test",
        "1000",
    ]);
    assert!(!res.status.success());
    let err = json(&out.join("error.json"));
    assert_eq!(err["stage"], "split");
    assert_eq!(err["spec_version"], linkdcm::SCHEMA_VERSION);
    let left: Vec<_> = std::fs::read_dir(&out).unwrap().collect();
    assert_eq!(left.len(), 1, "partial outputs were not removed");
}

#[test]
fn env_seed_is_a_fallback_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let table = synth(dir.path());
    let t = table.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    let common = ["--n-train", "800", "--n-test", "200", "--model", "ol"];
    let mut cmd = bin();
    cmd.args(["pipeline", "--input", t, "--out-dir", a.to_str().unwrap()]).args(common).env("LINKDCM_SEED", "7");
    assert!(cmd.status().unwrap().success());
    ok(&[&["pipeline", "--input", t, "--out-dir", b.to_str().unwrap(), "--seed", "7"][..], &common].concat());
    let mut cmd = bin();
    cmd.args(["pipeline", "--input", t, "--out-dir", c.to_str().unwrap(), "--seed", "8"])
        .args(common)
        .env("LINKDCM_SEED", "7");
    assert!(cmd.status().unwrap().success());
    let read = |d: &Path| std::fs::read(d.join("metrics.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let table = synth(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"input": "{}", "out_dir": "cfg_out", "seed": 3, "n_train": 900, "n_test": 300, "model": "mnl",
                "optimizer": {{"max_iter": 400}}}}"#,
            table.display()
        ),
    )
    .unwrap();
    ok(&["pipeline", "--config", cfg.to_str().unwrap(), "--n-test", "250"]);
    let metrics = json(&dir.path().join("cfg_out/metrics.json"));
    assert_eq!(metrics["seed"], 3);
    assert_eq!(metrics["split"]["n_train"], 900);
    assert_eq!(metrics["split"]["n_test"], 250);
    assert_eq!(metrics["models"].as_array().unwrap().len(), 1);
}

#[test]
fn subcommands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let table = synth(dir.path());
    let d = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let t = table.to_str().unwrap();
    ok(&["ingest", "--input", t, "--out-dir", &d("ingest")]);
    assert_eq!(json(&dir.path().join("ingest/ingest.json"))["rows"], 1860);
    ok(&["discretize", "--input", t, "--out-dir", &d("disc"), "--seed", "1"]);
    let clustering = json(&dir.path().join("disc/clustering.json"));
    assert_eq!(clustering["centroids"].as_array().unwrap().len(), 3);
    // generated bands are well separated, so K-means reproduces the generator's levels
    assert_eq!(
        std::fs::read_to_string(dir.path().join("disc/levels.csv")).unwrap(),
        std::fs::read_to_string(table.with_file_name("levels.csv")).unwrap()
    );
    ok(&["frame", "--input", t, "--levels", &d("disc/levels.csv"), "--out-dir", &d("frame")]);
    ok(&["split", "--input", &d("frame/frame.csv"), "--out-dir", &d("split"), "--n-train", "1300", "--n-test", "400"]);
    ok(&["fit-mnl", "--input", &d("split/train_frame.csv"), "--out-dir", &d("fit")]);
    ok(&["fit-ol", "--input", &d("split/train_frame.csv"), "--out-dir", &d("fit")]);
    for m in ["mnl", "ol"] {
        let fitted = d(&format!("fit/fitted_{m}.json"));
        let test = d("split/test_frame.csv");
        ok(&["predict", "--fitted", &fitted, "--input", &test, "--out-dir", &d("eval")]);
        ok(&["evaluate", "--fitted", &fitted, "--input", &test, "--out-dir", &d("eval")]);
        ok(&[
            "elasticity",
            "--fitted",
            &fitted,
            "--input",
            &test,
            "--out-dir",
            &d("eval"),
            "--alternative",
            "high",
            "--attribute",
            "link_speed",
        ]);
        let e = json(&dir.path().join(format!("eval/elasticity_{m}.json")));
        assert_eq!(e["entries"].as_array().unwrap().len(), 1);
        let metrics = json(&dir.path().join(format!("eval/metrics_{m}.json")));
        assert!(metrics["accuracy"].as_f64().unwrap() > 0.5);
    }
    ok(&[
        "iia",
        "--fitted",
        &d("fit/fitted_mnl.json"),
        "--input",
        &d("split/train_frame.csv"),
        "--out-dir",
        &d("iia"),
        "--dropped",
        "3",
    ]);
    let iia = json(&dir.path().join("iia/iia_drop_3.json"));
    assert!((0.0..=1.0).contains(&iia["p_value"].as_f64().unwrap()));
    let res = run(&[
        "iia",
        "--fitted",
        &d("fit/fitted_ol.json"),
        "--input",
        &d("split/train_frame.csv"),
        "--out-dir",
        &d("iia_ol"),
        "--dropped",
        "3",
    ]);
    assert!(!res.status.success());
    assert_eq!(json(&dir.path().join("iia_ol/error.json"))["stage"], "iia");
}

#[test]
fn missing_column_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("bad.csv");
    std::fs::write(&table, "Scenario,Link Number,Time\n1,1,1\n").unwrap();
    let out = dir.path().join("out");
    let res = run(&["ingest", "--input", table.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(!res.status.success());
    let err = json(&out.join("error.json"));
    assert_eq!(err["stage"], "ingest");
    assert!(err["message"].as_str().unwrap().contains("Free Flow Speed"), "{err}");
}
