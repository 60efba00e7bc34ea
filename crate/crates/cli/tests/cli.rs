use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bofscan::dataset::Manifest;
use bofscan_core::Label;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bofscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bofscan")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small corpus and short training so each pipeline run takes about a second.
fn small_config(dir: &Path, extra: Value) -> PathBuf {
    let mut cfg = json!({
        "vocab_k": 20,
        "sweep_hidden": [1, 4],
        "train": { "epochs": 400 },
        "synth": { "scans": 10, "width": 384, "height": 256 }
    });
    merge(&mut cfg, extra);
    let path = dir.join("cfg.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn merge(base: &mut Value, extra: Value) {
    match (base, extra) {
        (Value::Object(b), Value::Object(e)) => {
            for (k, v) in e {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, e) => *b = e,
    }
}

fn synth(dir: &Path, cfg: &Path) -> PathBuf {
    let data = dir.join("data");
    let out = bofscan(&["synth", "--config", s(cfg), "--out", s(&data), "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    data.join("manifest.csv")
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let out = bofscan(&["bench", "--out", s(tmp.path()), "--methods", "BOF+RF"]);
    assert_eq!(code(&out), 1);
    let msg = stderr(&out);
    assert!(msg.contains("BOF+MLP") && msg.contains("PCA+GNB"), "{msg}");

    assert_eq!(code(&bofscan(&["train", "--out", s(tmp.path())])), 1);
    assert_eq!(code(&bofscan(&["frobnicate"])), 1);
    assert_eq!(code(&bofscan(&["--help"])), 0);

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"vocab_k": 0}"#).unwrap();
    assert_eq!(code(&bofscan(&["synth", "--config", s(&bad), "--out", s(tmp.path())])), 1);
    fs::write(&bad, r#"{"no_such_key": 1}"#).unwrap();
    assert_eq!(code(&bofscan(&["synth", "--config", s(&bad), "--out", s(tmp.path())])), 1);
}

#[test]
fn missing_inputs_exit_two() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.csv");
    let out = bofscan(&["train", "--manifest", s(&missing), "--out", s(tmp.path())]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn synth_is_consistent_with_annotations_and_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), json!({}));
    let manifest_path = synth(tmp.path(), &cfg);
    let manifest = Manifest::read(&manifest_path).unwrap();
    let root = manifest_path.parent().unwrap();
    assert!(manifest.rows.iter().any(|r| r.label == Label::Ma));
    assert!(manifest.rows.iter().any(|r| r.label == Label::Normal));
    for row in &manifest.rows {
        assert!(root.join(&row.path).is_file());
        let ann: Value =
            serde_json::from_slice(&fs::read(root.join("scans").join(format!("{}.json", row.source_id))).unwrap())
                .unwrap();
        let xs: Vec<f64> = ann["lesions"].as_array().unwrap().iter().map(|l| l[0].as_f64().unwrap()).collect();
        let nearest = xs.iter().map(|x| (x - row.center_x as f64).abs()).fold(f64::INFINITY, f64::min);
        match row.label {
            Label::Ma => assert!(nearest <= 15.0, "{row:?}"),
            Label::Normal => assert!(nearest > 30.0, "{row:?}"),
        }
    }

    let again = tmp.path().join("again");
    let out = bofscan(&["synth", "--config", s(&cfg), "--out", s(&again), "--seed", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(read_dir_bytes(root), read_dir_bytes(&again));
}

#[test]
fn no_lesions_gives_all_normal_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), json!({ "synth": { "lesions_min": 0, "lesions_max": 0 } }));
    let manifest = Manifest::read(&synth(tmp.path(), &cfg)).unwrap();
    assert!(!manifest.rows.is_empty());
    assert!(manifest.rows.iter().all(|r| r.label == Label::Normal));
}

#[test]
fn train_eval_predict_round_trip() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), json!({}));
    let manifest = synth(tmp.path(), &cfg);
    let art = tmp.path().join("art");
    let out = bofscan(&["train", "--config", s(&cfg), "--manifest", s(&manifest), "--out", s(&art), "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["vocab.json", "model.json", "split.json", "train_loss.csv", "term_vectors_train.csv"] {
        assert!(art.join(f).is_file(), "{f}");
    }
    let vocab: Value = serde_json::from_slice(&fs::read(art.join("vocab.json")).unwrap()).unwrap();
    assert_eq!(vocab["k"], 20);
    assert_eq!(vocab["centers"].as_array().unwrap().len(), 20);

    // same inputs, same artifacts
    let art2 = tmp.path().join("art2");
    assert_eq!(
        code(&bofscan(&["train", "--config", s(&cfg), "--manifest", s(&manifest), "--out", s(&art2), "--seed", "3"])),
        0
    );
    for f in ["vocab.json", "model.json", "split.json"] {
        assert_eq!(fs::read(art.join(f)).unwrap(), fs::read(art2.join(f)).unwrap(), "{f}");
    }

    let rep = tmp.path().join("rep");
    let out = bofscan(&[
        "eval",
        "--config",
        s(&cfg),
        "--manifest",
        s(&manifest),
        "--artifacts",
        s(&art),
        "--out",
        s(&rep),
        "--seed",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let metrics = fs::read_to_string(rep.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 2);
    assert!(metrics.lines().nth(1).unwrap().contains("BOF+MLP"));
    for f in ["word_occurrence.csv", "fig5.svg", "fig7_accuracy.svg", "fig7_precision.svg", "predictions.csv"] {
        assert!(rep.join(f).is_file(), "{f}");
    }

    // reported test rows are exactly the saved test split
    let split: Value = serde_json::from_slice(&fs::read(art.join("split.json")).unwrap()).unwrap();
    let want: Vec<u64> = split["test"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    let got: Vec<u64> = fs::read_to_string(rep.join("predictions.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(got, want);

    let pred = tmp.path().join("pred");
    let tv = rep.join("term_vectors_test.csv");
    let out = bofscan(&["predict", "--model", s(&art.join("model.json")), "--input", s(&tv), "--out", s(&pred)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read_to_string(pred.join("predictions.csv")).unwrap().lines().count(), want.len() + 1);
}

#[test]
fn mismatched_artifacts_exit_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), json!({}));
    let manifest = synth(tmp.path(), &cfg);
    let art = tmp.path().join("art");
    assert_eq!(code(&bofscan(&["train", "--config", s(&cfg), "--manifest", s(&manifest), "--out", s(&art)])), 0);
    let cfg10 = tmp.path().join("cfg10.json");
    let mut v: Value = serde_json::from_slice(&fs::read(&cfg).unwrap()).unwrap();
    v["vocab_k"] = json!(10);
    fs::write(&cfg10, v.to_string()).unwrap();
    let art10 = tmp.path().join("art10");
    assert_eq!(code(&bofscan(&["train", "--config", s(&cfg10), "--manifest", s(&manifest), "--out", s(&art10)])), 0);

    fs::copy(art10.join("model.json"), art.join("model.json")).unwrap();
    let out = bofscan(&[
        "eval",
        "--config",
        s(&cfg),
        "--manifest",
        s(&manifest),
        "--artifacts",
        s(&art),
        "--out",
        s(&tmp.path().join("rep")),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("dimension"), "{}", stderr(&out));
}

#[test]
fn two_ma_samples_starve_the_split() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), json!({}));
    let manifest_path = synth(tmp.path(), &cfg);
    let mut manifest = Manifest::read(&manifest_path).unwrap();
    let mut ma = 0;
    manifest.rows.retain(|r| {
        if r.label == Label::Ma {
            ma += 1;
            ma <= 2
        } else {
            true
        }
    });
    let starved = manifest_path.with_file_name("starved.csv");
    manifest.write(&starved).unwrap();
    let out = bofscan(&["train", "--config", s(&cfg), "--manifest", s(&starved), "--out", s(&tmp.path().join("art"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("split"), "{}", stderr(&out));
}

#[test]
fn diverging_training_exits_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), json!({ "train": { "learning_rate": 1.7e308, "epochs": 50 } }));
    let manifest = synth(tmp.path(), &cfg);
    let out = bofscan(&["train", "--config", s(&cfg), "--manifest", s(&manifest), "--out", s(&tmp.path().join("art"))]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn single_method_bench_and_sweep() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), json!({}));
    let manifest = synth(tmp.path(), &cfg);
    let rep = tmp.path().join("bench");
    let out =
        bofscan(&["bench", "--config", s(&cfg), "--manifest", s(&manifest), "--out", s(&rep), "--methods", "bof+mlp"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read_to_string(rep.join("metrics.csv")).unwrap().lines().count(), 2);
    let sweep = fs::read_to_string(rep.join("sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = sweep.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    let acc = |r: &Vec<&str>| r[1].parse::<f64>().unwrap();
    let best = rows.iter().find(|r| r[2] == "1").unwrap();
    assert!(acc(best) >= acc(&rows[0]));
    for f in ["fig6.svg", "fig5.svg", "fig7_sensitivity.svg", "table.txt"] {
        assert!(rep.join(f).is_file(), "{f}");
    }
}

#[test]
fn synthetic_registration_demo() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), json!({}));
    let out = bofscan(&["register", "--config", s(&cfg), "--out", s(tmp.path()), "--seed", "5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let got: Value = serde_json::from_slice(&fs::read(tmp.path().join("registration.json")).unwrap()).unwrap();
    let want: Value = serde_json::from_slice(&fs::read(tmp.path().join("expected.json")).unwrap()).unwrap();
    for (k, step) in [("angle", 1.0), ("scale", 0.02), ("tx", 1.0), ("ty", 1.0)] {
        let d = (got[k].as_f64().unwrap() - want[k].as_f64().unwrap()).abs();
        assert!(d <= step, "{k}: {got} vs {want}");
    }
    assert_eq!(code(&bofscan(&["register", "--out", s(tmp.path()), "--fixed", "a.pgm"])), 1);
}
