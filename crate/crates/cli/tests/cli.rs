use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdoh-kit"))
        .args(args)
        .env("SDOH_KIT_JOBS", "2")
        .output()
        .expect("spawn sdoh-kit")
}

fn ok(args: &[&str]) -> Output {
    let out = kit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

fn predictions_from_pairs(pairs: &Path, dest: &Path, drop: usize) {
    let mut out = String::new();
    for line in fs::read_to_string(pairs).unwrap().lines().skip(drop) {
        let v: Value = serde_json::from_str(line).unwrap();
        let rec = serde_json::json!({"doc_id": v["doc_id"], "generated": v["target"]});
        out.push_str(&rec.to_string());
        out.push('\n');
    }
    fs::write(dest, out).unwrap();
}

#[test]
fn synth_linearize_decode_score_round_trip() {
    let t = tempfile::tempdir().unwrap();
    let gold = t.path().join("gold");
    let pairs = t.path().join("pairs.jsonl");
    let preds = t.path().join("preds.jsonl");
    let dec = t.path().join("decoded");
    let rep = t.path().join("report");

    ok(&["synth", "--n", "40", "--seed", "9", "--out", s(&gold)]);
    ok(&["linearize", "--corpus", s(&gold), "--out", s(&pairs)]);
    assert!(t.path().join("pairs.jsonl.manifest.json").exists());
    predictions_from_pairs(&pairs, &preds, 0);
    ok(&["decode", "--corpus", s(&gold), "--predictions", s(&preds), "--out", s(&dec), "--lenient-match"]);
    assert_eq!(fs::read_to_string(dec.join("issues.jsonl")).unwrap(), "");

    let out = ok(&["score", "--gold", s(&gold), "--pred", s(&dec)]);
    let v = json(&out.stdout);
    for key in ["level1", "level2_exact", "level2_overlap"] {
        assert_eq!(v[key]["macro_f1"], 1.0, "{key}");
    }

    ok(&["score", "--gold", s(&gold), "--pred", s(&dec), "--out", s(&rep), "--level", "2", "--criterion", "exact"]);
    let r = json(&fs::read(rep.join("report.json")).unwrap());
    assert!(r.get("level1").is_none() && r.get("level2_overlap").is_none());
    let csv = fs::read_to_string(rep.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 16);
    let m = json(&fs::read(rep.join("manifest.json")).unwrap());
    assert_eq!(m["subcommand"], "score");
    assert_eq!(m["flags"]["criterion"], "exact");
    assert_eq!(m["flags"]["level"], "2");
}

#[test]
fn missing_prediction_yields_empty_annotation_and_issue() {
    let t = tempfile::tempdir().unwrap();
    let gold = t.path().join("gold");
    let pairs = t.path().join("pairs.jsonl");
    let preds = t.path().join("preds.jsonl");
    let dec = t.path().join("dec");
    ok(&["synth", "--n", "5", "--seed", "1", "--out", s(&gold)]);
    ok(&["linearize", "--corpus", s(&gold), "--out", s(&pairs)]);
    predictions_from_pairs(&pairs, &preds, 1);
    ok(&["decode", "--corpus", s(&gold), "--predictions", s(&preds), "--out", s(&dec)]);
    assert_eq!(fs::read_to_string(dec.join("synth_00000.ann")).unwrap().trim(), "");
    let issues = fs::read_to_string(dec.join("issues.jsonl")).unwrap();
    assert_eq!(issues.lines().count(), 1);
    assert!(issues.contains("synth_00000"));

    let out = ok(&["score", "--gold", s(&gold), "--pred", s(&dec), "--level", "1"]);
    assert!(json(&out.stdout)["level1"]["macro_recall"].as_f64().unwrap() < 1.0);
}

#[test]
fn unknown_doc_id_in_predictions_is_an_error() {
    let t = tempfile::tempdir().unwrap();
    let gold = t.path().join("gold");
    let preds = t.path().join("preds.jsonl");
    ok(&["synth", "--n", "2", "--out", s(&gold)]);
    fs::write(&preds, "{\"doc_id\":\"ghost\",\"generated\":\"[NONE]\"}\n").unwrap();
    let out = kit(&["decode", "--corpus", s(&gold), "--predictions", s(&preds), "--out", s(&t.path().join("d"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ghost"));
    assert!(!t.path().join("d").exists());
}

#[test]
fn missing_predictions_file_names_the_path() {
    let t = tempfile::tempdir().unwrap();
    let missing = t.path().join("nowhere.jsonl");
    let out = kit(&["decode", "--corpus", s(t.path()), "--predictions", s(&missing), "--out", s(&t.path().join("d"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.jsonl"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(kit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(kit(&["score", "--gold", "x"]).status.code(), Some(2));
    assert_eq!(kit(&["score", "--gold", "x", "--pred", "y", "--level", "3"]).status.code(), Some(2));
}

#[test]
fn validate_reports_violations_with_exit_1() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("a.txt"), "tabac actif").unwrap();
    fs::write(t.path().join("a.ann"), "T1\tTobacco 0 5\ttabac\n").unwrap();
    let out = kit(&["validate", "--corpus", s(t.path())]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out.stdout);
    assert_eq!(v["documents"], 1);
    assert!(!v["violations"].as_array().unwrap().is_empty());

    fs::write(t.path().join("a.ann"), "").unwrap();
    ok(&["validate", "--corpus", s(t.path())]);
}

#[test]
fn rerunning_into_existing_output_replaces_it() {
    let t = tempfile::tempdir().unwrap();
    let out = t.path().join("synth");
    ok(&["synth", "--n", "6", "--seed", "4", "--out", s(&out)]);
    fs::write(out.join("stale.txt"), "old").unwrap();
    let first = fs::read(out.join("synth_00003.ann")).unwrap();
    ok(&["synth", "--n", "6", "--seed", "4", "--out", s(&out)]);
    assert_eq!(fs::read(out.join("synth_00003.ann")).unwrap(), first);
    assert!(!out.join("stale.txt").exists());
    let leftovers: Vec<_> = fs::read_dir(t.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().starts_with(".sdoh-kit"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn split_writes_partition_and_listing() {
    let t = tempfile::tempdir().unwrap();
    let gold = t.path().join("gold");
    let sp = t.path().join("split");
    ok(&["synth", "--n", "10", "--out", s(&gold)]);
    ok(&["split", "--corpus", s(&gold), "--out", s(&sp), "--seed", "5"]);
    let listing = json(&fs::read(sp.join("split.json")).unwrap());
    let sizes: Vec<usize> = ["train", "dev", "test"]
        .iter()
        .map(|k| listing[k].as_array().unwrap().len())
        .collect();
    assert_eq!(sizes, [7, 1, 2]);
    for id in listing["dev"].as_array().unwrap() {
        let id = id.as_str().unwrap();
        assert!(sp.join("dev").join(format!("{id}.ann")).exists());
    }
    let again = t.path().join("again");
    ok(&["split", "--corpus", s(&gold), "--out", s(&again), "--seed", "5"]);
    assert_eq!(fs::read(again.join("split.json")).unwrap(), fs::read(sp.join("split.json")).unwrap());
}

#[test]
fn iaa_of_identical_directories_is_one() {
    let t = tempfile::tempdir().unwrap();
    let gold = t.path().join("gold");
    ok(&["synth", "--n", "8", "--out", s(&gold)]);
    let v = json(&ok(&["iaa", "--a", s(&gold), "--b", s(&gold)]).stdout);
    assert_eq!(v["entity_f"], 1.0);
    assert_eq!(v["relation_f"], 1.0);
}

#[test]
fn zcode_report_from_csv_inputs() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("n1.txt"), "vit seul").unwrap();
    fs::write(t.path().join("n1.ann"), "T1\tLiving_Alone 0 8\tvit seul\n").unwrap();
    fs::write(t.path().join("n2.txt"), "RAS").unwrap();
    let patients = t.path().join("patients.csv");
    let codes = t.path().join("codes.csv");
    fs::write(&patients, "doc_id,patient_id\nn1,p1\nn2,p2\n").unwrap();
    fs::write(&codes, "patient_id,code\np1,Z60.2\np2,Z59.0\n").unwrap();
    let corpus = t.path().to_path_buf();
    let v = json(&ok(&["zcode-report", "--corpus", s(&corpus), "--patients", s(&patients), "--codes", s(&codes)]).stdout);
    assert_eq!(v["n"], 2);
    assert_eq!(v["text_count"], 1);
    assert_eq!(v["structured_count"], 2);
    assert_eq!(v["overlap"], 1);
}

#[test]
fn section_and_schema_dump() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("a.txt"),
        "Antécédents :\nHTA\n\nMode de vie :\ntabac actif\n\nConclusion :\nRAS\n",
    )
    .unwrap();
    let out = t.path().join("s.jsonl");
    ok(&["section", "--corpus", s(t.path()), "--out", s(&out)]);
    let rec = json(fs::read_to_string(&out).unwrap().lines().next().unwrap().as_bytes());
    assert_eq!(rec["text"], "tabac actif");
    ok(&["section", "--corpus", s(t.path()), "--out", s(&out), "--all"]);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 3);

    let v = json(&ok(&["schema-dump"]).stdout);
    assert_eq!(v["categories"].as_array().unwrap().len(), 14);
}
