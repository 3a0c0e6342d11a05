use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn geoprobe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoprobe")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

/// The error object is the last stderr line.
fn err_json(out: &Output) -> Value {
    let s = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(s.lines().last().expect("stderr not empty")).expect("stderr is json")
}

fn hashes(dir: &Path) -> BTreeMap<String, String> {
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    m["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["path"].as_str().unwrap().to_string(), a["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn planted_pipeline_end_to_end_and_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok_json(&geoprobe(d, &["--out", "fx", "synth-fixture"]));
    let args = ["--out", "run1", "--k", "10", "run", "--dumps", "fx/fixture/dumps", "--adjacency", "fx/fixture/adjacency.csv"];
    let summary = ok_json(&geoprobe(d, &args));
    let steps = summary["steps"].as_array().unwrap();
    assert_eq!(steps[1]["communities"], 3);
    assert_eq!(steps[2]["connected_pct"], 100.0);

    let first = hashes(&d.join("run1"));
    for want in ["network/network.json", "network/network.dot", "network/edges.csv", "metrics/neighbourhood.csv", "metrics/neighbourhood.json"] {
        assert!(first.contains_key(want), "manifest lacks {want}");
    }
    assert_eq!(first.keys().filter(|k| k.starts_with("experts/")).count(), 12);

    // every community holds one block of four
    let net: Value = serde_json::from_str(&std::fs::read_to_string(d.join("run1/network/network.json")).unwrap()).unwrap();
    let blocks: BTreeMap<String, u64> = serde_json::from_str(&std::fs::read_to_string(d.join("fx/fixture/blocks.json")).unwrap()).unwrap();
    let comm = net["communities"].as_object().unwrap();
    for (a, ba) in &blocks {
        for (b, bb) in &blocks {
            assert_eq!(ba == bb, comm[a] == comm[b], "{a} vs {b}");
        }
    }

    ok_json(&geoprobe(d, &args));
    assert_eq!(hashes(&d.join("run1")), first);
    assert!(std::fs::read_dir(d.join("run1")).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().starts_with('.')));
    ok_json(&geoprobe(d, &["--out", "run1", "verify"]));

    std::fs::write(d.join("run1/metrics/neighbourhood.csv"), "tampered\n").unwrap();
    let out = geoprobe(d, &["--out", "run1", "verify"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(err_json(&out)["error"]["message"].as_str().unwrap().contains("metrics/neighbourhood.csv"));
}

#[test]
fn missing_adjacency_exits_2_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = geoprobe(d, &["--out", "o", "score-network", "--adjacency", "borders/missing.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let e = err_json(&out);
    assert_eq!(e["error"]["kind"], "missing_input");
    assert_eq!(e["error"]["path"], "borders/missing.csv");
    assert!(!d.join("o/metrics").exists());

    std::fs::write(d.join("cfg.json"), r#"{"paths": {"adjacency": "nowhere.csv"}}"#).unwrap();
    let out = geoprobe(d, &["--config", "cfg.json", "report"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(err_json(&out)["error"]["path"].as_str().unwrap().ends_with("nowhere.csv"));
}

#[test]
fn corrupt_dump_is_a_module_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::create_dir(d.join("dumps")).unwrap();
    std::fs::write(d.join("dumps/AAA.gprb"), b"NOPE and some bytes").unwrap();
    let out = geoprobe(d, &["--out", "o", "extract-experts", "--dumps", "dumps"]);
    assert_eq!(out.status.code(), Some(1));
    let e = err_json(&out);
    assert_eq!(e["error"]["kind"], "module");
    assert!(e["error"]["path"].as_str().unwrap().ends_with("AAA.gprb"));
    assert!(!d.join("o/experts").exists());
}

#[test]
fn bad_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoprobe(dir.path(), &["--k", "0", "report"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_json(&out)["error"]["kind"], "invalid_config");
}

#[test]
fn plan_counts_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s = ok_json(&geoprobe(
        d,
        &["--out", "o", "--seed", "3", "plan", "--concepts", "USA,FRA,CHN", "--prefixes", "DEU,IND", "--templates-per-concept", "2", "--samples", "4"],
    ));
    assert_eq!(s["jobs"], 12);
    assert_eq!(s["records"], 48);
    let text = std::fs::read_to_string(d.join("o/plan/plan.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 12);
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert!(!first["prefix"].as_str().unwrap().contains("<country>"));
}

#[test]
fn build_corpus_with_mask() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut news = String::new();
    let mut line = |text: String| {
        news.push_str(&serde_json::json!({"text": text, "language": "eng", "source_country": "USA"}).to_string());
        news.push('\n');
    };
    for i in 0..5 {
        line(format!("France and Germany signed agreement number {i} today."));
    }
    for i in 0..320 {
        line(format!("The local council approved budget item {i} after a long debate."));
    }
    std::fs::write(d.join("news.jsonl"), news).unwrap();
    let s = ok_json(&geoprobe(
        d,
        &["--out", "o", "build-corpus", "--news", "news.jsonl", "--source", "USA", "--language", "eng", "--skip-empty", "--mask"],
    ));
    assert_eq!(s["dataset"], "USA-eng");
    assert_eq!(s["concepts"], 2);
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(d.join("o/corpus/USA-eng.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["concepts"]["FRA"]["positives"], 100);
    assert_eq!(manifest["concepts"]["DEU"]["negatives"], 300);
    let masked = std::fs::read_to_string(d.join("o/corpus/USA-eng.masked.jsonl")).unwrap();
    let fra: Value = serde_json::from_str(masked.lines().next().unwrap()).unwrap();
    assert_eq!(fra["concept"], "DEU");
    assert!(fra["text"].as_str().unwrap().contains("[ENT]"));
}

fn record(concept: &str, prefix: &str, lang: &str, detected: &str, counts: &[(&str, u64)]) -> String {
    let counts: BTreeMap<&str, u64> = counts.iter().copied().collect();
    serde_json::json!({
        "concept": concept,
        "prefix_country": prefix,
        "template_id": 1,
        "expected_language": lang,
        "text": "placeholder text long enough to classify",
        "perplexity": 12.5,
        "detected_language": detected,
        "country_counts": counts,
    })
    .to_string()
}

#[test]
fn analyze_generation_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let lines = [
        record("USA", "FRA", "eng", "eng", &[("USA", 3), ("FRA", 1)]),
        record("USA", "FRA", "eng", "fra", &[("USA", 2), ("CHN", 1)]),
        record("USA", "CHN", "eng", "eng", &[("CHN", 4), ("IND", 1)]),
        record("FRA", "CHN", "eng", "eng", &[("DEU", 2), ("BRA", 2), ("JPN", 1)]),
    ];
    std::fs::write(d.join("gen.jsonl"), lines.join("\n")).unwrap();
    ok_json(&geoprobe(d, &["--out", "o", "--rs-m", "1", "analyze-generation", "--generated", "gen.jsonl", "--drift-threshold", "0.4"]));
    let rs = std::fs::read_to_string(d.join("o/generation/representation.csv")).unwrap();
    // groups: (FRA,CHN) top1 BRA; (USA,CHN) top1 CHN; (USA,FRA) top1 USA
    assert!(rs.contains("eng,prefix,1,1,3,0"), "{rs}");
    assert!(rs.contains("eng,concept,1,1,3,0"), "{rs}");
    let drift = std::fs::read_to_string(d.join("o/generation/drift.csv")).unwrap();
    assert!(drift.lines().any(|l| l.starts_with("pair,eng,USA,FRA,2,1,")), "{drift}");
    let shape = std::fs::read_to_string(d.join("o/generation/shape.csv")).unwrap();
    assert!(shape.lines().nth(1).unwrap().starts_with("eng,7,"), "{shape}");
    for f in ["annotated.jsonl", "top_share.csv", "drift.json"] {
        assert!(d.join("o/generation").join(f).is_file());
    }
}
