use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use hybrid_bn::data::schema::tabular_structure;

const BIN: &str = env!("CARGO_BIN_EXE_hbn");

fn hbn(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn hbn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = hbn(args);
    assert!(o.status.success(), "hbn {args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, seed: u64, n_train: usize, n_test: usize) -> PathBuf {
    let out = dir.join(format!("data{seed}_{n_train}"));
    ok(&[
        "simulate",
        "--seed",
        &seed.to_string(),
        "--n-train",
        &n_train.to_string(),
        "--n-test",
        &n_test.to_string(),
        "--out",
        s(&out),
    ]);
    out
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("small.json");
    let body = format!(r#"{{"epochs": 3, "batch_size": 64{extra}}}"#);
    std::fs::write(&path, body).unwrap();
    path
}

fn posteriors(out: &str) -> Vec<(String, f64)> {
    out.lines()
        .filter(|l| l.starts_with("P(") || l.starts_with("  P("))
        .map(|l| {
            let (k, v) = l.rsplit_once(" = ").unwrap();
            (k.trim().to_string(), v.trim().parse().unwrap())
        })
        .collect()
}

fn first_test_record(data: &Path) -> String {
    std::fs::read_to_string(data.join("test.jsonl")).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn help_and_usage_errors() {
    let o = hbn(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("simulate"));
    assert_eq!(hbn(&["simulate", "--bogus"]).status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic_and_checksummed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = ok(&["simulate", "--seed", "3", "--n-train", "400", "--n-test", "100", "--out", s(&a)]);
    assert!(out.contains("symptoms masked 133, text masked 133, fully observed 134"), "{out}");
    ok(&["simulate", "--seed", "3", "--n-train", "400", "--n-test", "100", "--out", s(&b)]);
    for f in ["train.jsonl", "test.jsonl", "train_ext.jsonl", "test_ext.jsonl", "embeddings.jsonl", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_object().unwrap();
    assert_eq!(files.len(), 5);
    for (name, hash) in files {
        assert_eq!(hash.as_str().unwrap().len(), 64, "{name}");
    }
    assert_eq!(manifest["seed"], 3);
}

#[test]
fn simulate_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = hbn(&["simulate", "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn missing_ground_truth_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere").join("gt.json");
    let o = hbn(&["simulate", "--seed", "1", "--ground-truth", s(&missing), "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(s(&missing)), "{}", stderr(&o));
}

#[test]
fn discr_training_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 2, 300, 100);
    let cfg = small_config(dir.path(), "");
    let mut bytes = Vec::new();
    for run in ["c1", "c2"] {
        let out = dir.path().join(run);
        ok(&["train", "--model", "discr", "--seed", "5", "--config", s(&cfg), "--data", s(&data), "--out", s(&out)]);
        let mut files: Vec<_> = walk(&out);
        files.sort();
        bytes.push(files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    assert!(!bytes[0].is_empty());
    assert_eq!(bytes[0], bytes[1]);
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn stochastic_training_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 2, 300, 100);
    let o = hbn(&["train", "--model", "ff", "--data", s(&data), "--out", s(&dir.path().join("ff"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn gen_manifest_records_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 4, 300, 100);
    let out = dir.path().join("gen");
    ok(&["train", "--model", "gen", "--alpha", "0.85", "--data", s(&data), "--out", s(&out)]);
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["alpha"], 0.85);
    assert_eq!(m["model"], "GEN");
}

#[test]
fn bn_trains_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 6, 4000, 100);
    let start = Instant::now();
    ok(&["train", "--model", "bn", "--data", s(&data), "--out", s(&dir.path().join("bn"))]);
    assert!(start.elapsed().as_secs_f64() < 5.0, "{:?}", start.elapsed());
}

#[test]
fn uniform_bn_gives_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 7, 300, 100);
    let ckpt = dir.path().join("bn");
    ok(&["train", "--model", "bn", "--data", s(&data), "--out", s(&ckpt)]);
    let uniform = tabular_structure().fit(&[]).unwrap();
    uniform.save(&ckpt.join("network.json")).unwrap();
    let out = ok(&["infer", "--checkpoint", s(&ckpt), "--evidence", "bs", "--record", &first_test_record(&data)]);
    let post = posteriors(&out);
    assert_eq!(post.len(), 2, "{out}");
    for (k, v) in post {
        assert!((v - 0.5).abs() < 1e-6, "{k} = {v}");
    }
}

#[test]
fn tabular_model_rejects_text_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 8, 300, 100);
    let ckpt = dir.path().join("bn");
    ok(&["train", "--model", "bn", "--data", s(&data), "--out", s(&ckpt)]);
    let o = hbn(&["infer", "--checkpoint", s(&ckpt), "--evidence", "bst", "--record", &first_test_record(&data)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--evidence bs"), "{}", stderr(&o));
}

#[test]
fn discr_text_only_posterior_is_the_classifier_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 9, 300, 100);
    let cfg = small_config(dir.path(), "");
    let ckpt = dir.path().join("discr");
    ok(&["train", "--model", "discr", "--seed", "1", "--config", s(&cfg), "--data", s(&data), "--out", s(&ckpt)]);
    let emb = data.join("embeddings.jsonl");
    let out = ok(&[
        "infer",
        "--checkpoint",
        s(&ckpt),
        "--evidence",
        "bt",
        "--embeddings",
        s(&emb),
        "--record",
        &first_test_record(&data),
    ]);
    let post = posteriors(&out);
    let get = |prefix: &str| post.iter().find(|(k, _)| k.starts_with(prefix)).map(|(_, v)| *v);
    let nets: Vec<_> = post.iter().filter(|(k, _)| k.contains(", T)") || k.contains("| season")).collect();
    assert_eq!(nets.len(), 2, "{out}");
    for d in ["pneu", "inf"] {
        let p = get(&format!("P({d} | B+T)")).expect(&out);
        let net = get(&format!("P({d} | season=")).expect(&out);
        assert!((p - net).abs() < 1e-6, "{d}: {p} vs {net}");
    }
}

#[test]
fn ablated_gen_ignores_text_given_symptoms() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 10, 300, 100);
    let ckpt = dir.path().join("gen-");
    ok(&["train", "--model", "gen", "--ablate", "--data", s(&data), "--out", s(&ckpt)]);
    let record = first_test_record(&data);
    let emb = data.join("embeddings.jsonl");
    let with_text = ok(&["infer", "--checkpoint", s(&ckpt), "--evidence", "bst", "--embeddings", s(&emb), "--record", &record]);
    let without = ok(&["infer", "--checkpoint", s(&ckpt), "--evidence", "bs", "--record", &record]);
    let a: Vec<f64> = posteriors(&with_text).into_iter().map(|(_, v)| v).collect();
    let b: Vec<f64> = posteriors(&without).into_iter().map(|(_, v)| v).collect();
    assert_eq!(a.len(), 2);
    assert_eq!(a, b);
}

#[test]
fn divergence_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 11, 300, 100);
    let cfg = small_config(dir.path(), r#", "learning_rate": 1e300"#);
    let o = hbn(&["train", "--model", "ff", "--seed", "0", "--config", s(&cfg), "--data", s(&data), "--out", s(&dir.path().join("ff"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("epoch"), "{}", stderr(&o));
}

#[test]
fn evaluate_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), 12, 600, 400);
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("results");
    ok(&["evaluate", "--seed", "0", "--seeds", "2", "--config", s(&cfg), "--data", s(&data), "--out", s(&out)]);
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&std::fs::read(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 42);
    let admissible = rows.iter().filter(|r| !r["mean"].is_null()).count();
    assert_eq!(admissible, 34);
    let text = std::fs::read_to_string(out.join("results.txt")).unwrap();
    let rendered = ok(&["report", "--results", s(&out.join("results.json"))]);
    assert_eq!(rendered, text);
    assert!(text.contains("n/a"));
}
