use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bdci_core::bdci::{SegmentCategory, SegmentHead};
use bdci_core::io::ResultDocument;
use bdci_core::nn::{category_dims, BundleMetadata, Mlp, ModelBundle, TrainConfig};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bdci(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdci")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn doc(o: &Output) -> ResultDocument {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(o));
    ResultDocument::from_json(&stdout(o)).unwrap()
}

fn f(name: &str) -> String {
    fixture(name).display().to_string()
}

/// Untrained bundle: zero correction on the PCHIP head and σ′ = 1, so each
/// segment's σ equals its local scale.
fn write_constant_bundle(dir: &Path) -> PathBuf {
    let models: BTreeMap<SegmentCategory, Mlp> = SegmentCategory::ALL
        .into_iter()
        .map(|c| {
            let mut m = Mlp::zeros(&category_dims(c.input_dim()));
            m.set_bias(6, &[0.0, 0.0]);
            (c, m)
        })
        .collect();
    let config = TrainConfig { head: SegmentHead::PchipLocal, ..Default::default() };
    let bundle = ModelBundle::new(models, BundleMetadata::new(0, "fixture", config)).unwrap();
    let path = dir.join("constant.bundle");
    std::fs::write(&path, bundle.to_bytes()).unwrap();
    path
}

#[test]
fn identical_files_give_zero_for_every_method() {
    for method in ["cubic", "csi", "pchip", "akima"] {
        let o = bdci(&["bd", &f("anchor.csv"), &f("anchor.csv"), "--method", method]);
        let d = doc(&o);
        assert_eq!(d.summary, format!("BD-BR ({method}) 0.0000%"));
        assert_eq!(d.delta, 0.0);
    }
}

#[test]
fn rate_scaled_copy_is_minus_twenty_percent() {
    for method in ["cubic", "csi", "pchip", "akima"] {
        let o = bdci(&["bd", &f("anchor.csv"), &f("target_rate_x0.8.csv"), "--method", method, "--format", "text"]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o).trim(), format!("BD-BR ({method}) -20.0000%"));
    }
    let d = doc(&bdci(&["bd", &f("anchor.csv"), &f("target_quality_plus0.5.csv"), "--mode", "quality"]));
    assert!((d.delta - 0.5).abs() < 1e-9);
    assert_eq!(d.summary, "BD-quality (pchip) 0.5000");
}

#[test]
fn document_carries_digests_and_round_trips() {
    let o = bdci(&["bd", &f("anchor.csv"), &f("target_rate_x0.8.csv")]);
    let d = doc(&o);
    assert_eq!(d.inputs.len(), 2);
    assert_eq!(d.inputs[0].role, "anchor");
    assert_eq!(d.inputs[0].points, 5);
    assert_eq!(d.inputs[0].sha256.len(), 64);
    assert_eq!(d.to_json(), stdout(&o));
    assert_eq!(stdout(&bdci(&["bd", &f("anchor.csv"), &f("target_rate_x0.8.csv")])), stdout(&o));
}

#[test]
fn validation_errors_exit_2_naming_the_file() {
    let o = bdci(&["bd", &f("anchor.csv"), &f("target_3pt.csv")]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error: kind=TooFewPoints file="), "{err}");
    assert!(err.contains("target_3pt.csv"));

    let o = bdci(&["bd", &f("bad_number.csv"), &f("anchor.csv")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kind=Parse"));
    assert!(stderr(&o).contains("line 4"));

    let o = bdci(&["bd", &f("non_monotone.csv"), &f("anchor.csv")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kind=NonMonotoneQuality"));

    let o = bdci(&["bd", &f("anchor.csv"), &f("target_lpips.csv")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kind=MetricMismatch"));
}

#[test]
fn disjoint_curves_exit_3() {
    let o = bdci(&["bd", &f("anchor.csv"), &f("target_disjoint.csv")]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error: kind=EmptyIntersection"));
}

#[test]
fn unknown_flags_exit_64() {
    assert_eq!(bdci(&["bd", &f("anchor.csv"), &f("anchor.csv"), "--frobnicate"]).status.code(), Some(64));
    assert_eq!(bdci(&["nonsense"]).status.code(), Some(64));
    assert_eq!(bdci(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_file_exits_1() {
    let o = bdci(&["bd", &f("anchor.csv"), "/nonexistent/target.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kind=Io file=/nonexistent/target.csv"));
}

#[test]
fn bdci_identical_sparse_files_center_on_zero() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = write_constant_bundle(dir.path());
    let o = bdci(&["bdci", &f("anchor.csv"), &f("anchor.csv"), "--models", &bundle.display().to_string()]);
    let d = doc(&o);
    assert_eq!(d.delta, 0.0);
    let [lo, hi] = d.interval_delta.unwrap();
    assert!(lo < 0.0 && hi > 0.0);
    assert!(d.interval_rate_percent.is_some());
    assert!(d.summary.starts_with("BDCI-BR 0.0000% ["), "{}", d.summary);
    assert_eq!(d.bundle_hash.as_deref().map(str::len), Some(64));
}

#[test]
fn bdci_dense_anchor_interval_contains_the_shift() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = write_constant_bundle(dir.path());
    let o = bdci(&["bdci", &f("dense_anchor.csv"), &f("target_sparse_x0.8.csv"), "--models", &bundle.display().to_string()]);
    let d = doc(&o);
    assert!(d.degenerate.anchor_exact);
    assert!(!d.degenerate.target_exact);
    let [lo, hi] = d.interval_rate_percent.unwrap();
    assert!(lo <= -20.0 && -20.0 <= hi, "[{lo}, {hi}]");
    assert!((d.delta_rate_percent.unwrap() + 20.0).abs() < 1.0);
}

#[test]
fn corrupted_bundle_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = write_constant_bundle(dir.path());
    let mut bytes = std::fs::read(&bundle).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&bundle, &bytes).unwrap();
    let o = bdci(&["bdci", &f("anchor.csv"), &f("anchor.csv"), "--models", &bundle.display().to_string()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error: kind=ChecksumMismatch"), "{}", stderr(&o));

    std::fs::write(&bundle, b"not a bundle at all").unwrap();
    let o = bdci(&["bdci", &f("anchor.csv"), &f("anchor.csv"), "--models", &bundle.display().to_string()]);
    assert_eq!(o.status.code(), Some(4));
}

fn run_ok(args: &[&str]) -> Output {
    let o = bdci(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    o
}

/// gen-corpus (train and test) → train → bench under `dir`; returns the
/// bundle checksum printed by train.
fn pipeline(dir: &Path, jobs: &str) -> String {
    let p = |s: &str| dir.join(s).display().to_string();
    run_ok(&["gen-corpus", "--out", &p("train"), "--curves", "200", "--seed", "5", "--samplings", "10", "--jobs", jobs]);
    run_ok(&["gen-corpus", "--out", &p("test"), "--curves", "30", "--seed", "5", "--split", "test"]);
    let o = run_ok(&["train", "--corpus", &p("train"), "--out", &p("model.bundle"), "--seed", "3", "--epochs", "2", "--jobs", jobs]);
    let checksum = stdout(&o).trim().to_string();
    let o = run_ok(&["bench", "--corpus", &p("test"), "--models", &p("model.bundle"), "--report", &p("report.json"), "--jobs", jobs]);
    assert!(!stderr(&o).contains("warning"));
    checksum
}

#[test]
fn pipeline_round_trip_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sum_a = pipeline(a.path(), "1");
    let sum_b = pipeline(b.path(), "2");
    assert_eq!(sum_a, sum_b);

    let bundle_bytes = std::fs::read(a.path().join("model.bundle")).unwrap();
    assert_eq!(bdci_core::nn::bundle::sha256_hex(&bundle_bytes), sum_a);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(a.path().join("report.json")).unwrap()).unwrap();
    let bundle = ModelBundle::from_bytes(&bundle_bytes).unwrap();
    assert_eq!(report["bundle_digest"], serde_json::Value::String(bundle.digest()));
    let train: serde_json::Value = serde_json::from_slice(&std::fs::read(a.path().join("model.bundle.train.json")).unwrap()).unwrap();
    assert_eq!(train["bundle_sha256"], serde_json::Value::String(sum_a.clone()));
    assert_eq!(train["categories"].as_object().unwrap().len(), 7);

    for name in ["train/records.ndjson", "train/manifest.json", "model.bundle.train.json", "report.json", "report.json.widths.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
    let csv = std::fs::read_to_string(a.path().join("report.json.widths.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,mean_width_bd_br,mean_width_bd_quality"));
    assert_eq!(csv.lines().count(), 6);

    // Deliberate misuse: benchmarking on the training split.
    let p = |s: &str| a.path().join(s).display().to_string();
    let o = run_ok(&["bench", "--corpus", &p("train"), "--models", &p("model.bundle"), "--report", &p("misuse.json")]);
    assert!(stderr(&o).contains("warning: benchmarking on a corpus whose manifest says split=train"));
}

#[test]
fn partial_corpus_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c").display().to_string();
    run_ok(&["gen-corpus", "--out", &c, "--curves", "5", "--seed", "1"]);
    let records = dir.path().join("c/records.ndjson");
    let text = std::fs::read_to_string(&records).unwrap();
    let half: String = text.lines().take(text.lines().count() / 2).map(|l| format!("{l}\n")).collect();
    std::fs::write(&records, half).unwrap();
    let o = bdci(&["train", "--corpus", &c, "--out", &dir.path().join("m.bundle").display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: kind=Corpus"), "{}", stderr(&o));
}
