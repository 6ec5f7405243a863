use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_privsearch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_of(out: &Output) -> Value {
    serde_json::from_slice(out.stderr.trim_ascii()).unwrap()
}

#[test]
fn figure1_csv_has_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig.csv");
    let out = run(&[
        "figure1",
        "--K",
        "100",
        "--N",
        "2,3,4,5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["K", "N", "normalized_bound", "asymptote"]
    );
    let rows: Vec<(usize, usize, f64, f64)> = reader.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 396);
    assert_eq!(rows[0], (2, 2, 1.0, 2.0));
    let (_, _, b, a) = rows.iter().find(|r| r.0 == 10 && r.1 == 5).copied().unwrap();
    assert!((b - 1.2389324517).abs() < 1e-9 && a == 1.25);
    assert!(rows.iter().all(|r| r.2 < r.3));
}

#[test]
fn figure1_json_envelope() {
    let v = json_ok(&["figure1", "--K", "4", "--N", "2", "--format", "json"]);
    assert_eq!(v["subcommand"], "figure1");
    assert_eq!(v["config"]["K_max"], 4);
    assert!(v["tool_version"].is_string());
    assert_eq!(v["results"].as_array().unwrap().len(), 3);
}

#[test]
fn bound_on_exact_three() {
    let v = json_ok(&[
        "bound",
        "--kind",
        "exact",
        "--K",
        "3",
        "--N",
        "2",
        "--strategy",
        "exhaustive",
    ]);
    let r = &v["results"];
    assert!((r["normalized_bound"].as_f64().unwrap() - 1.3629912289).abs() < 1e-9);
    assert_eq!(r["strategy"], "exhaustive");
    assert_eq!(v["config"]["resolved_family"]["messages"], 3);
}

#[test]
fn bound_csv_lists_weighted_terms() {
    let out = run(&["bound", "--kind", "circular", "--K", "8", "--N", "3", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,message,conditional_entropy,weight"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn prop5_on_k8() {
    let v = json_ok(&["prop5", "--K", "8"]);
    let r = &v["results"];
    assert!((r["max_min"].as_f64().unwrap() - 0.6887218755408671).abs() < 1e-12);
    assert_eq!(r["argmax"], serde_json::json!([1, 2, 3]));
    assert_eq!(r["quarter_offset"]["h3_given_12"], 0.5);
}

#[test]
fn suffcond_profile() {
    let v = json_ok(&[
        "suffcond",
        "--kind",
        "circular",
        "--K",
        "16",
        "--sequence",
        "1,5,9,13",
        "--horizon",
        "3",
    ]);
    let rho = v["results"]["rho"].as_array().unwrap();
    assert_eq!(rho.len(), 3);
    assert!(rho.iter().all(|x| (0.0..=1.0).contains(&x.as_f64().unwrap())));
    let v = json_ok(&["suffcond", "--kind", "exact", "--K", "6", "--horizon", "2"]);
    assert_eq!(v["results"]["sequence"].as_array().unwrap().len(), 3);
}

#[test]
fn protocol_run_identity_codec() {
    let v = json_ok(&[
        "protocol-run",
        "--kind",
        "circular",
        "--K",
        "16",
        "--N",
        "2",
        "--L",
        "65536",
        "--seed",
        "7",
        "--theta",
        "3",
    ]);
    let r = &v["results"];
    assert_eq!(r["measured_rate"], 0.5);
    assert_eq!(r["download_bits"], 131072);
    assert_eq!(r["success"], true);

    let v = json_ok(&[
        "protocol-run",
        "--kind",
        "circular",
        "--K",
        "16",
        "--N",
        "2",
        "--L",
        "65536",
        "--seed",
        "7",
    ]);
    let r = &v["results"];
    assert_eq!(r["mean_measured_rate"], 0.5);
    assert_eq!(r["download_bits"], 131072);
    assert_eq!(r["sandwich_holds"], true);
}

#[test]
fn protocol_audit_small() {
    let v = json_ok(&[
        "protocol-audit",
        "--kind",
        "circular",
        "--K",
        "8",
        "--N",
        "2",
        "--trials",
        "500",
        "--bijection-samples",
        "20",
        "--seed",
        "3",
    ]);
    assert_eq!(v["results"]["bijection_holds"], true);
    assert_eq!(v["results"]["per_server"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes() {
    let out = run(&["bound", "--kind", "exact", "--K", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["kind"], "UsageError");

    let out = run(&[
        "protocol-run",
        "--kind",
        "circular",
        "--K",
        "8",
        "--N",
        "2",
        "--L",
        "64",
    ]);
    assert_eq!(out.status.code(), Some(2), "seed is mandatory");

    let out = run(&["bound", "--kind", "exact", "--K", "3", "--M", "2", "--N", "2"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["bound", "--kind", "circular", "--K", "9", "--N", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_of(&out)["kind"], "OddK");

    let out = run(&["bound", "--kind", "exact", "--K", "3", "--N", "1"]);
    assert_eq!(out.status.code(), Some(3));

    let out = run(&["bound", "--family", "/nonexistent/family.json", "--N", "2"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_of(&out)["kind"], "IOError");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"K\": 3, \"sets\": [[4]]}").unwrap();
    let out = run(&["bound", "--family", bad.to_str().unwrap(), "--N", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

fn file_bytes(args: &[&str], path: &Path) -> Vec<u8> {
    let mut full = args.to_vec();
    full.extend(["--out", path.to_str().unwrap()]);
    assert!(run(&full).status.success());
    std::fs::read(path).unwrap()
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let args = [
        "protocol-run",
        "--kind",
        "exact",
        "--K",
        "8",
        "--N",
        "3",
        "--L",
        "3000",
        "--seed",
        "11",
        "--trials",
        "5",
    ];
    assert_eq!(file_bytes(&args, &a), file_bytes(&args, &b));
    let args = ["figure1", "--K", "20"];
    assert_eq!(file_bytes(&args, &a), file_bytes(&args, &b));
}

#[test]
fn exported_families_feed_back_into_bound() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("nested.json");
    let out = run(&[
        "family-export",
        "--kind",
        "nested",
        "--K",
        "1000",
        "--M",
        "300",
        "--out",
        doc.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let from_file = json_ok(&["bound", "--family", doc.to_str().unwrap(), "--N", "2"]);
    let builtin = json_ok(&["bound", "--kind", "nested", "--K", "1000", "--M", "300", "--N", "2"]);
    assert_eq!(from_file["results"], builtin["results"]);
}
