use std::fs::File;
use std::process::{Command, Output};

use hmatrix::hmatrix::dump::read_dump;
use hmatrix_harness::generate;
use serde_json::Value;

fn hmx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmx")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn verify_passes_and_reports_schema() {
    let out = hmx(&["verify", "--n", "64", "--leaf-size", "4", "--rank", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["passed"], true);
    assert_eq!(v["problem"]["n"], 64);
    let names: Vec<&str> = v["residuals"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    for name in ["factorization", "inverse", "solve", "inplace_agreement"] {
        assert!(names.contains(&name), "{name} missing from {names:?}");
    }
    assert!(v["residuals"].as_array().unwrap().iter().all(|r| r["oracle"].is_string()));
}

#[test]
fn too_small_constants_exit_with_violations() {
    let out = hmx(&["verify", "--n", "64", "--leaf-size", "4", "--rank", "4", "--c-ad", "0", "--c-mg-prime", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["passed"], false);
    assert!(v["domination"]["violations"].as_u64().unwrap() > 0);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(hmx(&["verify", "--n", "8,16"]).status.code(), Some(2));
    assert_eq!(hmx(&["verify", "--n", "0"]).status.code(), Some(2));
    assert_eq!(hmx(&["verify", "--adm", "strong"]).status.code(), Some(2));
    assert_eq!(hmx(&["dump", "--n", "8"]).status.code(), Some(2));
    assert_eq!(hmx(&["bench", "--n", "8", "--eta", "-1"]).status.code(), Some(2));
}

#[test]
fn bench_csv_is_deterministic() {
    let args = ["bench", "--n", "32,64", "--leaf-size", "4", "--rank", "2,4", "--adm", "weak"];
    let (a, b) = (hmx(&args), hmx(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let mut r = csv::Reader::from_reader(a.stdout.as_slice());
    assert_eq!(r.headers().unwrap().len(), hmatrix_harness::bench::HEADER.len());
    assert_eq!(r.records().count(), 4);
}

#[test]
fn dump_round_trips_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.bin");
    let p = path.to_str().unwrap();
    let out = hmx(&["dump", "--n", "32", "--leaf-size", "4", "--rank", "32", "--eps", "0", "--out", p]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dump = read_dump(&mut File::open(&path).unwrap()).unwrap();
    assert_eq!(dump.n, 32);
    let spec = hmatrix_harness::ProblemSpec { n: 32, rho: 4, k: 32, eps: 0.0, ..Default::default() };
    let g = generate(&spec).unwrap();
    assert!(dump.to_dense().sub(&g).frobenius_norm() <= 1e-12 * g.frobenius_norm());
}

#[test]
fn dump_trees_as_json() {
    let out = hmx(&["dump", "--n", "8", "--leaf-size", "2", "--adm", "weak", "--dump-tree", "--dump-blocks"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["tree"]["clusters"].as_array().unwrap().len(), 7);
    assert_eq!(v["tree"]["depth"], 2);
    assert_eq!(v["blocks"]["blocks"].as_array().unwrap().len(), 13);
    assert_eq!(v["blocks"]["c_sp"], 2);
}
