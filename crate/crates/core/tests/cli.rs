use std::process::{Command, Output};

use halfflat::asep_sim::read_snapshots;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfflat")).args(args).output().unwrap()
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap()
}

#[test]
fn zeroth_moment_is_one() {
    let out = run(&["moment", "--m", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1.0");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["moment", "--m", "1", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["laplace", "--kmax", "5"]).status.code(), Some(2));
    assert_eq!(run(&["tw", "--beta", "3", "--s", "0"]).status.code(), Some(2));
}

#[test]
fn domain_error_is_structured() {
    let out = run(&["moment", "--m", "1", "--tau", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let err = json(&out.stderr);
    assert_eq!(err["exit_code"], 2);
    assert!(err["error"].is_string() && err["message"].is_string());
}

#[test]
fn large_tau_laplace_warns_but_succeeds() {
    let out = run(&["laplace", "--tau", "0.5", "--zeta", "-0.5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out.stderr.is_empty());
    let doc = json(&out.stdout);
    assert!(!doc["result"]["series"]["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn json_documents_carry_metadata() {
    let out = run(&["tw", "--beta", "1", "--s", "0", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out.stdout);
    assert_eq!(doc["metadata"]["program"], "halfflat");
    assert!(doc["metadata"]["command"].is_object());
}

#[test]
fn csv_output_has_comment_header() {
    let out = run(&["airy21", "--t1", "0", "--ny", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# program:"));
    assert!(lines.next().unwrap().starts_with("# config:"));
    assert_eq!(lines.next().unwrap(), "t1,y,cdf,k_max,est_error");
    assert_eq!(lines.count(), 3);
}

#[test]
fn simulate_output_reads_back() {
    let dir = std::env::temp_dir().join(format!("halfflat-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("snaps.jsonl");
    let out = run(&["simulate", "--t", "3", "--npaths", "4", "--seed", "9", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let snaps = read_snapshots(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(snaps.len(), 4);
    for s in &snaps {
        let st = s.to_state().unwrap();
        assert_eq!(st.time, 3.0);
        assert_eq!(st.height(0).unwrap(), st.height_from_flux(0).unwrap());
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn identities_suite_passes() {
    let out = run(&["validate", "--suite", "identities"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
