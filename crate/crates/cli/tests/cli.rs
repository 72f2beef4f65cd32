use std::process::{Command, Output};

use serde_json::Value;

const T45: &str = "s1 s2 s3 s1 s2 s3 s1 s2 s3 s1 s2 s3 s1 s2 s3";

fn khflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_khflow")).args(args).env_remove("KHFLOW_THREADS").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn reduced_delta_of_t45() {
    let out = khflow(&["kh", T45, "--strands", "4", "--reduced", "--delta"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "4d^12+2d^10+3d^8");
}

#[test]
fn kh_json_lists_bigradings() {
    let out = khflow(&["--emit-json", "kh", "s1 s1 s1", "--reduced"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "kh");
    assert_eq!(serde_json::to_string(&v).unwrap().matches("\"h\"").count(), 3);
}

#[test]
fn rank_inequality_table_passes() {
    let out = khflow(&["verify", "--rank-inequality"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("pass")).count(), 6);
}

#[test]
fn t45_differential_is_reported() {
    let out = khflow(&["verify", "--differentials"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("(4,18) -> (9,26) bigrading (5,8)"), "{text}");
}

#[test]
fn parse_errors_exit_2() {
    assert_eq!(khflow(&["kh", "s1 q2"]).status.code(), Some(2));
    assert_eq!(khflow(&["kh", "s7", "--strands", "3"]).status.code(), Some(2));
    assert_eq!(
        khflow(&["c2", "", "--strands", "2", "--closure", "plat", "--augment", "--window", "3:1"]).status.code(),
        Some(2)
    );
}

#[test]
fn exhausted_window_exits_3() {
    let out =
        khflow(&["c2", "s2 s2 s2", "--strands", "4", "--closure", "plat", "--augment", "--reduce", "--max-depth", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn wrong_expectation_exits_1() {
    let out = khflow(&[
        "ss",
        "s1",
        "--strands",
        "2",
        "--closure",
        "plat",
        "--augment",
        "--reduce",
        "--stability-run",
        "2",
        "--hfk",
        "3d^0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn c2_json_is_deterministic() {
    let args = ["--emit-json", "c2", "s1", "--strands", "2", "--closure", "plat", "--augment", "--reduce"];
    let (a, b) = (khflow(&args), khflow(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["schema"], 1);
    assert!(v["vertices"].as_array().is_some_and(|vs| vs.len() == 2));
}

#[test]
fn augmented_trefoil_spectral_sequence_passes() {
    let out = khflow(&[
        "--emit-json",
        "ss",
        "s2 s2 s2",
        "--strands",
        "4",
        "--closure",
        "plat",
        "--augment",
        "--reduce",
        "--knot",
        "T(2,3)",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["passed"], true);
    assert_eq!(v["stable_from"], 2);
}
