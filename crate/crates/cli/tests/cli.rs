//! End-to-end runs of the `fermisum` binary: outputs, exit codes and
//! determinism across job counts.

use std::path::PathBuf;
use std::process::{Command, Output};

const WORKED_SPEC: &str =
    r#"{"algebra":"C2","factors":[{"a":1,"s":2},{"a":2,"s":1,"count":3},{"a":1,"s":1,"count":2}]}"#;

fn fermisum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fermisum")).args(args).env_remove("FERMISUM_JOBS").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fermisum-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn worked_example_table_is_bit_exact() {
    let out = fermisum(&["tables", "--appendix", "B"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "X = q^6 + 2q^7 + 2q^8 + 3q^9 + 2q^10 + 3q^11 + 2q^12 + q^13 + q^15\n\
         X_2 = q^8 + 2q^9 + 2q^10 + 3q^11 + 2q^12 + q^13 + q^15\n\
         X_1 = q^15\n"
    );
}

#[test]
fn decomposition_latex_layout() {
    let out = fermisum(&["tables", "--appendix", "A", "--algebra", "E6", "--r", "3", "--s", "1", "--format", "latex"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out),
        "\\begin{align*}\nW^{(3)}_{1} &= V(\\Lambda_3) \\\\\n&+ q\\,V(\\Lambda_1 + \\Lambda_5) \\\\\n\
         &+ (q + q^{2})\\,V(\\Lambda_6) \\\\\n&+ q^{3}\\,V(0)\n\\end{align*}\n"
    );
}

#[test]
fn golden_suite_passes() {
    let out = fermisum(&["verify", "--suite", "golden"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("0 gating failures"));
}

#[test]
fn theorem_and_conjecture_suites_pass_in_json() {
    for suite in ["theorems", "conjectures"] {
        let out = fermisum(&["verify", "--suite", suite, "--samples", "2", "--format", "json"]);
        assert_eq!(out.status.code(), Some(0), "{suite}");
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(v["suite"], suite);
        assert_eq!(v["summary"]["failed"], 0, "{suite}");
        assert!(v["checks"].as_array().unwrap().len() > 10);
    }
}

#[test]
fn malformed_spec_is_a_usage_error() {
    let path = scratch("bad.json", r#"{"algebra":"C2","factors":[{"a":1}]}"#);
    let out = fermisum(&["fermionic", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("schema validation") && err.contains("\"s\" is a required property"), "{err}");
}

#[test]
fn usage_and_unsupported_exit_codes() {
    assert_eq!(fermisum(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(fermisum(&["onedsum", "--crystals", "C2:1,2", "--lambda", "1"]).status.code(), Some(2));
    assert_eq!(fermisum(&["qsystem", "--algebra", "E6"]).status.code(), Some(3));
    assert_eq!(fermisum(&["onedsum", "--crystals", "B3:1,1"]).status.code(), Some(3));
    let path = scratch("w.json", WORKED_SPEC);
    let spec = path.to_str().unwrap();
    assert_eq!(fermisum(&["fermionic", "--spec", spec, "--form", "Ml"]).status.code(), Some(2));
    assert_eq!(fermisum(&["fermionic", "--spec", spec, "--level", "1", "--lambda", "1,0"]).status.code(), Some(2));
}

#[test]
fn fermionic_forms_agree_with_the_worked_example() {
    let path = scratch("w2.json", WORKED_SPEC);
    let spec = path.to_str().unwrap();
    let m = fermisum(&["fermionic", "--spec", spec, "--lambda", "0,0"]);
    assert_eq!(stdout(&m), "q^6 + 2q^7 + 2q^8 + 3q^9 + 2q^10 + 3q^11 + 2q^12 + q^13 + q^15\n");
    let m2 = fermisum(&["fermionic", "--spec", spec, "--level", "2"]);
    assert_eq!(stdout(&m2), "q^8 + 2q^9 + 2q^10 + 3q^11 + 2q^12 + q^13 + q^15\n");
    let n1 = fermisum(&["fermionic", "--spec", spec, "--form", "Nl", "--level", "1"]);
    assert_eq!(stdout(&n1), "q^15\n");
    let csv = fermisum(&["fermionic", "--spec", spec, "--format", "csv"]);
    assert_eq!(stdout(&csv).lines().count(), 7);
}

#[test]
fn onedsum_csv_ledger_has_seventeen_paths() {
    let out = fermisum(&["onedsum", "--crystals", "C2:1,2 C2:2,1x3 C2:1,1x2", "--lambda", "0,0", "--format", "csv"]);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("path,minus_e,eps0"));
    assert_eq!(lines.count(), 17);
}

#[test]
fn output_does_not_depend_on_jobs() {
    let path = scratch("w3.json", WORKED_SPEC);
    let spec = path.to_str().unwrap();
    let runs: [&[&str]; 3] = [
        &["fermionic", "--spec", spec, "--ledger", "--format", "json"],
        &["onedsum", "--crystals", "C2:1,2 C2:2,1x3 C2:1,1x2", "--ledger", "--format", "json"],
        &["tables", "--appendix", "A", "--algebra", "E7", "--r", "2", "--format", "json"],
    ];
    for args in runs {
        let base = fermisum(args);
        assert_eq!(base.status.code(), Some(0));
        for jobs in ["1", "3"] {
            let mut with_jobs = args.to_vec();
            with_jobs.extend(["--jobs", jobs]);
            assert_eq!(fermisum(&with_jobs).stdout, base.stdout, "{args:?} --jobs {jobs}");
        }
        let env = Command::new(env!("CARGO_BIN_EXE_fermisum")).args(args).env("FERMISUM_JOBS", "2").output().unwrap();
        assert_eq!(env.stdout, base.stdout);
    }
}

#[test]
fn output_flag_writes_the_same_bytes() {
    let target = std::env::temp_dir().join(format!("fermisum-cli-out-{}.txt", std::process::id()));
    let direct = fermisum(&["qsystem", "--algebra", "C3", "--max-j", "3"]);
    let written = fermisum(&["qsystem", "--algebra", "C3", "--max-j", "3", "--output", target.to_str().unwrap()]);
    assert_eq!(written.status.code(), Some(0));
    assert!(written.stdout.is_empty());
    assert_eq!(std::fs::read(&target).unwrap(), direct.stdout);
}
