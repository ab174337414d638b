use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use stabkit_core::{Formula, SpProof};
use tempfile::TempDir;

fn stabkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabkit")).args(args).output().expect("spawn stabkit")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen_solve(dir: &TempDir, gen: &[&str], strategy: &str) -> (PathBuf, PathBuf) {
    let f = path(dir, "f.json");
    let p = path(dir, "p.json");
    let mut args = vec!["gen"];
    args.extend_from_slice(gen);
    args.extend_from_slice(&["--out", s(&f)]);
    assert_eq!(stabkit(&args).status.code(), Some(0));
    let out = stabkit(&["solve", "--formula", s(&f), "--strategy", strategy, "--out", s(&p)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    (f, p)
}

#[test]
fn gen_solve_verify_audit_chain() {
    for (gen, strategy) in [
        (&["--family", "sphp", "--n", "6"][..], "frac"),
        (&["--family", "php", "--n", "3"][..], "frac"),
        (&["--family", "tseitin", "--n", "4", "--charged", "2"][..], "frac"),
        (&["--family", "lop", "--n", "3"][..], "frac"),
    ] {
        let dir = TempDir::new().unwrap();
        let (f, p) = gen_solve(&dir, gen, strategy);
        let out = stabkit(&["verify", "--formula", s(&f), "--proof", s(&p)]);
        assert_eq!(out.status.code(), Some(0), "{gen:?}");
        let report: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["ok"], true);
        for w in ["half", "triple"] {
            let out = stabkit(&["audit", "--formula", s(&f), "--proof", s(&p), "--W", w]);
            assert_eq!(out.status.code(), Some(0), "{gen:?} {w}");
            let report: Value = serde_json::from_slice(&out.stdout).unwrap();
            assert_eq!(report["uncovered_count"], 0);
        }
    }
}

fn first_farkas(v: &mut Value) -> Option<&mut Value> {
    match v {
        Value::Object(m) => {
            if m.contains_key("farkas") {
                return m.get_mut("farkas");
            }
            m.values_mut().find_map(first_farkas)
        }
        Value::Array(a) => a.iter_mut().find_map(first_farkas),
        _ => None,
    }
}

#[test]
fn tampered_certificate_exits_one() {
    let dir = TempDir::new().unwrap();
    let (f, p) = gen_solve(&dir, &["--family", "sphp", "--n", "5"], "frac");
    let mut proof: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    let cert = first_farkas(&mut proof).unwrap().as_array_mut().unwrap();
    let pos = cert.iter().position(|c| c != "0").unwrap();
    cert[pos] = Value::String("0".into());
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, serde_json::to_string(&proof).unwrap()).unwrap();
    let out = stabkit(&["verify", "--formula", s(&f), "--proof", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ok"], false);
    assert!(report["failures"][0]["path"].is_string());
}

#[test]
fn wrong_formula_hash_exits_one() {
    let dir = TempDir::new().unwrap();
    let (_, p) = gen_solve(&dir, &["--family", "sphp", "--n", "5"], "frac");
    let other = path(&dir, "other.json");
    assert_eq!(stabkit(&["gen", "--family", "sphp", "--n", "5", "--out", s(&other)]).status.code(), Some(0));
    let mut f: Value = serde_json::from_str(&std::fs::read_to_string(&other).unwrap()).unwrap();
    // Strengthening the sum axiom keeps every leaf certificate valid but changes the hash.
    let sum = f["ineqs"].as_array_mut().unwrap().last_mut().unwrap();
    assert_eq!(sum["bound"], 2);
    sum["bound"] = Value::from(3);
    std::fs::write(&other, serde_json::to_string(&f).unwrap()).unwrap();
    let out = stabkit(&["verify", "--formula", s(&other), "--proof", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["formula_hash_ok"], false);
    assert_eq!(report["ok"], false);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(stabkit(&["solve"]).status.code(), Some(2));
    assert_eq!(stabkit(&["gen", "--family", "nope", "--n", "3"]).status.code(), Some(2));
    assert_eq!(stabkit(&["verify", "--formula", "/nonexistent", "--proof", "/nonexistent"]).status.code(), Some(2));
}

#[test]
fn sperner_csv_is_versioned_and_green() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "sperner.csv");
    let out = stabkit(&["experiment", "sperner", "--n-range", "1..3", "--W", "triple", "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# stabkit-csv v1 sperner"));
    assert_eq!(lines.next(), Some("n,a,b,count,bound,ok"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",true")));
    // Every vector's level counts sum to 3^n.
    let mut totals = std::collections::BTreeMap::<(String, String), u64>::new();
    for r in &rows {
        let f: Vec<&str> = r.split(',').collect();
        *totals.entry((f[0].to_string(), f[1].to_string())).or_default() += f[3].parse::<u64>().unwrap();
    }
    for ((n, _), t) in totals {
        assert_eq!(t, 3u64.pow(n.parse().unwrap()));
    }
}

#[test]
fn outputs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (fa, pa) = gen_solve(&a, &["--family", "tseitin", "--n", "5"], "sep");
    let (fb, pb) = gen_solve(&b, &["--family", "tseitin", "--n", "5"], "sep");
    assert_eq!(std::fs::read(&fa).unwrap(), std::fs::read(&fb).unwrap());
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    let ca = path(&a, "f.csv");
    let cb = path(&b, "f.csv");
    for (c, jobs) in [(&ca, "1"), (&cb, "3")] {
        let out = stabkit(&["--jobs", jobs, "experiment", "fullness", "--family", "sphp", "--n-range", "4..9", "--csv", s(c)]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&ca).unwrap(), std::fs::read(&cb).unwrap());
}

#[test]
fn proof_round_trip_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (f, p) = gen_solve(&dir, &["--family", "php", "--n", "3"], "frac");
    let pretty = |v: &Value| serde_json::to_string_pretty(v).unwrap() + "\n";
    let f_text = std::fs::read_to_string(&f).unwrap();
    let formula = Formula::from_json(&serde_json::from_str(&f_text).unwrap()).unwrap();
    assert_eq!(pretty(&formula.to_json()), f_text);
    let p_text = std::fs::read_to_string(&p).unwrap();
    let proof = SpProof::from_json(&serde_json::from_str(&p_text).unwrap(), formula.vars()).unwrap();
    assert_eq!(pretty(&proof.to_json(formula.vars())), p_text);
}

#[test]
fn self_reduction_yields_verified_smaller_proof() {
    let dir = TempDir::new().unwrap();
    let (f, p) = gen_solve(&dir, &["--family", "sphp", "--n", "7"], "frac");
    let f2 = path(&dir, "f2.json");
    let p2 = path(&dir, "p2.json");
    let out = stabkit(&[
        "restrict", "--formula", s(&f), "--proof", s(&p), "--self-reduce", "x2,x5", "--formula-out", s(&f2), "--out", s(&p2), "--certify",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let small: Value = serde_json::from_str(&std::fs::read_to_string(&f2).unwrap()).unwrap();
    assert_eq!(small["vars"].as_array().unwrap().len(), 5);
    assert_eq!(stabkit(&["verify", "--formula", s(&f2), "--proof", s(&p2)]).status.code(), Some(0));
}

#[test]
fn cp_build_and_verify() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "f.json");
    let p = path(&dir, "p.json");
    assert_eq!(stabkit(&["cp-build-sphp", "--n", "7", "--out", s(&p), "--formula-out", s(&f)]).status.code(), Some(0));
    let out = stabkit(&["cp-verify", "--formula", s(&f), "--proof", s(&p)]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rank"], 1);
}
