use std::path::Path;
use std::process::{Command, Output};

fn stomatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stomatch")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = stomatch(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn lp_solve_on_gap_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("gap.json");
    ok(&["generate", "gap", "4", "--out", path(&inst)]);
    let lp: serde_json::Value = serde_json::from_str(&ok(&["lp", "solve", path(&inst)])).unwrap();
    assert!((lp["objective"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert_eq!(lp["f"].as_array().unwrap().len(), 16);
}

#[test]
fn invalid_instance_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("bad.json");
    std::fs::write(
        &inst,
        r#"{"n":1,"offline":[{"id":0,"t":1}],"online":[{"id":0,"t":1,"r":1.0}],"edges":[{"u":0,"v":0,"p":1.5,"w":1}]}"#,
    )
    .unwrap();
    let out = stomatch(&["lp", "solve", path(&inst)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("edges[0].p"));
    let out = stomatch(&["run", path(&inst), "--framework", "attn1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_requires_seed() {
    let out = stomatch(&["run", "x.json", "--framework", "attn1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn calibrate_then_run_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("gap.json");
    let table = dir.path().join("table.json");
    ok(&["generate", "gap", "3", "--out", path(&inst)]);
    let common = ["--seed", "5", "--samples", "800", "--inner-trials", "500"];
    let mut args = vec!["calibrate", path(&inst), "--framework", "attn3", "--out", path(&table)];
    args.extend(common);
    ok(&args);
    let mut direct = vec!["run", path(&inst), "--framework", "attn3", "--trials", "2000"];
    direct.extend(common);
    let a = ok(&direct);
    direct.extend(["--table", path(&table)]);
    let b = ok(&direct);
    assert_eq!(a, b);
    let report: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(report["framework"], "attn3");
    assert_eq!(report["trials"], 2000);
}

#[test]
fn strict_escalates_table_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("gap.json");
    let table = dir.path().join("table.json");
    ok(&["generate", "gap", "3", "--out", path(&inst)]);
    ok(&["calibrate", path(&inst), "--framework", "attn2", "--seed", "1", "--samples", "300", "--out", path(&table)]);
    let mut t: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&table).unwrap()).unwrap();
    t["warnings"] = serde_json::json!([{ "round": 2, "offline": 0, "estimate": 0.5, "target": 0.66 }]);
    std::fs::write(&table, t.to_string()).unwrap();
    let base = ["run", path(&inst), "--framework", "attn2", "--trials", "100", "--seed", "1", "--table", path(&table)];
    assert!(stomatch(&base).status.success());
    let mut strict = base.to_vec();
    strict.push("--strict");
    assert_eq!(stomatch(&strict).status.code(), Some(3));
}

#[test]
fn mismatched_table_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, table) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("t.json"));
    ok(&["generate", "gap", "3", "--out", path(&a)]);
    ok(&["generate", "gap", "4", "--out", path(&b)]);
    ok(&["calibrate", path(&a), "--framework", "attn1", "--seed", "1", "--out", path(&table)]);
    let out = stomatch(&["run", path(&b), "--framework", "attn1", "--seed", "1", "--table", path(&table)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    ok(&["generate", "gap", "3", "--out", path(&a)]);
    ok(&["generate", "random", "--offline", "3", "--online", "4", "--seed", "7", "--out", path(&b)]);
    let (x, y) = (dir.path().join("x.csv"), dir.path().join("y.csv"));
    for out in [&x, &y] {
        ok(&["sweep", path(&a), path(&b), "--trials", "500", "--seed", "9", "--samples", "300", "--out", path(out)]);
    }
    let (x, y) = (std::fs::read(&x).unwrap(), std::fs::read(&y).unwrap());
    assert_eq!(x, y);
    assert_eq!(String::from_utf8(x).unwrap().lines().count(), 7);
    let empty = ok(&["sweep", path(&a), "--frameworks", "", "--seed", "1"]);
    assert_eq!(empty.lines().count(), 1);
}

#[test]
fn oracle_and_blackbox_commands() {
    let dir = tempfile::tempdir().unwrap();
    let star = dir.path().join("star.json");
    std::fs::write(&star, r#"{"patience":2,"edges":[{"id":0,"p":0.5,"g":1.0},{"id":1,"p":0.5,"g":1.0}]}"#).unwrap();
    let exact: serde_json::Value = serde_json::from_str(&ok(&["oracle", "star", path(&star)])).unwrap();
    assert_eq!(exact[0]["prob"], 0.75);
    let est: serde_json::Value =
        serde_json::from_str(&ok(&["blackbox", "probe-probs", path(&star), "--trials", "20000", "--seed", "3"])).unwrap();
    let m = est[0]["mean"].as_f64().unwrap();
    assert!((m - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / 20000.0).sqrt());

    let inst = dir.path().join("gap.json");
    ok(&["generate", "gap", "2", "--out", path(&inst)]);
    let dp: serde_json::Value = serde_json::from_str(&ok(&["oracle", "dp", path(&inst)])).unwrap();
    assert!((dp["expected_weight"].as_f64().unwrap() - 21.0 / 16.0).abs() < 1e-12);
}
