use std::fs;
use std::process::{Command, Output};

fn jtcouple(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jtcouple"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

const TINY_RUN: [&str; 10] = [
    "run",
    "--seeds",
    "0,1",
    "--methods",
    "baseline,minl,milp,milp+minl,bound",
    "--demand",
    "2e6,4e6",
    "--node-limit",
    "2000",
    "--format",
];

#[test]
fn run_csv_is_byte_identical_across_executions() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let mut args = TINY_RUN.to_vec();
        args.extend(["csv", "--out", p.to_str().unwrap()]);
        assert!(jtcouple(&args).status.success());
    }
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(
        "demand,method,objective_kind,objective,bound,sum_load_mc,sum_load_sc,max_load_mc,max_load_sc,jt_ue_count,seconds,seed,status\n"
    ));
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 5);
}

#[test]
fn run_json_echoes_config_and_demands() {
    let mut args = TINY_RUN.to_vec();
    args.push("json");
    let v: serde_json::Value = serde_json::from_str(&stdout(&jtcouple(&args))).unwrap();
    assert_eq!(v["demands"], serde_json::json!([2e6, 4e6]));
    assert_eq!(v["config"]["seeds"], serde_json::json!([0, 1]));
}

#[test]
fn empty_method_list_gives_header_only_csv() {
    let out = stdout(&jtcouple(&["run", "--seeds", "0", "--methods", "", "--demand", "1e6"]));
    assert_eq!(out.lines().count(), 1);
}

#[test]
fn generate_then_bound_and_export_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("net.json");
    let o = jtcouple(&["generate", "--seed", "3", "--max-load", "0.6", "--out", scen.to_str().unwrap()]);
    assert!(o.status.success());
    let s = scen.to_str().unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&jtcouple(&["bound", "--scenario", s, "--node-limit", "500"]))).unwrap();
    let (b, base) = (v["bound"].as_f64().unwrap(), v["baseline_objective"].as_f64().unwrap());
    assert!(b > 0.0 && b <= base + 1e-9);
    let lp = stdout(&jtcouple(&["export-lp", "--scenario", s, "--objective", "max", "--no-lb"]));
    assert!(lp.to_ascii_lowercase().contains("minimize"));
}

#[test]
fn oracle_and_sat_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("f.cnf");
    fs::write(&cnf, "p cnf 3 1\n1 -2 3 0\n").unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&jtcouple(&["sat", cnf.to_str().unwrap()]))).unwrap();
    assert_eq!(v["feasible"], true);
    assert_eq!(v["satisfiable"], true);

    let scen = dir.path().join("gadget.json");
    let o = jtcouple(&["sat", cnf.to_str().unwrap(), "--scenario-out", scen.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&jtcouple(&[
        "oracle",
        "--scenario",
        scen.to_str().unwrap(),
        "--objective",
        "max",
    ])))
    .unwrap();
    assert!(v["objective"].as_f64().unwrap() <= 1.0 + 1e-9);
}

#[test]
fn invalid_config_exits_with_code_2() {
    assert_eq!(jtcouple(&["run", "--objective", "median"]).status.code(), Some(2));
    assert_eq!(jtcouple(&["run", "--seeds", "0", "--demand", "-5"]).status.code(), Some(2));
    assert_eq!(jtcouple(&["run", "--seeds", "0", "--lambda", "0"]).status.code(), Some(2));
    assert_eq!(jtcouple(&["oracle"]).status.code(), Some(2));
}

#[test]
fn non_convergence_exits_with_code_3() {
    let o = jtcouple(&["run", "--seeds", "0", "--methods", "baseline", "--demand", "1e12"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("not_converged"));
}
