use std::path::PathBuf;
use std::process::{Command, Output};

fn atf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "atf failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn preset(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    root.to_str().unwrap().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("atf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn column(csv: &str, row: usize, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.nth(row).unwrap().split(',').nth(idx).unwrap().to_string()
}

#[test]
fn analytic_defaults_and_overrides() {
    let base = stdout(&atf(&["analytic"]));
    assert!(base.starts_with("P_S_dBm,N,L,E_T,p_out,"));
    let p_out: f64 = column(&base, 0, "p_out").parse().unwrap();
    assert!((p_out - 9.5029e-5).abs() < 1e-8, "{p_out}");

    let from_preset = stdout(&atf(&["analytic", "--config", &preset("paper.conf")]));
    assert_eq!(base, from_preset);

    let n6 = stdout(&atf(&["analytic", "--set", "N=6", "--set", "L=10"]));
    assert_eq!(column(&n6, 0, "N"), "6");
    assert_eq!(column(&n6, 0, "L"), "10");
}

#[test]
fn analytic_dumps() {
    let m = scratch("m.csv");
    let pi = scratch("pi.csv");
    stdout(&atf(&[
        "analytic",
        "--set",
        "L=4",
        "--set",
        "E_T=2.5e-3",
        "--dump-matrix",
        m.to_str().unwrap(),
        "--dump-pi",
        pi.to_str().unwrap(),
    ]));
    let m = std::fs::read_to_string(m).unwrap();
    assert_eq!(m.lines().next().unwrap(), "i,0,1,2,3,4");
    assert_eq!(m.lines().count(), 6);
    let pi = std::fs::read_to_string(pi).unwrap();
    assert_eq!(pi.lines().next().unwrap(), "i,pi");
    let total: f64 = pi.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn simulate_with_trace_and_replicas() {
    let trace = scratch("trace.csv");
    let out = stdout(&atf(&[
        "simulate",
        "--blocks",
        "5000",
        "--warmup",
        "100",
        "--battery",
        "discrete",
        "--set",
        "L=10",
        "--set",
        "E_T=1e-3",
        "--trace",
        trace.to_str().unwrap(),
    ]));
    assert_eq!(column(&out, 0, "blocks"), "4900");
    let trace = std::fs::read_to_string(trace).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "block,mode,battery,outage");
    assert_eq!(trace.lines().count(), 5001);

    let run = || stdout(&atf(&["simulate", "--blocks", "5000", "--warmup", "1000", "--replicas", "3", "--seed", "4"]));
    let a = run();
    assert_eq!(a, run());
    assert_eq!(column(&a, 0, "blocks"), "12000");
}

#[test]
fn sweep_to_file_matches_stdout() {
    let path = scratch("sweep.csv");
    let args = ["sweep", "--var", "N", "--grid", "1,2,4", "--methods", "analytic,direct"];
    let printed = stdout(&atf(&args));
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    stdout(&atf(&with_out));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), printed);
    assert_eq!(printed.lines().count(), 7);
}

#[test]
fn presets_run() {
    let fig1 = stdout(&atf(&["sweep", "--config", &preset("fig1.conf"), "--blocks", "3000", "--warmup", "500"]));
    // 14 powers × 3 antenna counts × 2 resolutions × 3 methods
    assert_eq!(fig1.lines().count(), 1 + 14 * 3 * 2 * 3);
    assert!(fig1.lines().skip(1).all(|l| l.ends_with(',')), "error column should be empty");

    let fig2 = stdout(&atf(&["sweep", "--config", &preset("fig2.conf")]));
    assert_eq!(fig2.lines().count(), 1 + 100 * 2 * 3);

    let fig3 = stdout(&atf(&["compare", "--config", &preset("fig3.conf")]));
    assert_eq!(fig3.lines().next().unwrap(), "P_S_dBm,N,L,direct,atf_optimal,E_T_opt,ratio,error");
    assert_eq!(fig3.lines().count(), 1 + 14 * 3);
}

#[test]
fn optimal_et_summary_and_curve() {
    let summary = stdout(&atf(&["optimal-et"]));
    assert_eq!(column(&summary, 0, "index"), "11");
    let curve = stdout(&atf(&["optimal-et", "--curve", "--set", "L=20"]));
    assert_eq!(curve.lines().count(), 21);
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    for args in [
        vec!["analytic", "--set", "E_T=1"],
        vec!["analytic", "--set", "bogus=1"],
        vec!["analytic", "--set", "N"],
        vec!["analytic", "--config", "/nonexistent/atf.conf"],
        vec!["sweep", "--var", "eta", "--grid", "0.1,0.2"],
        vec!["sweep", "--var", "N", "--grid", "4,2"],
        vec!["sweep", "--var", "N"],
        vec!["simulate", "--blocks", "10", "--warmup", "10"],
        vec!["simulate", "--battery", "quantum"],
    ] {
        let o = atf(&args);
        assert!(!o.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(!err.trim().is_empty(), "{args:?} printed no diagnostic");
    }
    let bad = scratch("bad.conf");
    std::fs::write(&bad, "N = 2\nK == 3\n").unwrap();
    let o = atf(&["analytic", "--config", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}
