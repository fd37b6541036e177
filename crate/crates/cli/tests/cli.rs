use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crn-access"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_defaults() {
    let o = run(&["eval"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("mu_s = 0.16712120613233222"), "{text}");
    assert!(text.contains("feasible = true"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.conf", "slot_T = 1e-3\nsense_tau = 2e-3\n");
    let o = run(&["--config", &bad, "eval"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sense_tau") && err.contains("line 2"), "{err}");

    let unknown = write_config(dir.path(), "unknown.conf", "# x\nlambda = 0.3\n");
    let o = run(&["--config", &unknown, "sweep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`lambda`"));

    let missing = dir.path().join("nope.conf");
    let o = run(&["--config", missing.to_str().unwrap(), "eval"]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["--starts", "0", "optimize"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unusable_flags_exit_2() {
    assert_eq!(
        run(&["optimize", "--mode", "greedy"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn infeasible_optimize_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.conf", "lambda_p = 0.95\n");
    let o = run(&["--config", &cfg, "--starts", "5", "optimize"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no feasible policy"));
}

#[test]
fn verify_passes_exit_0() {
    let o = run(&["verify", "--samples", "20000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(
        text.lines()
            .filter(|l| l.ends_with(",pass") || l.ends_with(",FAIL"))
            .count(),
        36
    );
    assert!(text.trim_end().ends_with("PASS"));
}

#[test]
fn sweep_writes_csv_to_file_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.conf",
        "lambda_grid = [0.1, 0.95]\nmodes = [\"adaptive\", \"conventional\"]\nn_starts = 20\nsim_validate = true\nsim_slots = 20000\n",
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&[
            "--config",
            &cfg,
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
            "sweep",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "lambda_p,ms,e_th_su,mode,a1,a2,gamma1,gamma2,mu_s_analytic,mu_p,e_su,e_pu,feasible,mu_s_sim,sim_rel_err"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0.1,3,0.00005,adaptive,"));
    assert!(lines[4].starts_with("0.95,3,0.00005,conventional,,"));
    assert!(lines[4].contains(",false,"));
}

#[test]
fn simulate_and_trace_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let t1 = dir.path().join("t1.csv");
    let t2 = dir.path().join("t2.csv");
    let s1 = run(&[
        "--slots",
        "500",
        "--seed",
        "9",
        "simulate",
        "--trace",
        t1.to_str().unwrap(),
    ]);
    let s2 = run(&[
        "--slots",
        "500",
        "--seed",
        "9",
        "simulate",
        "--trace",
        t2.to_str().unwrap(),
    ]);
    assert!(s1.status.success());
    assert_eq!(s1.stdout, s2.stdout);
    let trace = fs::read_to_string(&t1).unwrap();
    assert_eq!(trace, fs::read_to_string(&t2).unwrap());
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "slot,Q_p,pu_tx,n_su_tx,pu_ack,su_acks");
    assert_eq!(lines.len(), 501);

    let other = run(&["--slots", "500", "--seed", "10", "simulate"]);
    assert_ne!(other.stdout, s1.stdout);
}
