use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn momentcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_momentcert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_lists_every_flag() {
    let top = stdout(&momentcert(&["--help"]));
    for sub in ["solve", "certify", "sweep", "diagnose", "random"] {
        assert!(top.contains(sub), "missing subcommand {sub}");
    }
    let help = stdout(&momentcert(&["diagnose", "--help"]));
    for flag in [
        "--orders",
        "--output",
        "--stop-on-flat",
        "--max-iter",
        "--tol-gap",
        "--tol-feas",
        "--verbosity",
        "--seed",
        "--rank-tau",
        "--refine-radius",
        "--tol-eps-act",
        "--tol-eps-feas",
        "--tol-fooc",
        "--tol-mult",
        "--tol-eig",
        "--tol-det",
        "--tol-rank",
        "--tol-grad",
    ] {
        assert!(help.contains(flag), "missing flag {flag}");
    }
    let help = stdout(&momentcert(&["certify", "--help"]));
    assert!(help.contains("--point") && help.contains("--json"));
}

#[test]
fn unknown_flags_are_rejected() {
    let o = momentcert(&["solve", data("robinson.pop").to_str().unwrap(), "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--bogus"));
    let o = momentcert(&[
        "sweep",
        data("robinson.pop").to_str().unwrap(),
        "--orders",
        "5..3",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_file_exits_with_parse_code_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pop");
    std::fs::write(&bad, "vars x y\nmin x + y\ng: x + z >= 0\n").unwrap();
    let o = momentcert(&["solve", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_a_general_error() {
    let o = momentcert(&["solve", "/nonexistent/x.pop"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn certify_reports_scc_failure_for_simplex_cubic() {
    let o = momentcert(&[
        "certify",
        data("simplex_cubic.pop").to_str().unwrap(),
        "--point",
        "0,0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let line = |name: &str| {
        text.lines()
            .find(|l| l.starts_with(name))
            .unwrap()
            .to_string()
    };
    assert!(line("SCC").contains("Fail"), "{text}");
    assert!(line("CQC").contains("Pass"), "{text}");
    assert!(
        line("SOSC").contains("Pass") && line("SOSC").contains("vacuous"),
        "{text}"
    );

    let o = momentcert(&[
        "certify",
        data("simplex_cubic.pop").to_str().unwrap(),
        "--point",
        "0,0",
        "--json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["scc"]["verdict"], "fail");
    assert_eq!(v["kkt"]["mu"], serde_json::json!([0.0, 0.0, 0.0]));
}

#[test]
fn certify_rejects_wrong_dimension() {
    let o = momentcert(&[
        "certify",
        data("simplex_cubic.pop").to_str().unwrap(),
        "--point",
        "0,0,0",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tolerance_flags_reach_the_checks() {
    let path = data("motzkin_ball.pop");
    let o = momentcert(&[
        "certify",
        path.to_str().unwrap(),
        "--point",
        "0,0,0",
        "--json",
        "--tol-eig=1e-3",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tolerances"]["tol_eig"], 1e-3);
}

#[test]
fn solve_prints_bound_and_residual() {
    let o = momentcert(&[
        "solve",
        data("degenerate_point.pop").to_str().unwrap(),
        "--order",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let fk: f64 = text
        .lines()
        .find(|l| l.starts_with("f_k"))
        .and_then(|l| l.split_whitespace().nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!(fk.abs() < 1e-5);
    assert!(text.contains("identity residual"));
}

#[test]
fn infeasible_relaxation_exits_with_solver_code() {
    let o = momentcert(&[
        "solve",
        data("motzkin_plus_quadratic.pop").to_str().unwrap(),
        "--order",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn diagnose_robinson_is_certified_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let input = data("robinson.pop");
    for out in [&a, &b] {
        let o = momentcert(&[
            "diagnose",
            input.to_str().unwrap(),
            "--orders",
            "3..5",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), "FINITE_CONVERGENCE_CERTIFIED");
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let v: serde_json::Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(v["diagnosis"]["code"], "FINITE_CONVERGENCE_CERTIFIED");
    assert_eq!(v["diagnosis"]["minimizers"].as_array().unwrap().len(), 20);
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.json");
    let input = data("lemniscate.pop");
    let o = momentcert(&[
        "sweep",
        input.to_str().unwrap(),
        "--orders",
        "2..3",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(
        rows[1]["sos_value"].as_f64().unwrap() >= rows[0]["sos_value"].as_f64().unwrap() - 1e-7
    );
}

#[test]
fn random_instances_are_seeded() {
    let args = ["random", "--seed", "11", "--sphere", "--linear", "1"];
    let a = stdout(&momentcert(&args));
    assert_eq!(a, stdout(&momentcert(&args)));
    assert_ne!(
        a,
        stdout(&momentcert(&[
            "random", "--seed", "12", "--sphere", "--linear", "1"
        ]))
    );
    let p = momentcert::io::parse_pop(&a).unwrap();
    assert_eq!(
        (p.nvars(), p.num_equalities(), p.num_inequalities()),
        (2, 1, 1)
    );
}
