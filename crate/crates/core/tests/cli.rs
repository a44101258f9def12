use std::process::{Command, Output};

use serde_json::Value;

fn quadcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadcert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> (Value, i32) {
    let out = quadcert(args);
    let json: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "invalid JSON from {args:?}: {e}\n{}",
            String::from_utf8_lossy(&out.stdout)
        )
    });
    (json, out.status.code().unwrap())
}

fn num(v: &Value, path: &[&str]) -> f64 {
    path.iter()
        .fold(v, |v, k| &v[*k])
        .as_f64()
        .unwrap_or_else(|| panic!("no number at {path:?}"))
}

#[test]
fn report_schema() {
    let (r, code) = report(&[
        "integrate",
        "--f",
        "x^4",
        "--a",
        "0",
        "--b",
        "1",
        "--tol",
        "1e-6",
    ]);
    assert_eq!(code, 0);
    let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["command", "inputs", "results", "status"]);
    assert_eq!(r["command"], "integrate");
    assert_eq!(r["status"], "ok");
    for k in [
        "value",
        "total_bound",
        "cell_count",
        "converged",
        "policy",
        "q",
        "tol",
        "evaluations",
        "function",
    ] {
        assert!(r["results"].get(k).is_some(), "missing {k}");
    }
}

#[test]
fn integrate_examples() {
    let (r, code) = report(&[
        "integrate",
        "--f",
        "x^4",
        "--a",
        "0",
        "--b",
        "1",
        "--tol",
        "1e-6",
        "--lambda",
        "0.3333333333",
    ]);
    assert_eq!(code, 0);
    let bound = num(&r, &["results", "total_bound"]);
    assert!(bound <= 1e-6);
    assert!((num(&r, &["results", "value"]) - 0.2).abs() <= bound);

    let (r, code) = report(&[
        "integrate",
        "--builtin",
        "reciprocal",
        "--a",
        "1",
        "--b",
        "2",
        "--tol",
        "1e-8",
        "--lambda",
        "0",
    ]);
    assert_eq!(code, 0);
    assert!((num(&r, &["results", "value"]) - 2f64.ln()).abs() <= 1e-8);

    let (r, code) = report(&[
        "integrate",
        "--f",
        "x",
        "--a",
        "0",
        "--b",
        "5",
        "--tol",
        "1e-12",
        "--lambda",
        "1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(num(&r, &["results", "value"]), 12.5);
    assert_eq!(num(&r, &["results", "total_bound"]), 0.0);

    let (r, code) = report(&[
        "integrate",
        "--builtin",
        "exp",
        "--a",
        "0",
        "--b",
        "1",
        "--lambda",
        "auto",
        "--q",
        "2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["policy"]["kind"], "per_cell_best");
    assert!(
        (num(&r, &["results", "value"]) - (1f64.exp() - 1.0)).abs()
            <= num(&r, &["results", "total_bound"])
    );
}

#[test]
fn exit_codes() {
    // Unconverged: the cell budget cannot reach this tolerance.
    let (r, code) = report(&[
        "integrate",
        "--builtin",
        "exp",
        "--a",
        "0",
        "--b",
        "10",
        "--tol",
        "1e-300",
    ]);
    assert_eq!((r["status"].as_str().unwrap(), code), ("unconverged", 1));
    assert!(num(&r, &["results", "total_bound"]).is_finite());

    let (r, code) = report(&["integrate", "--f", "sin(x)", "--a", "0", "--b", "3"]);
    assert_eq!((r["status"].as_str().unwrap(), code), ("error", 2));
    assert!(r["results"]["message"]
        .as_str()
        .unwrap()
        .contains("convexity of |f''| not established"));

    let (r, code) = report(&["integrate", "--f", "x^x", "--a", "1", "--b", "2"]);
    assert_eq!((r["status"].as_str().unwrap(), code), ("error", 2));
    assert!(r["results"]["message"]
        .as_str()
        .unwrap()
        .contains("exponent"));

    let (_, code) = report(&["integrate", "--f", "x", "--a", "2", "--b", "1"]);
    assert_eq!(code, 2);
    let (_, code) = report(&["means", "--a", "1", "--b", "2", "--n", "2", "--prop", "1"]);
    assert_eq!(code, 2);
    // Argument errors come from the parser and also exit with 2.
    assert_eq!(quadcert(&["integrate", "--a", "0"]).status.code(), Some(2));
}

#[test]
fn identical_invocations_are_bit_identical() {
    for args in [
        &[
            "integrate",
            "--builtin",
            "power:4",
            "--a",
            "0",
            "--b",
            "1",
            "--lambda",
            "auto",
            "--cells",
        ][..],
        &["verify", "--suite", "bounds"][..],
        &["means", "--a", "1", "--b", "3", "--q", "2.5"][..],
    ] {
        assert_eq!(quadcert(args).stdout, quadcert(args).stdout, "{args:?}");
    }
    let par = quadcert(&["verify", "--suite", "identity"]).stdout;
    let seq = quadcert(&["verify", "--suite", "identity", "--sequential"]).stdout;
    assert_eq!(par, seq);
}

#[test]
fn verify_suites_pass() {
    for suite in ["identity", "bounds", "coefficients"] {
        let (r, code) = report(&["verify", "--suite", suite]);
        assert_eq!(code, 0, "{suite}");
        assert_eq!(r["results"]["failures"], 0);
    }
    let (r, _) = report(&["verify", "--suite", "coefficients"]);
    assert!(num(&r, &["results", "max_deviation"]) < 1e-12);
    let (r, _) = report(&["verify", "--suite", "identity"]);
    assert!(num(&r, &["results", "max_abs_residual"]) < 1e-10);
}

#[test]
fn sweep_csv() {
    let dir = std::env::temp_dir().join(format!("quadcert-sweep-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("x4.csv");
    let (r, code) = report(&[
        "sweep",
        "--f",
        "x^4",
        "--a",
        "0",
        "--b",
        "1",
        "--lambda-grid",
        "4",
        "--csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "lambda,gap,bound_first_order,bound_power_mean,tightness"
    );
    assert_eq!(lines.len(), 5);
    // λ = 1/3 row: gap −1/120 against the 1/162 bound 12/162.
    let row: Vec<f64> = lines[2].split(',').map(|c| c.parse().unwrap()).collect();
    assert!((row[0] - 1.0 / 3.0).abs() < 1e-15);
    assert!((row[1] + 1.0 / 120.0).abs() < 1e-12);
    assert!((row[2] - 12.0 / 162.0).abs() < 1e-15);
    assert_eq!(r["results"]["rows"].as_array().unwrap().len(), 4);

    let path = dir.join("linear.csv");
    let (_, code) = report(&[
        "sweep",
        "--f",
        "2*x - 1",
        "--a",
        "0",
        "--b",
        "1",
        "--csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 12);
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert!(cols[1].parse::<f64>().unwrap().abs() < 1e-15, "{line}");
        assert_eq!(&cols[2..], ["0.0", "0.0", ""], "{line}");
    }

    let (r, _) = report(&["sweep", "--f", "x^2", "--a", "0", "--b", "1"]);
    let rows = r["results"]["rows"].as_array().unwrap();
    for i in [0, 10] {
        assert!((rows[i]["tightness"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn means_examples() {
    let (r, code) = report(&["means", "--a", "1", "--b", "2", "--n", "4", "--prop", "1"]);
    assert_eq!(code, 0);
    assert!((num(&r, &["results", "prop1", "gap"]) - 1.0 / 120.0).abs() < 1e-12);
    assert_eq!(r["results"]["prop1"]["holds"], true);
    let b162 = num(&r, &["results", "prop1", "bound"]);
    let b168 = num(&r, &["results", "prop1", "bound_printed"]);
    assert!((b162 - 60.0 / 162.0).abs() < 1e-14 && (b168 - 60.0 / 168.0).abs() < 1e-14);

    let (r, code) = report(&["means", "--a", "1", "--b", "1.0001", "--prop", "all"]);
    assert_eq!(code, 0);
    for (p, k) in [
        ("prop1", "gap"),
        ("prop2", "mid_gap"),
        ("prop2", "trap_gap"),
        ("prop3", "gap"),
    ] {
        assert!(num(&r, &["results", p, k]).abs() < 1e-8, "{p}.{k}");
    }

    let (r, code) = report(&["means", "--a", "1", "--b", "2", "--q", "2", "--prop", "3"]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["prop3"]["holds"], true);
    assert!(r["results"].get("prop1").is_none());
}
