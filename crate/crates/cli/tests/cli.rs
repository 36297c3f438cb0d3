use std::process::{Command, Output};

use serde_json::Value;

fn htplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htplab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = htplab(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn fef_examples() {
    let w = json(&["fef", "--family", "werner", "--d", "3", "--v", "0"]);
    assert!((w["F"].as_f64().unwrap() - 2.0 / 9.0).abs() < 1e-12);
    assert_eq!(w["useful"], false);

    let r = json(&["fef", "--family", "rank2", "--d", "2", "--q", "0.25"]);
    assert!((r["F"].as_f64().unwrap() - 0.375).abs() < 1e-12);

    let n = json(&["fef", "--family", "rank2", "--d", "2", "--q", "0.25", "--numeric"]);
    assert!((n["F"].as_f64().unwrap() - 0.375).abs() < 1e-9);
}

#[test]
fn fef_from_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi.json");
    let h = 0.5;
    let mut entries = vec![[0.0, 0.0]; 16];
    for (r, c) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        entries[r * 4 + c] = [h, 0.0];
    }
    let file = serde_json::json!({ "dim_a": 2, "dim_b": 2, "entries": entries });
    std::fs::write(&path, file.to_string()).unwrap();
    let v = json(&["fef", "--matrix", path.to_str().unwrap()]);
    assert!((v["F"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dim_a": 2, "dim_b": 1, "entries": [[1,0],[1,0],[0,0],[0,0]]}"#).unwrap();
    assert_eq!(htplab(&["fef", "--matrix", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn htp_examples() {
    let a = json(&["htp", "--family", "werner", "--d", "3", "--v", "0.3"]);
    assert_eq!(a["has_htp"], true);
    let b = json(&["htp", "--family", "werner", "--d", "2", "--v", "0.3"]);
    assert_eq!(b["useless_before"], false);
    let c = json(&["htp", "--family", "rank2", "--d", "4", "--q", "0.2"]);
    assert_eq!(c["useless_before"], false);
    let no = json(&["htp", "--family", "werner", "--d", "3", "--v", "0.45"]);
    assert_eq!(no["has_htp"], false);
}

#[test]
fn sweep_row_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = htplab(&["sweep", "--family", "werner", "--d", "3", "--points", "101", "--output", p.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 102);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn csv_and_json_carry_the_same_values() {
    let args = ["sweep", "--family", "rank2", "--d", "2", "--values", "1/15,2/15,7/15,2/3"];
    let csv = htplab(&[&args[..], &["--format", "csv"]].concat());
    let js = htplab(&[&args[..], &["--format", "json"]].concat());
    let csv = String::from_utf8(csv.stdout).unwrap();
    let rows: Vec<Value> = serde_json::from_slice(&js.stdout).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), rows.len());
    for (line, row) in body.iter().zip(&rows) {
        for (name, cell) in header.iter().zip(line.split(',')) {
            match &row[*name] {
                Value::Number(n) => {
                    let x: f64 = cell.parse().unwrap();
                    assert_eq!(x, n.as_f64().unwrap(), "{name}");
                }
                Value::String(s) => assert_eq!(s, cell),
                Value::Bool(b) => assert_eq!(b.to_string(), *cell),
                Value::Null => assert!(cell.is_empty()),
                other => panic!("unexpected {other}"),
            }
        }
    }
}

#[test]
fn rank2_sweep_at_experimental_values() {
    let out = htplab(&["sweep", "--family", "rank2", "--d", "2", "--values", "1/15,2/15,3/15,4/15,5/15,6/15,7/15,8/15,9/15,10/15", "--format", "json"]);
    let rows: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    let kp: Vec<&Value> = rows.iter().filter(|r| r["family"] == "rank2:kappa_prime").collect();
    assert_eq!(kp.len(), 10);
    for (k, r) in kp.iter().enumerate() {
        let q = (k + 1) as f64 / 15.0;
        assert!((r["param"].as_f64().unwrap() - q).abs() < 1e-11);
        assert!(r["F_after_named"].as_f64().unwrap() > 0.5);
    }
}

#[test]
fn experiment_examples() {
    let out = htplab(&["experiment", "--filter", "kappa-prime", "--format", "json"]);
    assert!(out.status.success());
    let rows: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert!(r["F_after"].as_f64().unwrap() > 0.5);
    }

    let plain: Vec<Value> =
        serde_json::from_slice(&htplab(&["experiment", "--values", "7/15", "--format", "json"]).stdout).unwrap();
    assert!(plain[0]["F_before"].as_f64().unwrap() < 0.5);

    let args = ["experiment", "--values", "0.4", "--shots", "10000", "--seed", "3", "--format", "json"];
    let a = htplab(&args);
    let b = htplab(&args);
    assert_eq!(a.stdout, b.stdout);
    let noisy: Vec<Value> = serde_json::from_slice(&a.stdout).unwrap();
    let exact: Vec<Value> =
        serde_json::from_slice(&htplab(&["experiment", "--values", "0.4", "--format", "json"]).stdout).unwrap();
    let d = noisy[0]["F_p"].as_f64().unwrap() - exact[0]["F_p"].as_f64().unwrap();
    assert!(d.abs() <= 0.02);

    let by_angle: Vec<Value> =
        serde_json::from_slice(&htplab(&["experiment", "--theta1", "45", "--format", "json"]).stdout).unwrap();
    assert_eq!(by_angle[0]["theta1"].as_f64().unwrap(), 0.785398163397);
    assert!((by_angle[0]["f"].as_f64().unwrap() - 7.0 / 9.0).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    assert_eq!(htplab(&["fef", "--bogus"]).status.code(), Some(2));
    assert_eq!(htplab(&["fef", "--d", "3"]).status.code(), Some(2));
    assert_eq!(htplab(&["fef", "--family", "werner", "--d", "3", "--v", "1.5"]).status.code(), Some(2));
    assert_eq!(htplab(&["experiment", "--values", "0.9"]).status.code(), Some(2));
    assert_eq!(htplab(&["fef", "--matrix", "/nonexistent/m.json"]).status.code(), Some(4));
    let out = htplab(&["sweep", "--family", "werner", "--d", "3", "--output", "/nonexistent/dir/x.csv"]);
    assert_eq!(out.status.code(), Some(4));
    let strict = [
        "fef", "--family", "werner", "--d", "3", "--v", "0.3", "--numeric", "--max-iter", "1", "--restarts", "2", "--strict",
    ];
    assert_eq!(htplab(&strict).status.code(), Some(3));
    assert_eq!(htplab(&strict[..strict.len() - 1]).status.code(), Some(0));
}

#[test]
fn thread_cap_does_not_change_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_htplab"))
            .env("HTPLAB_THREADS", threads)
            .args(["fef", "--family", "werner", "--d", "3", "--v", "0.2", "--numeric", "--seed", "5"])
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
}
