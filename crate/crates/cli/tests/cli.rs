use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaussprob")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn no_nulls(v: &Value) -> bool {
    match v {
        Value::Null => false,
        Value::Array(a) => a.iter().all(no_nulls),
        Value::Object(m) => m.values().all(no_nulls),
        _ => true,
    }
}

fn temp_problem(name: &str, body: &str) -> String {
    let path = std::env::temp_dir().join(format!("gaussprob-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn eval_half_space_reproduces_normal_cdf() {
    let hs = problem("half_space.json");
    let v = json(&run(&["eval", "--problem", &hs, "--x", "1"]));
    let value = v["result"]["value"].as_f64().unwrap();
    assert!((value - 0.841_344_746).abs() < 1e-3, "{value}");
    assert_eq!(v["result"]["N"], 16384);
    let tol = &v["provenance"]["tolerances"];
    assert_eq!(tol["tie_tolerance"].as_f64(), Some(1e-9));
    assert_eq!(tol["root_tolerance"].as_f64(), Some(1e-10));
    assert_eq!(tol["r_max_level"].as_f64(), Some(1.0 - 1e-12));
    assert_eq!(v["provenance"]["sampler"]["kind"], "qmc");
    assert_eq!(v["provenance"]["sampler"]["seed"], 0);
    assert!(no_nulls(&v));
}

#[test]
fn non_slater_point_exits_with_code_two() {
    let hs = problem("half_space.json");
    let out = run(&["eval", "--problem", &hs, "--x", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Slater condition"));
    assert!(out.stdout.is_empty());
    let v = json(&run(&["eval", "--problem", &hs, "--x", "-1", "--interval"]));
    let value = v["result"]["value"].as_f64().unwrap();
    assert!((value - 0.158_655_254).abs() < 1e-3, "{value}");
}

#[test]
fn validation_errors_exit_with_code_three() {
    let hs = problem("half_space.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["eval", "--problem", &hs, "--x", "1,2"],
        vec!["eval", "--problem", &hs, "--x", "abc"],
        vec!["eval", "--problem", &hs, "--x", "1", "--samples", "0"],
        vec!["eval", "--problem", &hs, "--x", "1", "--sampler", "lattice"],
        vec!["eval", "--problem", &hs, "--x", "1", "--root-tol", "-1"],
        vec!["eval", "--problem", "/nonexistent/problem.json", "--x", "1"],
        vec!["grad", "--problem", &hs, "--x", "1", "--policy", "max:3"],
        vec!["subdiff", "--problem", &hs, "--x", "1", "--policies", "sideways"],
        vec!["eval", "--problem", &hs],
        vec!["frobnicate"],
    ];
    for args in cases {
        assert_eq!(run(&args).status.code(), Some(3), "{args:?}");
    }
}

#[test]
fn malformed_problems_are_rejected() {
    let bodies = [
        ("syntax.json", r#"{"n": 1, "m": 2"#),
        ("unknown.json", r#"{"n":1,"m":2,"mean":[0,0],"covariance":[[1,0],[0,1]],"components":[{"kind":"cone"}]}"#),
        ("expr.json", r#"{"n":1,"m":2,"mean":[0,0],"covariance":[[1,0],[0,1]],"components":[{"kind":"expr","src":"z3 - x1"}]}"#),
        ("cov.json", r#"{"n":1,"m":2,"mean":[0,0],"covariance":[[1,2],[2,1]],"components":[{"kind":"expr","src":"z1 - x1"}]}"#),
        ("mean.json", r#"{"n":1,"m":2,"mean":[0],"covariance":[[1,0],[0,1]],"components":[{"kind":"expr","src":"z1 - x1"}]}"#),
    ];
    for (name, body) in bodies {
        let path = temp_problem(name, body);
        let out = run(&["eval", "--problem", &path, "--x", "1"]);
        assert_eq!(out.status.code(), Some(3), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let _ = std::fs::remove_file(path);
    }
}

#[test]
fn output_is_byte_identical_and_schedule_independent() {
    let prod = problem("correlated.json");
    for sampler in ["qmc", "mc"] {
        let args = ["grad", "--problem", &prod, "--x", "1,1", "--sampler", sampler, "--seed", "5"];
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
        let mut serial = args.to_vec();
        serial.push("--serial");
        let s = json(&run(&serial));
        assert_eq!(json(&a)["result"], s["result"], "{sampler}");
    }
}

#[test]
fn product_gradient_matches_closed_form() {
    let v = json(&run(&["grad", "--problem", &problem("product.json"), "--x", "1"]));
    let g = v["result"]["value"][0].as_f64().unwrap();
    assert!((g - 0.407_16).abs() < 2e-2, "{g}");
    assert_eq!(v["result"]["policy"], "lowest");
}

#[test]
fn subdifferential_of_a_kink_spans_both_pieces() {
    let v = json(&run(&["subdiff", "--problem", &problem("kink.json"), "--x", "1,1", "--samples", "8192"]));
    let r = &v["result"];
    let upper: Vec<f64> = r["hull_upper"].as_array().unwrap().iter().map(|a| a.as_f64().unwrap()).collect();
    let lower: Vec<f64> = r["hull_lower"].as_array().unwrap().iter().map(|a| a.as_f64().unwrap()).collect();
    for j in 0..2 {
        assert!((upper[j] - 0.241_97).abs() < 1e-2, "{upper:?}");
        assert!(lower[j].abs() < 1e-12);
    }
    assert!(r["tie_fraction"].as_f64().unwrap() > 0.4);
    assert_eq!(r["cone_term"], "trivial");
    assert!(no_nulls(&v));
}

#[test]
fn oracle_agrees_with_sphere_estimate() {
    let corr = problem("correlated.json");
    let o = json(&run(&["oracle", "--problem", &corr, "--x", "1,1", "--draws", "200000", "--fd"]));
    let e = json(&run(&["eval", "--problem", &corr, "--x", "1,1"]));
    let (p, se) = (o["result"]["mc"]["value"].as_f64().unwrap(), o["result"]["mc"]["stderr"].as_f64().unwrap());
    let q = e["result"]["value"].as_f64().unwrap();
    assert!((p - q).abs() < 4.0 * se + 1e-3, "{p} vs {q}");
    assert_eq!(o["result"]["fd_gradient"].as_array().unwrap().len(), 2);
}

#[test]
fn check_on_the_example_records_a_growth_witness() {
    let v = json(&run(&["check", "--problem", &problem("example.json"), "--x", "0"]));
    let r = &v["result"];
    assert_eq!(r["growth_ok"], false);
    assert_eq!(r["cone_term"], "nontrivial");
    let witness = &r["diagnostics"]["growth"]["witness"];
    assert!(witness["ratio"].as_f64().unwrap() > 1.0);
    assert!(no_nulls(&v));

    let hs = json(&run(&["check", "--problem", &problem("half_space.json"), "--x", "1"]));
    assert_eq!(hs["result"]["growth_ok"], true);
    assert_eq!(hs["result"]["diagnostics"]["verdict"], "strict-differentiable");
}

#[test]
fn example_emits_the_witness_table() {
    let out = run(&["example"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,phi_gap,eps_sqrt_t,ratio");
    assert_eq!(rows.len(), 5);
    let mut last_ratio = 0.0;
    for row in &rows[1..] {
        let f: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(f[1] >= f[2], "{row}");
        assert!(f[3] > last_ratio, "{row}");
        last_ratio = f[3];
    }
    let v = json(&run(&["example", "--format", "json", "--t", "0.2,0.05"]));
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 2);
    assert_eq!(run(&["example", "--t", "1.5"]).status.code(), Some(3));
}

#[test]
fn csv_reports_carry_provenance() {
    let out = run(&["eval", "--problem", &problem("ball_m3.json"), "--x", "0.5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# provenance.sampler.N=16384"));
    assert!(text.contains("# provenance.tolerances.tie_tolerance=1e-9"));
    let table: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(table[0], "value,stderr,N,tie_fraction,infinite_fraction,residual_infinite_mass");
    let value: f64 = table[1].split(',').next().unwrap().parse().unwrap();
    // F_3(1.125)
    assert!((value - 0.262_689).abs() < 1e-3, "{value}");
}
