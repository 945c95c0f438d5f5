use std::path::PathBuf;
use std::process::{Command, Output};

use idkit::numerics::Rational;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn idkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idkit")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    idkit(args).status.code().expect("exit code")
}

/// Runs with `--json -` and parses stdout.
fn report(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--json", "-"]);
    let out = idkit(&all);
    let text = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (out.status.code().unwrap(), v)
}

fn input(name: &str) -> String {
    fixture(name).to_str().unwrap().to_string()
}

#[test]
fn exit_codes_follow_verdicts() {
    let orthant = input("orthant.json");
    assert_eq!(code(&["verify", "ident", "--seed", "1", "--input", &orthant]), 0);
    let smaller = input("orthant_vertex_descriptor.json");
    assert_eq!(code(&["verify", "ident", "--seed", "1", "--input", &smaller]), 1);
    assert_eq!(code(&["verify", "ident", "--seed", "1", "--budget", "0", "--input", &orthant]), 2);
    assert_eq!(code(&["analyze", "--input", &input("outside.json")]), 3);
}

#[test]
fn usage_errors_exit_three() {
    let orthant = input("orthant.json");
    assert_eq!(code(&["verify", "ident", "--input", &orthant]), 3, "seed is mandatory");
    assert_eq!(code(&["demo", "lorentz"]), 3);
    assert_eq!(code(&["identify", "--input", &orthant]), 3);
    assert_eq!(code(&["verify", "everything", "--seed", "1", "--input", &orthant]), 3);
    assert_eq!(code(&["analyze"]), 3);
    assert_eq!(code(&["analyze", "--input", "/nonexistent/problem.json"]), 3);
    assert_eq!(code(&["verify", "ident", "--seed", "1", "--radius", "-1", "--input", &orthant]), 3);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
}

#[test]
fn malformed_files_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("floats.json", r#"{"kind":"POLYHEDRON","payload":{"A":[["x"]],"b":["0"]},"query":{"x":["0"]}}"#),
        ("kind.json", r#"{"kind":"CONE","payload":{},"query":{}}"#),
        ("dims.json", r#"{"kind":"POLYHEDRON","payload":{"A":[["1","0"]],"b":["0"]},"query":{"x":["0"]}}"#),
        ("truncated.json", r#"{"kind":"POLYHEDRON","payload":"#),
    ];
    for (name, text) in cases {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        assert_eq!(code(&["analyze", "--input", p.to_str().unwrap()]), 3, "{name}");
    }
}

#[test]
fn json_reports_are_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let orthant = input("orthant.json");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let p = dir.path().join(format!("r{k}.json"));
        let args = ["verify", "necessity", "--seed", "42", "--input", &orthant, "--json", p.to_str().unwrap()];
        assert_eq!(code(&args), 0);
        outputs.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let a = idkit(&["demo", "square", "--seed", "9", "--json", "-"]).stdout;
    let b = idkit(&["demo", "square", "--seed", "9", "--json", "-"]).stdout;
    assert_eq!(a, b);
}

fn check_rationals(v: &Value, seen: &mut usize) {
    match v {
        Value::String(s) => {
            if let Ok(r) = s.parse::<Rational>() {
                if s.chars().all(|c| c.is_ascii_digit() || c == '-' || c == '/') {
                    assert_eq!(r.to_string(), *s, "canonical rational text");
                    let back: Rational = serde_json::from_value(serde_json::to_value(&r).unwrap()).unwrap();
                    assert_eq!(back, r);
                    *seen += 1;
                }
            }
        }
        Value::Array(xs) => xs.iter().for_each(|x| check_rationals(x, seen)),
        Value::Object(m) => m.values().for_each(|x| check_rationals(x, seen)),
        _ => {}
    }
}

#[test]
fn rationals_round_trip_through_reports() {
    let mut seen = 0;
    for args in [
        vec!["identify", "--seed", "3", "--input", &input("square_vertex.json")],
        vec!["run", "projgrad", "--input", &input("square_edge.json")],
        vec!["demo", "lorentz", "--seed", "3"],
    ] {
        let (_, v) = report(&args);
        check_rationals(&v, &mut seen);
    }
    assert!(seen > 50, "only {seen} rationals checked");
}

#[test]
fn analyze_orthant_cones() {
    let (c, v) = report(&["analyze", "--input", &input("orthant.json")]);
    assert_eq!(c, 0);
    assert_eq!(v["active_set"], serde_json::json!([0, 1]));
    assert_eq!(v["normal_cone"]["rays"], serde_json::json!([["-1", "0"], ["0", "-1"]]));
    assert_eq!(v["v_in_normal_cone"], Value::Bool(true));
}

#[test]
fn analyze_max_function_and_composite() {
    let (_, mx) = report(&["analyze", "--input", &input("maxfun.json")]);
    assert_eq!(mx["subdifferential"]["conv"], serde_json::json!([["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]));
    // max(x², x) at 0: ∇F(0)ᵀ conv{e₁, e₂} = [0, 1]
    let (_, comp) = report(&["analyze", "--input", &input("composite.json")]);
    assert_eq!(comp["subdifferential"]["conv"], serde_json::json!([["0"], ["1"]]));
}

#[test]
fn identify_fixtures() {
    let (_, orth) = report(&["identify", "--seed", "1", "--input", &input("orthant.json")]);
    assert_eq!(orth["minimal_identifiable_set"]["supp_lambda"], serde_json::json!([0]));
    assert_eq!(orth["multipliers"]["strict_complementarity"], Value::Bool(false));
    let (_, mx) = report(&["identify", "--seed", "1", "--input", &input("maxfun.json")]);
    assert_eq!(mx["minimal_identifiable_set"]["supp_lambda"], serde_json::json!([0, 1]));
    let (_, sq) = report(&["identify", "--seed", "1", "--input", &input("square_vertex.json")]);
    assert_eq!(sq["partial_smoothness"]["overall"], "PASS");
    assert_eq!(sq["manifold"]["basis"], serde_json::json!([]));
}

#[test]
fn verify_checks_on_square() {
    for check in ["critcone", "reduction", "ident", "necessity"] {
        assert_eq!(code(&["verify", check, "--seed", "5", "--input", &input("square_edge.json")]), 0, "{check}");
    }
    for check in ["valley", "rank"] {
        assert_eq!(code(&["verify", check, "--seed", "5", "--input", &input("square_vertex.json")]), 0, "{check}");
    }
}

#[test]
fn growth_fixture_constant_one() {
    let (c, v) = report(&["verify", "growth", "--seed", "5", "--input", &input("abs_plus_square.json")]);
    assert_eq!(c, 0);
    assert_eq!(v["on_m"]["verdict"], "GROWTH");
    assert_eq!(v["ambient"]["verdict"], "GROWTH");
    assert_eq!(v["on_m"]["constant"], "1");
    assert_eq!(v["ambient"]["constant"], "1");
}

#[test]
fn run_traces_identify() {
    let (_, abs) = report(&["run", "prox", "--input", &input("abs.json")]);
    assert_eq!(abs["identified_at"], 5);
    assert_eq!(abs["iterates"][5], serde_json::json!(["0"]));
    let (_, plq) = report(&["run", "prox", "--input", &input("abs_plus_square.json")]);
    assert_eq!(plq["identified_at"], 3);
    let (_, pg) = report(&["run", "projgrad", "--input", &input("square_edge.json")]);
    assert_eq!(pg["identified_at"], 1);
    assert_eq!(pg["iterates"][1], serde_json::json!(["1", "1/4"]));
}

#[test]
fn quartic_demo_reports_formula_and_observation() {
    let (c, v) = report(&["demo", "quartic", "--seed", "0"]);
    assert_eq!(c, 0);
    let limits = v["limits"].as_array().unwrap();
    assert_eq!(limits.len(), 10);
    assert_eq!(limits[0]["formula"].as_f64().unwrap(), 0.5);
    assert!((limits[9]["formula"].as_f64().unwrap() - 100.0 / 10001.0).abs() < 1e-15);
    for (k, l) in limits.iter().enumerate() {
        let n = (k + 1) as f64;
        let observed = l["observed_limit"].as_f64().unwrap();
        assert!((observed - 1.0 / (n * n + 1.0).sqrt()).abs() < 1e-6, "n = {n}: {observed}");
    }
}

#[test]
fn lorentz_demo_witnesses() {
    let (c, v) = report(&["demo", "lorentz", "--seed", "0"]);
    assert_eq!(c, 0);
    let w = v["report"]["witnesses"].as_array().unwrap();
    assert_eq!(w.len(), 7);
    assert_eq!(w[6]["radius"], "1/1000000");
    assert!(w.iter().all(|x| x["in_m_eps"] == true && x["in_m_eps_prime"] == false));
    assert_eq!(v["report"]["stabilizes"], false);
    assert_eq!(v["report"]["locally_minimal_identifiable_set"], Value::Null);
}

#[test]
fn other_demos_pass() {
    for name in ["orthant", "square", "maxfun"] {
        assert_eq!(code(&["demo", name, "--seed", "11"]), 0, "{name}");
    }
}

#[test]
fn json_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("out.json");
    let out = idkit(&["verify", "ident", "--seed", "1", "--input", &input("orthant.json"), "--json", p.to_str().unwrap()]);
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.starts_with("idkit verify: PASS"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["report"]["seed"], 1);
}
