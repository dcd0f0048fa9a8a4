use std::path::PathBuf;
use std::process::{Command, Output};

use cuopt::cli::{parse_args, CliError, Format, Suite, Verb};
use cuopt::cu_sets::Instance;
use cuopt::lp::{parse_lp_text, write_lp_text};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cuopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuopt")).args(args).current_dir(fixture("")).output().expect("spawn cuopt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_code(o: &Output) -> String {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let line = text.lines().find(|l| l.starts_with('{')).expect("error JSON on stderr");
    let v: Value = serde_json::from_str(line).unwrap();
    v["error"]["code"].as_str().unwrap().to_string()
}

#[test]
fn parses_documented_invocations() {
    let c = parse_args(["verify", "--suite", "duality"]).unwrap();
    assert_eq!((c.verb, c.suite, c.instances), (Verb::Verify, Suite::Duality, 50));

    let cfg = fixture("knapsack_small_config.json");
    let c = parse_args(["run-knapsack", cfg.to_str().unwrap(), "--seed", "7", "replications=2"]).unwrap();
    assert_eq!(c.verb, Verb::RunKnapsack);
    assert_eq!(c.seed, Some(7));
    assert_eq!(c.input.as_deref(), Some(cfg.as_path()));
    assert_eq!(c.overrides.len(), 1);

    let c = parse_args(["solve-portfolio", "--omega", "-1.5", "--rho", "-0.5", "--format", "json"]).unwrap();
    assert_eq!((c.omega, c.rho, c.format), (-1.5, -0.5, Some(Format::Json)));
}

#[test]
fn rejects_bad_invocations() {
    let none: [&str; 0] = [];
    assert!(matches!(parse_args(none), Err(CliError::BadArgument(_))));
    assert!(matches!(parse_args(["frobnicate"]), Err(CliError::UnknownVerb(_))));
    assert!(matches!(parse_args(["reformulate"]), Err(CliError::MissingInput(_))));
    assert!(matches!(parse_args(["reformulate", "/no/such/file.json"]), Err(CliError::MissingInput(_))));
    assert!(matches!(parse_args(["verify", "--threads", "0"]), Err(CliError::BadArgument(_))));
    assert!(matches!(parse_args(["run-knapsack", "a..b=1"]), Err(CliError::BadOverride(_))));
    let f = fixture("center_m1.json");
    assert!(matches!(parse_args(["reformulate", f.to_str().unwrap(), "--format", "csv"]), Err(CliError::BadArgument(_))));
    assert_eq!(parse_args(["--help"]).unwrap_err().exit_code(), 0);
    assert_eq!(parse_args(["bogus"]).unwrap_err().exit_code(), 2);
}

#[test]
fn exit_codes_and_error_json() {
    let o = cuopt(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "bad_argument");

    let o = cuopt(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "unknown_verb");

    let o = cuopt(&["worst-case", "missing.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "missing_input");

    let o = cuopt(&["solve-knapsack", "knapsack_small.json", "no.such.key=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_code(&o), "bad_override");

    let o = cuopt(&["solve-knapsack", "knapsack_small.json", "model.r1=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_code(&o), "invalid_instance");

    let o = cuopt(&["export", "center_m1.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_code(&o), "unsupported_model");

    for flag in ["--help", "--version"] {
        let o = cuopt(&[flag]);
        assert_eq!(o.status.code(), Some(0));
        assert!(!o.stdout.is_empty());
    }
}

#[test]
fn reformulate_matches_golden_file() {
    let o = cuopt(&["reformulate", "polyhedral_interval.json"]);
    assert_eq!(o.status.code(), Some(0));
    let golden = std::fs::read_to_string(fixture("golden/polyhedral_interval.reformulate.json")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn worst_case_reports_agree() {
    let o = cuopt(&["worst-case", "polyhedral_interval.json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let (p, d) = (v["primal"].as_f64().unwrap(), v["dual"].as_f64().unwrap());
    assert!((p - 2.3).abs() < 1e-9 && (d - 2.3).abs() < 1e-9);

    let o = cuopt(&["worst-case", "center_m1.json", "--samples", "2000"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lhs = v["lhs"].as_f64().unwrap();
    assert!((lhs - v["exact1d"].as_f64().unwrap()).abs() <= 1e-10 * (1.0 + lhs.abs()));
    assert!(v["sampled"].as_f64().unwrap() <= lhs + 1e-9);

    let o = cuopt(&["worst-case", "moment_t2.json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &v["report"];
    assert!(r["primal"].as_f64().unwrap() <= r["exact_dual"].as_f64().unwrap() + 1e-4);
    assert!(r["exact_dual"].as_f64().unwrap() <= r["conservative_dual"].as_f64().unwrap() + 1e-7);
}

#[test]
fn solve_knapsack_outputs() {
    let o = cuopt(&["solve-knapsack", "knapsack_small.json", "--format", "csv"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,x2,objective,lhs,nodes"));
    assert!(lines.next().unwrap().starts_with("111,000,3,"));

    let o = cuopt(&["solve-knapsack", "knapsack_small.json", "mode=\"nc\""]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["objective"].as_f64().unwrap() - 3.6).abs() < 1e-12);
}

#[test]
fn every_verb_is_deterministic_across_thread_counts() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["reformulate", "center_m2.json"],
        vec!["reformulate", "matrix_t3.json"],
        vec!["reformulate", "moment_t2.json", "--conservative"],
        vec!["worst-case", "center_m2.json", "--samples", "500"],
        vec!["worst-case", "matrix_t3.json", "--samples", "500"],
        vec!["worst-case", "moment_t2.json"],
        vec!["solve-knapsack", "knapsack_small.json"],
        vec!["run-knapsack", "knapsack_small_config.json", "replications=2"],
        vec!["solve-portfolio", "portfolio_small.json", "--omega", "0.5", "--rho", "-0.25"],
        vec!["run-portfolio", "portfolio_small.json"],
        vec!["verify", "--instances", "4"],
        vec!["export", "polyhedral_interval.json"],
        vec!["export", "moment_t2.json"],
    ];
    for args in cases {
        let mut outputs = Vec::new();
        for threads in [None, Some("1"), Some("3")] {
            let mut a: Vec<&str> = args.clone();
            a.extend(["--seed", "17"]);
            if let Some(t) = threads {
                a.extend(["--threads", t]);
            }
            let o = cuopt(&a);
            assert_eq!(o.status.code(), Some(0), "{a:?}: {}", String::from_utf8_lossy(&o.stderr));
            outputs.push(o.stdout);
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{args:?} output depends on threads");
    }
}

#[test]
fn seed_changes_sampled_output() {
    let a = cuopt(&["run-knapsack", "knapsack_small_config.json", "--seed", "1"]);
    let b = cuopt(&["run-knapsack", "knapsack_small_config.json", "--seed", "2"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = cuopt(&["reformulate", "polyhedral_interval.json", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let golden = std::fs::read_to_string(fixture("golden/polyhedral_interval.reformulate.json")).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap(), golden);
}

#[test]
fn verify_report_passes() {
    let o = cuopt(&["verify", "--suite", "all", "--instances", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(v["suites"].as_array().unwrap().len() >= 3);
}

#[test]
fn export_round_trips_through_the_parser() {
    for f in ["polyhedral_interval.json", "moment_t2.json"] {
        let text = stdout(&cuopt(&["export", f]));
        let lp = parse_lp_text(&text).unwrap();
        let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
        assert_eq!(write_lp_text(&lp), body, "{f}");
    }
}

#[test]
fn fixtures_round_trip_byte_stable() {
    for f in ["center_m1.json", "center_m2.json", "matrix_t3.json", "moment_t2.json", "polyhedral_interval.json"] {
        let text = std::fs::read_to_string(fixture(f)).unwrap();
        let inst = Instance::from_json(&text).unwrap();
        assert_eq!(inst.to_json(), text, "{f}");
    }
}
