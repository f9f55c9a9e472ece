use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn opm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opm")).args(args).output().expect("run opm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

/// Runs with `--format json`, validates against the schema and checks the
/// value survives a serialize/parse round trip.
fn json_report(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = opm(&all);
    let text = stdout(&o);
    let v: Value = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    let errors: Vec<String> = schema().iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{args:?}: {errors:?}");
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(again, v);
    (code(&o), v)
}

fn check<'a>(v: &'a Value, name: &str) -> &'a Value {
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"].as_str().unwrap().starts_with(name))
        .unwrap_or_else(|| panic!("no check {name} in {v}"))
}

#[test]
fn structural_q_wiener_table() {
    let o = opm(&["structural", "--process", "q-wiener", "--q", "1/2", "--n", "6"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("row 3: 0 | 5/2*t | 0 | 1"));
    let (c, v) = json_report(&["structural", "--process", "q-wiener", "--q", "1/2", "--n", "6"]);
    assert_eq!(c, 0);
    let cell = &v["data"]["matrix"][3][1];
    assert_eq!(cell[0]["coeff"], "5/2");
    assert_eq!(cell[0]["powers"]["t"], 1);
}

#[test]
fn independence_dichotomy() {
    let (c, v) = json_report(&["structural", "--process", "q-wiener", "--q", "1", "--check", "independence"]);
    assert_eq!(c, 0);
    assert_eq!(check(&v, "independent increments")["status"], "pass");
    let (c, v) = json_report(&["structural", "--process", "q-wiener", "--q", "1/2", "--check", "independence"]);
    assert_eq!(c, 1);
    let chk = check(&v, "independent increments");
    assert_eq!(chk["status"], "fail");
    assert!(chk["detail"].as_str().unwrap().contains("v_{4,2}"));
}

#[test]
fn poisson_harness_coefficients() {
    let (c, v) = json_report(&["harness", "--process", "poisson", "--mu", "1", "--stu", "1,2,4"]);
    assert_eq!(c, 0);
    let k = &v["data"]["coefficients"]["values"];
    let want = [("A", "4/9"), ("B", "4/9"), ("C", "1/9"), ("D", "-4/9"), ("E", "0"), ("F", "-4/9")];
    for (name, val) in want {
        assert_eq!(k[name], val, "{name}");
    }
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["status"] == "pass"));
}

#[test]
fn mutated_sequences_name_the_witness() {
    let (_, v) = json_report(&["harness", "--process", "poisson", "--mu", "1", "--n", "12"]);
    let mut seqs = v["data"]["sequences"].clone();
    let len = seqs["b"].as_array().unwrap().len();
    seqs["b"] = (0..len).map(|n| Value::from((n * n) as i64)).collect();
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, seqs.to_string()).unwrap();
    let (c, v) = json_report(&["harness", "--sequences", bad.to_str().unwrap()]);
    assert_eq!(c, 1);
    assert_eq!(v["data"]["witness"]["equation"], "e4");
    assert_eq!(v["data"]["witness"]["n"], 2);

    // unmodified sequences pass
    let good = dir.path().join("good.json");
    let (_, orig) = json_report(&["harness", "--process", "poisson", "--mu", "1", "--n", "12"]);
    std::fs::write(&good, orig["data"]["sequences"].to_string()).unwrap();
    let (c, _) = json_report(&["harness", "--sequences", good.to_str().unwrap()]);
    assert_eq!(c, 0);
}

#[test]
fn q_ou_harness_parameters() {
    let (c, v) = json_report(&["harness", "--process", "q-ou", "--q", "0.3", "--alpha", "1", "--stu", "0,0.5,1"]);
    assert_eq!(c, 0);
    assert_eq!(v["data"]["kappa"], "1");
    assert_eq!(v["data"]["lambda"], "13/10");
}

#[test]
fn qh_coeffs_defaults_to_1_2_4() {
    let (c, v) = json_report(&["qh-coeffs", "--process", "q-wiener", "--q", "1/2"]);
    assert_eq!(c, 0);
    assert_eq!(v["data"]["coefficients"]["values"]["A"], "4/7");
}

#[test]
fn opm_check_and_kernel() {
    let (c, v) = json_report(&["opm-check", "--process", "q-ou", "--q", "1/3", "--n", "4"]);
    assert_eq!(c, 0);
    assert_eq!(check(&v, "cholesky route")["status"], "pass");
    let (c, v) = json_report(&["kernel", "--q", "0.5", "--rho", "0.3", "--y", "-0.4"]);
    assert_eq!(c, 0);
    assert!(check(&v, "kernel expansion")["residual"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn verify_all_fast_without_mc() {
    let start = std::time::Instant::now();
    let (c, v) = json_report(&["verify-all"]);
    assert_eq!(c, 0, "{v}");
    assert!(start.elapsed().as_secs() < 60);
    assert_eq!(check(&v, "monte carlo")["status"], "skip");
}

#[test]
fn verify_all_mc_is_deterministic() {
    let run = || {
        let (c, mut v) = json_report(&["verify-all", "--mc", "--paths", "100000", "--seed", "7"]);
        assert_eq!(c, 0, "{v}");
        v.as_object_mut().unwrap().remove("timing_ms");
        v.as_object_mut().unwrap().remove("data");
        v
    };
    assert_eq!(run(), run());
}

#[test]
fn simulate_csv() {
    let args = ["simulate", "--process", "poisson", "--mu", "2", "--paths", "4", "--seed", "3", "--format", "csv"];
    let a = stdout(&opm(&args));
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("path_id,time,value"));
    assert_eq!(lines.count(), 4 * 3);
    assert_eq!(a, stdout(&opm(&args)));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("report.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"process": {{"name": "q-wiener", "q": "1/2"}}, "n_max": 4, "format": "json", "output": {:?}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = opm(&["structural", "--config", cfg.to_str().unwrap(), "--n", "3"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["data"]["n"], 3);
    assert_eq!(v["data"]["matrix"][3][1][0]["coeff"], "5/2");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&opm(&["structural", "--process", "nope"])), 2);
    assert_eq!(code(&opm(&["harness", "--process", "poisson", "--stu", "2,1,4"])), 2);
    assert_eq!(code(&opm(&["harness", "--sequences", "/nonexistent.json"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"tolerances": {"bogus": 1}}"#).unwrap();
    assert_eq!(code(&opm(&["verify-all", "--config", cfg.to_str().unwrap()])), 2);
    std::fs::write(&cfg, r#"{"unknown": 1}"#).unwrap();
    assert_eq!(code(&opm(&["verify-all", "--config", cfg.to_str().unwrap()])), 2);
}
