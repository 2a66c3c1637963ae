use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brittle-bayes")).args(args).env_remove("BRITTLE_BAYES_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn list_names_every_scenario() {
    let o = bin(&["list"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names, brittle_bayes::scenarios::SCENARIOS);
}

#[test]
fn run_json_envelope() {
    let o = bin(&["run", "coin", "--set", "n_fair=99"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["runtime_ms"].is_u64());
    let report = &v["report"];
    assert_eq!(report["name"], "coin");
    assert_eq!(report["parameters"]["n_fair"], 99.0);
    assert!(report.get("runtime_ms").is_none());
    let first = &report["results"][0];
    assert_eq!(first["label"], "posterior_unfair");
    assert!((first["value"].as_f64().unwrap() - 1024.0 / 1123.0).abs() < 1e-12);
}

#[test]
fn sweep_csv_one_row_per_value() {
    let o = bin(&["sweep", "learning_robustness", "--param", "alpha", "--values", "1,2,10", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "U_posterior_limit").unwrap();
    let u: Vec<f64> = rows.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(u.len(), 3);
    assert_eq!(u[0], 0.5);
    assert_eq!(u[1], 0.8);
    assert!((u[2] - 1.0 / 1.01).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_two() {
    for args in [&["run", "no_such_scenario"][..], &["run", "coin", "--set", "n_flips=abc"], &["run", "coin", "--set", "zzz=1"], &["frobnicate"]] {
        let o = bin(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn seed_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_brittle-bayes"))
        .args(["run", "mixture_flip"])
        .env("BRITTLE_BAYES_SEED", "17")
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["seed"], 17);
    let explicit = bin(&["run", "mixture_flip", "--seed", "17"]);
    let w: serde_json::Value = serde_json::from_slice(&explicit.stdout).unwrap();
    assert_eq!(v["report"], w["report"]);
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("bb-cli-{}.csv", std::process::id()));
    let o = bin(&["run", "gaussian_chebyshev", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert!(text.contains("gaussian_chebyshev,tail_ratio,"));
    assert!(!text.contains("\r\n"));
}

#[test]
fn verify_reports_oracle_gaps() {
    let o = bin(&["verify", "gamma_band", "--budget", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let checks = v["verify"]["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["label"] == "oracle_gap_posterior_limit" && c["pass"] == true));
    assert_eq!(bin(&["verify", "gamma_band", "--budget", "10"]).status.code(), Some(2));
}
