use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use dtn_lab::cli::{run_experiment, run_to_dir, validate_config, ExperimentConfig, RunOutput};

fn config(json: &str) -> ExperimentConfig {
    validate_config(json).unwrap()
}

fn csv_bytes(out: &RunOutput) -> Vec<(String, String)> {
    out.tables.iter().map(|t| (t.name.clone(), t.to_csv().unwrap())).collect()
}

fn record(out: &RunOutput, name: &str) -> f64 {
    out.report.records.iter().find(|r| r.name == name).unwrap().value
}

#[test]
fn dtn_verify_passes_quickly() {
    let start = Instant::now();
    let out = run_experiment(&config(r#"{"experiment": "dtn-verify", "n": 256}"#));
    assert!(out.report.pass, "{:#?}", out.report.records);
    assert!(start.elapsed().as_secs_f64() < 5.0);
    for r in &out.report.records {
        assert!(r.tolerance.is_some() || r.relation == dtn_lab::cli::Relation::Finite);
    }
}

#[test]
fn literal_symbol_fails_verification() {
    let mut cfg = config(r#"{"experiment": "dtn-verify", "n": 64}"#);
    cfg.paper_literal_symbol = true;
    let out = run_experiment(&cfg);
    assert!(!out.report.pass);
    assert!(record(&out, "symbol_hermitian_defect") > 1.0);
    assert!(record(&out, "hilbert_form_relative") < 1e-12);
}

#[test]
fn same_seed_gives_identical_csv_for_any_worker_count() {
    let cfg = config(r#"{"experiment": "commutator-sweep", "n": 64, "trials": 12, "band_limit": 8}"#);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| csv_bytes(&run_experiment(&cfg)))
    };
    let one = run(1);
    assert_eq!(one, run(1));
    assert_eq!(one, run(4));
    let other = run_experiment(&ExperimentConfig { seed: 7, ..cfg.clone() });
    assert_ne!(one, csv_bytes(&other));

    let ids = config(r#"{"experiment": "identity-check", "n": 64, "y_levels": 32, "trials": 2, "band_limit": 4}"#);
    let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| csv_bytes(&run_experiment(&ids)));
    let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| csv_bytes(&run_experiment(&ids)));
    assert_eq!(a, b);
}

#[test]
fn halving_y_levels_grows_the_identity_residual() {
    let base = r#""experiment": "identity-check", "n": 64, "trials": 2, "band_limit": 4"#;
    let fine = run_experiment(&config(&format!("{{{base}, \"y_levels\": 64}}")));
    let coarse = run_experiment(&config(&format!("{{{base}, \"y_levels\": 32}}")));
    let name = "key_identity_max_relative";
    assert!(record(&coarse, name) > record(&fine, name));
    let tol = |o: &RunOutput| o.report.records.iter().find(|r| r.name == name).unwrap().tolerance;
    assert_eq!(tol(&fine), tol(&coarse));
    for o in [&fine, &coarse] {
        let r = o.report.records.iter().find(|r| r.name == name).unwrap();
        assert_eq!(r.pass, r.value <= r.tolerance.unwrap());
    }
}

#[test]
fn files_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"experiment": "kernel-check"}"#);
    let out = run_to_dir(&cfg, dir.path(), false).unwrap();
    assert!(out.report.pass);
    assert!(dir.path().join("kernel-check_stencil.csv").exists());
    assert!(!dir.path().join("kernel-check_summary.json").with_extension("svg").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("kernel-check_summary.json")).unwrap()).unwrap();
    // pass flags are re-derivable from the recorded values
    for r in summary["records"].as_array().unwrap() {
        let value = r["value"].as_f64().unwrap();
        let derived = match (r["relation"].as_str().unwrap(), r["tolerance"].as_f64()) {
            ("<=", Some(t)) => value <= t,
            (">=", Some(t)) => value >= t,
            ("finite", None) => value.is_finite(),
            other => panic!("{other:?}"),
        };
        assert_eq!(derived, r["pass"].as_bool().unwrap());
    }
    assert_eq!(summary["config"]["experiment"], "kernel-check");
    assert_eq!(summary["pass"], true);

    let plots = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"experiment": "commutator-sweep", "n": 64, "trials": 4, "band_limit": 8}"#);
    run_to_dir(&cfg, plots.path(), true).unwrap();
    let svg = fs::read_to_string(plots.path().join("commutator-sweep_ratio_vs_k.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

fn bin(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dtn-lab")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr),
    )
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let ok = write(dir.path(), "ok.json", r#"{"experiment": "dtn-verify", "n": 64}"#);
    let (code, text) = bin(&["dtn-verify", "--config", &ok, "--out", out, "--seed", "3"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("PASS symbol_eigenvalue_error"));
    let (code, _) = bin(&["dtn-verify", "--config", &ok, "--out", out, "--paper-literal-symbol"]);
    assert_eq!(code, 1);

    let bad = write(dir.path(), "bad.json", r#"{"experiment": "dtn-verify", "n": 100, "p": 1.0}"#);
    let (code, text) = bin(&["dtn-verify", "--config", &bad]);
    assert_eq!(code, 2);
    assert!(text.contains("n must be a power of two") && text.contains("1<p<∞"));

    let (code, _) = bin(&["commutator-sweep", "--config", &ok]);
    assert_eq!(code, 2);
    let (code, _) = bin(&["no-such-thing", "--config", &ok]);
    assert_eq!(code, 2);
    let (code, _) = bin(&["dtn-verify"]);
    assert_eq!(code, 2);

    let blocker = write(dir.path(), "file", "");
    let (code, text) = bin(&["dtn-verify", "--config", &ok, "--out", &format!("{blocker}/sub")]);
    assert_eq!(code, 1, "{text}");
}
