use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alphamax"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn gen(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["gen", "--out", dir.to_str().unwrap(), "--seed", "7"];
    args.extend_from_slice(extra);
    run(&args)
}

fn gaussian(dir: &Path) {
    let out = gen(
        dir,
        &["--family", "gaussian", "--alpha", "0.25", "--delta-mu", "4", "--n", "2000", "--n1", "400"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
}

fn two_files(dir: &Path) -> [String; 4] {
    [
        "--positives".into(),
        dir.join("positives.csv").display().to_string(),
        "--unlabeled".into(),
        dir.join("unlabeled.csv").display().to_string(),
    ]
}

#[test]
fn gen_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    gaussian(&a);
    gaussian(&b);
    for f in ["positives.csv", "unlabeled.csv", "meta.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
    let meta: Value = serde_json::from_slice(&std::fs::read(a.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["params"]["family"], "gaussian");
    assert_eq!(meta["seed"], 7);
}

#[test]
fn gen_rejects_alpha_outside_unit_interval() {
    let tmp = tempfile::tempdir().unwrap();
    for alpha in ["1.5", "0", "-0.1"] {
        let out = gen(
            tmp.path(),
            &["--family", "gaussian", "--alpha", alpha, "--n", "100", "--n1", "10"],
        );
        assert_eq!(out.status.code(), Some(1), "alpha {alpha}");
    }
}

#[test]
fn gen_warns_about_ignored_separation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gen(
        tmp.path(),
        &["--family", "ball", "--alpha", "0.3", "--dim", "3", "--delta-mu", "2", "--n", "100", "--n1", "20"],
    );
    assert!(out.status.success());
    assert!(stderr(&out).contains("ignored for this family"));
}

#[test]
fn estimate_cdf_prints_json() {
    let tmp = tempfile::tempdir().unwrap();
    gaussian(tmp.path());
    let mut args = vec!["estimate".to_string(), "--method".into(), "cdf".into()];
    args.extend(two_files(tmp.path()));
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success(), "{}", stderr(&out));
    let v = stdout_json(&out);
    assert_eq!(v["method"], "cdf-based");
    let a = v["alpha_hat"].as_f64().unwrap();
    assert!(a > 0.0 && a <= 1.0);
}

#[test]
fn estimate_all_gives_four_estimates_and_curve_files() {
    let tmp = tempfile::tempdir().unwrap();
    gaussian(tmp.path());
    let outputs: Vec<Vec<u8>> = ["o1", "o2"]
        .iter()
        .map(|o| {
            let dir = tmp.path().join(o);
            let mut args = vec!["estimate".to_string(), "--method".into(), "all".into()];
            args.extend(two_files(tmp.path()));
            args.extend(["--out".into(), dir.display().to_string()]);
            let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
            assert!(out.status.success(), "{}", stderr(&out));
            let v = stdout_json(&out);
            let names: Vec<&str> = v["estimates"]
                .as_array()
                .unwrap()
                .iter()
                .map(|e| e["method"].as_str().unwrap())
                .collect();
            assert_eq!(names, ["alphamax", "pdf-ratio", "cdf-based", "gmm"]);
            let alpha = v["estimates"][0]["alpha_hat"].as_f64().unwrap();
            assert!((alpha - 0.25).abs() < 0.1, "{alpha}");
            let mut bytes = std::fs::read(dir.join("curve.csv")).unwrap();
            bytes.extend(std::fs::read(dir.join("curve.svg")).unwrap());
            bytes.extend(out.stdout);
            bytes
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn multivariate_input_needs_the_transform() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gen(
        tmp.path(),
        &["--family", "ball", "--alpha", "0.3", "--dim", "3", "--n", "300", "--n1", "60"],
    );
    assert!(out.status.success());
    let mut args = vec!["estimate".to_string(), "--transform".into(), "off".into()];
    args.extend(two_files(tmp.path()));
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("multivariate input requires transform"));
}

#[test]
fn labeled_file_input() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("data.csv");
    let mut text = String::from("y,x\n");
    for i in 0..200 {
        text.push_str(&format!("1,{}\n", 5.0 + (i as f64) / 200.0));
    }
    for i in 0..1000 {
        let v = if i % 4 == 0 { 5.0 + (i as f64) / 1000.0 } else { (i as f64) / 1000.0 };
        text.push_str(&format!("0,{v}\n"));
    }
    std::fs::write(&path, text).unwrap();
    let out = run(&[
        "estimate",
        "--data",
        path.to_str().unwrap(),
        "--label-column",
        "y",
        "--method",
        "gmm",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["method"], "gmm");
}

#[test]
fn bad_config_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    gaussian(tmp.path());
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{ "smooth_k": 3, "bogus": 1 }"#).unwrap();
    let mut args = vec!["estimate".to_string(), "--config".into(), cfg.display().to_string()];
    args.extend(two_files(tmp.path()));
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bogus"));
}

#[test]
fn unknown_method_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    gaussian(tmp.path());
    let mut args = vec!["estimate".to_string(), "--method".into(), "magic".into()];
    args.extend(two_files(tmp.path()));
    let out = run(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(1));
}

const SPEC: &str = r#"{
    "trials": 3,
    "seed": 1,
    "estimators": ["alphamax", "gmm"],
    "configs": [{ "family": "gaussian", "alpha": [0.3, 0.6], "delta_mu": 3, "n": 1000, "n1": 200 }]
}"#;

#[test]
fn bench_outputs_do_not_depend_on_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.json");
    std::fs::write(&spec, SPEC).unwrap();
    let mut files = Vec::new();
    for jobs in ["1", "4"] {
        let dir = tmp.path().join(format!("out{jobs}"));
        let out = run(&[
            "bench",
            "--spec",
            spec.to_str().unwrap(),
            "--jobs",
            jobs,
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        let mut bytes = Vec::new();
        for f in ["trials.csv", "summary.csv", "boxplots/config_000.svg", "boxplots/config_001.svg"] {
            bytes.extend(std::fs::read(dir.join(f)).unwrap());
        }
        assert!(dir.join("timings.csv").exists());
        files.push(bytes);
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn bench_rejects_malformed_and_empty_specs() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, SPEC.replace("\"n1\": 200", "\"n1\": -5")).unwrap();
    let out = run(&["bench", "--spec", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("configs[0].n1"), "{}", stderr(&out));

    let empty = tmp.path().join("empty.json");
    std::fs::write(&empty, r#"{ "estimators": ["gmm"], "configs": [] }"#).unwrap();
    let out = run(&["bench", "--spec", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bundled_spec_plans_the_full_sweep() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("specs/paper_table1_desk.json");
    let spec = alphamax::bench::BenchSpec::load(&path).unwrap();
    let plan = spec.plan(path.parent().unwrap()).unwrap();
    assert_eq!(plan.cells.len(), 60);
    assert_eq!(plan.trials, 10);
}
