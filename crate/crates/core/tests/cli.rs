use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbscatter")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn scatter_record() {
    let out = run(&["scatter"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = stdout_json(&out);
    for key in ["epsilon", "beta", "nu", "R_re", "R_im", "T_re", "T_im", "unitarity_defect"] {
        assert!(v[key].is_number(), "missing {key}");
    }
    assert!(v["unitarity_defect"].as_f64().unwrap() < 1e-8);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"beta\": 2.5000000000000000e-1"), "{text}");

    let v = stdout_json(&run(&["scatter", "--override", "epsilon=0"]));
    assert_eq!(v["R_re"].as_f64(), Some(0.0));
    assert_eq!(v["R_im"].as_f64(), Some(0.0));
    assert_eq!(v["T_re"].as_f64(), Some(1.0));
}

#[test]
fn exit_codes() {
    // Re ν_0 at ε = 1e-3 lies inside the guard band
    let out = run(&["scatter", "--override", "epsilon=0.001", "--override", "nu=0.749337"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("mu - eps*gamma*F != 0"), "{}", stderr(&out));

    let out = run(&["scatter", "--override", "discretization.bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("discretization"), "{}", stderr(&out));

    let out = run(&["sweep", "--override", "sweep.nu.count=0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sweep.nu"), "{}", stderr(&out));

    let out = run(&["scatter", "--override", "epsilon=0.2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("epsilon"));

    assert_eq!(run(&["scatter", "--threads", "0"]).status.code(), Some(2));
    assert_eq!(run(&["scatter", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn sweep_config_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let sidecar = dir.path().join("a.csv.config.json");
    let args = ["sweep", "--override", "sweep.nu.count=9", "--override", "sweep.beta.values=[0.2,0.3]", "--threads", "2"];
    let out = run(&[&args[..], &["--out", a.to_str().unwrap()]].concat());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let first = std::fs::read_to_string(&a).unwrap();
    assert!(first.starts_with(
        "epsilon,beta,nu,delta,re_R,im_R,re_T,im_T,abs_R2,abs_T2,bw_pred,fano_pred,unitarity_defect\n"
    ));
    assert_eq!(first.lines().count(), 1 + 18);

    let out = run(&["sweep", "--config", sidecar.to_str().unwrap(), "--out", b.to_str().unwrap(), "--threads", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn resonance_report() {
    let out = run(&["resonance"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = stdout_json(&out);
    assert_eq!(v["im_nu0_positive"], serde_json::Value::Bool(true));
    assert!(v["nu_a"].is_number() && v["nu_b"].is_number());
    assert!(v["nu0"][1].as_f64().unwrap() > 0.0);
}

#[test]
fn trapped_exports_mode() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("t.json");
    let csv = dir.path().join("mode.csv");
    let out = run(&[
        "trapped",
        "--override",
        r#"profile={"kind":"rectangular","a":12.566370614359172}"#,
        "--override",
        "trapped.branch=0",
        "--override",
        &format!("trapped.mode_csv={}", csv.display()),
        "--override",
        "trapped.mode_samples=11",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["candidates"].as_array().unwrap().len(), 3);
    let b = &v["branches"][0];
    assert_eq!(b["checks_pass"], serde_json::Value::Bool(true));
    assert!((b["point"]["beta00"].as_f64().unwrap() - 7.0 / 32.0).abs() < 1e-10);
    let mode = std::fs::read_to_string(Path::new(&csv)).unwrap();
    assert!(mode.starts_with("m,x,re_psi,im_psi\n"));
    assert_eq!(mode.lines().count(), 1 + 17 * 11);
}

#[test]
fn validate_passes_and_catches_a_coarse_oracle() {
    let out = run(&["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["passed"], serde_json::Value::Bool(true));

    let out = run(&["validate", "--override", "oracle.spacing=0.25", "--override", "validate.tolerance=1e-9"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["passed"], serde_json::Value::Bool(false));
}
