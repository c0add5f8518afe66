use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn augsgd(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_augsgd"));
    cmd.args(args).env_remove("AUGSGD_SEED");
    if let Some(s) = seed {
        cmd.env("AUGSGD_SEED", s);
    }
    cmd.output().expect("spawn augsgd")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn meta(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("diagnostics.meta.json")).unwrap()).unwrap()
}

#[test]
fn certify_prints_the_chain_constants() {
    let chain = config("chain.json");
    let o = augsgd(&["certify", "--config", chain.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["Theta_rho", "12"]), "{text}");
    let r0: f64 = text.lines().find(|l| l.starts_with("R0")).unwrap().split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((r0 - 30.033_259_545_960_585).abs() < 1e-6);
}

#[test]
fn train_and_report_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let chain = config("chain.json");
    let aug = dir.path().join("aug");
    let cls = dir.path().join("cls");
    for (out, extra) in [(&aug, None), (&cls, Some("--classical"))] {
        let mut args = vec!["train", "--config", chain.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend(extra);
        let o = augsgd(&args, None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("diagnostics.csv").is_file());
        assert!(out.join("weights.json").is_file());
    }
    assert_eq!(meta(&aug)["mode"], "augmented");
    assert_eq!(meta(&cls)["mode"], "classical");

    let summary = dir.path().join("summary.json");
    let o = augsgd(
        &[
            "report",
            aug.join("diagnostics.csv").to_str().unwrap(),
            cls.join("diagnostics.csv").to_str().unwrap(),
            "--out",
            summary.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["runs"].as_array().unwrap().len(), 2);
    assert_eq!(s["runs"][0]["below_r1"], true);
    assert!(s["runs"][1]["r1"].is_null());
}

#[test]
fn environment_seed_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let ball = config("ball_231.json");
    let run = |name: &str, seed: Option<&str>| {
        let out = dir.path().join(name);
        let o = augsgd(&["train", "--config", ball.to_str().unwrap(), "--out", out.to_str().unwrap()], seed);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let plain = run("plain", None);
    let env = run("env", Some("11"));
    let env_again = run("env_again", Some("11"));
    assert_eq!(meta(&plain)["seed"], 7);
    assert_eq!(meta(&env)["seed"], 11);
    let csv = |d: &Path| std::fs::read(d.join("diagnostics.csv")).unwrap();
    assert_ne!(csv(&plain), csv(&env));
    assert_eq!(csv(&env), csv(&env_again));
}

#[test]
fn bad_environment_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ball = config("ball_231.json");
    let o = augsgd(&["train", "--config", ball.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], Some("seven"));
    assert!(!o.status.success());
}

#[test]
fn train_needs_an_output_directory() {
    let ball = config("ball_231.json");
    let o = augsgd(&["train", "--config", ball.to_str().unwrap()], None);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--out"));
}

#[test]
fn gradcheck_reports_json() {
    let o = augsgd(&["gradcheck", "--instances", "20", "--seed", "3"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["instances"], 20);
    assert_eq!(r["failures"], 0);
}

#[test]
fn report_needs_at_least_one_file() {
    let o = augsgd(&["report"], None);
    assert!(!o.status.success());
}
