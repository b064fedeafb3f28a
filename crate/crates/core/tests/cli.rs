mod common;

use std::process::Command;

use common::{binary, config_dir};

fn run(args: &[&str]) -> std::process::Output {
    Command::new(binary()).args(args).output().expect("binary runs")
}

fn write_config(dir: &tempfile::TempDir, name: &str, json: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn csv_identical_across_thread_counts() {
    let cfg = config_dir().join("sbm.json");
    let cfg = cfg.to_str().unwrap();
    for cmd in ["estimate", "sweep"] {
        let one = run(&[cmd, "--config", cfg, "--threads", "1", "--replicates", "3000"]);
        let four = run(&[cmd, "--config", cfg, "--threads", "4", "--replicates", "3000"]);
        assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
        assert_eq!(one.stdout, four.stdout, "{cmd}");
    }
}

#[test]
fn sweep_csv_layout() {
    let out = run(&["sweep", "--config", config_dir().join("single.json").to_str().unwrap(), "--replicates", "10"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# log10"));
    assert_eq!(
        lines.next().unwrap(),
        "qsize,ns,psi_hat,stderr,ci_lo,ci_hi,log10_psi,tail_hat,approx_prob,stein_bound"
    );
    assert!(lines.next().unwrap().starts_with("1,0,0.908092,0,"));
}

#[test]
fn svg_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("sweep.svg");
    let out = run(&[
        "sweep",
        "--config",
        config_dir().join("sbm.json").to_str().unwrap(),
        "--replicates",
        "2000",
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let count = |class: &str| doc.descendants().filter(|n| n.attribute("class") == Some(class)).count();
    let csv = String::from_utf8(out.stdout).unwrap();
    let finite = csv.lines().skip(2).filter(|l| !l.split(',').nth(6).unwrap().is_empty()).count();
    assert_eq!(count("point"), finite);
    assert_eq!(count("whisker"), finite);
    assert_eq!(count("ci"), 2 * finite);
    assert_eq!(count("panel"), 3);
}

#[test]
fn json_format() {
    let out = run(&["estimate", "--config", config_dir().join("single.json").to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["stderr"], 0.0);
    assert!((v["psi_hat"].as_f64().unwrap() - 0.90810).abs() < 1e-5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write_config(
        &dir,
        "zero.json",
        r#"{"q": 1, "d": 1, "premiums": [1.05], "reserves": 0, "network": {"kind": "bernoulli", "p": 1}}"#,
    );
    let out = run(&["estimate", "--config", &zero]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("total reserve must be positive"));

    let big = write_config(
        &dir,
        "big.json",
        r#"{"q": 11, "d": 10, "premiums": {"low": 0.95, "high": 1.05, "ns": 5}, "network": {"kind": "bernoulli", "p": 0.5}}"#,
    );
    let out = run(&["oracle", "--config", &big]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle mode limited to small instances"));

    let out = run(&["estimate", "--config", &zero, "--replicates", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["estimate"]).status.code(), Some(2));
    assert_eq!(run(&["estimate", "--config", "/nonexistent.json"]).status.code(), Some(2));

    // a horizon far too short to see ruin makes the path oracle disagree
    let short = write_config(
        &dir,
        "short.json",
        r#"{"q": 1, "d": 1, "premiums": [1.05], "network": {"kind": "bernoulli", "p": 1},
            "horizon": 0.001, "outer_networks": 2, "inner_paths": 1000}"#,
    );
    let out = run(&["oracle", "--config", &short]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn oracle_passes_on_small_instances() {
    for name in ["single.json", "oracle_2x2.json"] {
        let out = run(&["oracle", "--config", config_dir().join(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn seed_sources() {
    let cfg = config_dir().join("sbm.json");
    let cfg = cfg.to_str().unwrap();
    let with_env = |seed: Option<&str>, args: &[&str]| {
        let mut c = Command::new(binary());
        c.args(["estimate", "--config", cfg, "--replicates", "500"]).args(args);
        match seed {
            Some(s) => c.env("RUINNET_SEED", s),
            None => c.env_remove("RUINNET_SEED"),
        };
        c.output().unwrap().stdout
    };
    let default = with_env(None, &[]);
    assert!(String::from_utf8_lossy(&default).trim_end().ends_with(",42"));
    assert!(String::from_utf8_lossy(&with_env(Some("7"), &[])).trim_end().ends_with(",7"));
    assert!(String::from_utf8_lossy(&with_env(Some("7"), &["--seed", "9"])).trim_end().ends_with(",9"));
}
