use std::path::Path;
use std::process::{Command, Output};

use robin_lab::RunConfig;
use serde_json::Value;

const SOLVE: &str = r#"{"domain":"interval","n":128,"lambda":1,"f":{"kind":"constant","value":1},"beta":{"kind":"constant","value":1},"tol":1e-12}"#;

fn robin_lab(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robin-lab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--output")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn solve_peaks_at_midpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SOLVE);
    let out = robin_lab(&["solve"], &cfg, &dir.path().join("o"));
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("o/solution.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("vertex_index,x,value"));
    let rows: Vec<(usize, f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 129);
    let peak = rows.iter().max_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
    assert_eq!(peak.0, 64);
    assert_eq!(peak.1, 0.5);
    assert!((peak.2 - 0.3934693).abs() < 1e-5, "{}", peak.2);
    assert!(!text.contains('\r'));
}

#[test]
fn stability_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"domain":"cube","n":4,"lambda":1,"f":{"kind":"constant","value":1},"beta_sequence":{"kind":"one_over_k","base":1,"count":10}}"#,
    );
    let out = robin_lab(&["stability"], &cfg, &dir.path().join("o"));
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let c_hat: f64 = stdout.trim().strip_prefix("C_hat = ").unwrap().parse().unwrap();
    let text = std::fs::read_to_string(dir.path().join("o/stability.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,m,diff_sup,un_bd_sup,beta_diff,ratio"));
    let ratios: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 90);
    assert_eq!(ratios.iter().copied().fold(f64::MIN, f64::max), c_hat);
    let summary = std::fs::read_to_string(dir.path().join("o/stability_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn invalid_config_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (SOLVE.replace("\"lambda\":1", "\"lambda\":0"), "lambda"),
        (SOLVE.replace("\"n\":128", "\"n\":0"), "n"),
        (SOLVE.replace("\"value\":1}", "\"value\":-2}"), "beta"),
        (SOLVE.replace("\"tol\":1e-12", "\"tol\":2"), "tol"),
        (SOLVE.replace("\"kind\":\"constant\",\"value\":1}", "\"kind\":\"expr\",\"expr\":\"1 +\"}"), "f"),
        ("not json".to_string(), "config"),
    ];
    for (i, (json, field)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("{i}.json"), json);
        let out = robin_lab(&["solve"], &cfg, &dir.path().join("o"));
        assert_eq!(out.status.code(), Some(2), "{field}");
        let err = stderr_json(&out);
        assert_eq!(err["error"], "invalid_config");
        assert_eq!(err["field"], *field);
    }
    // A coefficient that is infinite at x = 0 is caught when sampled on the mesh.
    let cfg = write_config(
        dir.path(),
        "inf.json",
        &SOLVE.replace("\"beta\":{\"kind\":\"constant\",\"value\":1}", "\"beta\":{\"kind\":\"expr\",\"expr\":\"1/x\"}"),
    );
    let out = robin_lab(&["solve"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["field"], "beta");
    // Per-facet length is only known once the mesh exists.
    let cfg = write_config(
        dir.path(),
        "pf.json",
        &SOLVE.replace("\"beta\":{\"kind\":\"constant\",\"value\":1}", "\"beta\":{\"kind\":\"per_facet\",\"values\":[1]}"),
    );
    let out = robin_lab(&["solve"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["field"], "beta");
    // Missing config file.
    let out = robin_lab(&["solve"], &dir.path().join("absent.json"), &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SOLVE);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = robin_lab(&["solve"], &cfg, &blocker.join("sub"));
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "io");
}

#[test]
fn solve_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let tiny_tol = SOLVE.replace("\"tol\":1e-12", "\"tol\":1e-300");
    let cfg = write_config(dir.path(), "t.json", &tiny_tol);
    let out = robin_lab(&["solve"], &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "solve_failed");
}

#[test]
fn dimension_warning_only_below_three() {
    let dir = tempfile::tempdir().unwrap();
    for (domain, warned) in [("interval", true), ("square", true), ("cube", false)] {
        let json = SOLVE.replace("\"interval\"", &format!("\"{domain}\"")).replace("128", "4");
        let cfg = write_config(dir.path(), &format!("{domain}.json"), &json);
        let out_dir = dir.path().join(domain);
        assert!(robin_lab(&["solve"], &cfg, &out_dir).status.success());
        let manifest: Value = serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
        let warnings = manifest["warnings"].as_array().unwrap();
        assert_eq!(!warnings.is_empty(), warned, "{domain}");
        assert_eq!(manifest["mesh"]["dim"], Value::from(domain_dim(domain)));
    }
}

fn domain_dim(domain: &str) -> u64 {
    match domain {
        "interval" => 1,
        "square" => 2,
        _ => 3,
    }
}

#[test]
fn manifest_echo_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"domain":"square","n":6,"lambda":2.5,"f":{"kind":"expr","expr":"1 + x - y/3"},"beta_sequence":[{"kind":"expr","expr":"1 + x*y"},{"kind":"constant","value":0.25}],"beta_limit":{"kind":"constant","value":0.5},"quad_order":3,"lumped":true,"tol":1e-11}"#,
    );
    let first = dir.path().join("first");
    assert!(robin_lab(&["convergence"], &cfg, &first).status.success());
    let manifest: Value = serde_json::from_slice(&std::fs::read(first.join("manifest.json")).unwrap()).unwrap();
    let echo = manifest["config"].to_string();
    let parsed = RunConfig::from_json(&echo).unwrap();
    assert_eq!(parsed.validate().unwrap().name(), "convergence");
    let echo_path = write_config(dir.path(), "echo.json", &echo);
    let second = dir.path().join("second");
    assert!(robin_lab(&["convergence"], &echo_path, &second).status.success());
    let csv = |d: &Path| std::fs::read(d.join("convergence.csv")).unwrap();
    assert_eq!(csv(&first), csv(&second));
}

#[test]
fn subcommand_overrides_config_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let json = SOLVE.replace("\"tol\":1e-12", "\"tol\":1e-12,\"experiment\":\"stability\",\"p\":4");
    let cfg = write_config(dir.path(), "c.json", &json);
    let out_dir = dir.path().join("o");
    assert!(robin_lab(&["theorem0"], &cfg, &out_dir).status.success());
    assert!(out_dir.join("theorem0.csv").exists());
    assert!(!out_dir.join("stability.csv").exists());
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"domain":"cube","n":3,"lambda":1,"f":{"kind":"constant","value":1},"beta_sequence":{"kind":"one_over_k","base":0.5,"count":4}}"#,
    );
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    assert!(robin_lab(&["stability", "--threads", "1"], &cfg, &one).status.success());
    assert!(robin_lab(&["stability", "--threads", "4"], &cfg, &four).status.success());
    let read = |d: &Path| std::fs::read(d.join("stability.csv")).unwrap();
    assert_eq!(read(&one), read(&four));
    let out = robin_lab(&["stability", "--threads", "0"], &cfg, &one);
    assert_eq!(out.status.code(), Some(2));
}
