use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn toruslab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toruslab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("TORUSLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn count_circle_at_25() {
    let dir = tempfile::tempdir().unwrap();
    let o = toruslab(&["count", "--a", "1", "--b", "0", "--c", "1", "--x", "25"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["count"], 81);
    assert!((s["main_term"].as_f64().unwrap() - 25.0 * std::f64::consts::PI).abs() < 1e-12);
    assert!((s["remainder"].as_f64().unwrap() - (81.0 - 25.0 * std::f64::consts::PI)).abs() < 1e-12);
    assert!(dir.path().join("count.csv").exists());
    assert_eq!(json(&dir.path().join("config.json"))["command"], "count");
}

#[test]
fn count_accepts_fractions_and_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let o = toruslab(&["count", "--a", "1/2", "--c", "0.5", "--x", "12.5"], dir.path());
    assert!(o.status.success());
    // (m² + n²)/2 ≤ 12.5  ⇔  m² + n² ≤ 25
    assert_eq!(json(&dir.path().join("summary.json"))["count"], 81);
}

#[test]
fn zero_data_gives_flat_observables() {
    let dir = tempfile::tempdir().unwrap();
    let o = toruslab(&["evolve", "--data", "zero", "--t-final", "0.5", "--dt", "0.01"], dir.path());
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("observables.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,mass,energy,hs_1_eigen,hs_2_eigen");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert!(r.split(',').skip(1).all(|c| c.parse::<f64>().unwrap() == 0.0), "{r}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["strichartz", "--n-list", "8,16", "--ensemble", "6", "--seed", "3", "--n-time-samples", "32"];
    assert!(toruslab(&args, a.path()).status.success());
    assert!(toruslab(&args, b.path()).status.success());
    let ra = fs::read(a.path().join("records.csv")).unwrap();
    assert_eq!(ra, fs::read(b.path().join("records.csv")).unwrap());
    assert_eq!(fs::read(a.path().join("summary.json")).unwrap(), fs::read(b.path().join("summary.json")).unwrap());

    // Replaying the echoed config reproduces the data.
    let c = tempfile::tempdir().unwrap();
    let cfg = a.path().join("config.json");
    assert!(toruslab(&["--config", cfg.to_str().unwrap()], c.path()).status.success());
    assert_eq!(ra, fs::read(c.path().join("records.csv")).unwrap());
}

#[test]
fn thread_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["expsum", "--instances", "50", "--seed", "9"];
    assert!(toruslab(&args, a.path()).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_toruslab"))
        .args(args)
        .arg("--out")
        .arg(b.path())
        .env("TORUSLAB_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read(a.path().join("instances.csv")).unwrap(), fs::read(b.path().join("instances.csv")).unwrap());
}

#[test]
fn config_errors_exit_2_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = toruslab(&["count", "--a=-1", "--c", "1", "--x", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["code"], 2);
    assert_eq!(json(&dir.path().join("error.json"))["error"], "config");

    let o = toruslab(&["evolve", "--dt=-0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = toruslab(&["no-such-command"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = toruslab(&["expsum", "--threads", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = toruslab(
        &["remainder-fit", "--a", "1", "--c", "2", "--x-min", "1000", "--x-max", "1001", "--blocks-per-decade", "1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&dir.path().join("error.json"))["error"], "numeric");
}

#[test]
fn failed_verdicts_exit_4_only_when_asserting() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["recurrence", "--r", "0.01", "--c", "1e10", "--y0", "1e300", "--k", "100"];
    let o = toruslab(&args, dir.path());
    assert!(o.status.success());
    assert_eq!(json(&dir.path().join("summary.json"))["holds"], false);
    let mut strict = args.to_vec();
    strict.push("--assert");
    let o = toruslab(&strict, dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(json(&dir.path().join("error.json"))["error"], "assertion");

    let o = toruslab(&["recurrence", "--r", "0.5", "--c", "2", "--assert"], dir.path());
    assert!(o.status.success());
    assert!(!dir.path().join("error.json").exists());
}

#[test]
fn every_command_writes_config_summary_and_csv() {
    let cases: &[(&[&str], &str)] = &[
        (&["remainder-fit", "--a", "1", "--c", "2", "--x-min", "100", "--x-max", "10000", "--samples-per-block", "20"], "blocks.csv"),
        (&["annulus-scan", "--a", "1", "--c", "2", "--l-max", "4096"], "blocks.csv"),
        (&["picard", "--modes", "16"], "differences.csv"),
        (&["bilinear", "--n-list", "8,16", "--ensemble", "3", "--n-time-samples", "32"], "records.csv"),
        (&["vanish", "--configs", "5"], "configs.csv"),
        (&["xsb-norm", "--modes", "16"], "pieces.csv"),
        (&["product-check", "--n1-list", "2,4", "--spread-factors", "4,8", "--b-primes", "0.45", "--ensemble", "2"], "records.csv"),
        (&["growth", "--modes", "16", "--t-final", "2", "--sample-every", "10"], "series.csv"),
    ];
    for (args, csv) in cases {
        let dir = tempfile::tempdir().unwrap();
        let o = toruslab(args, dir.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        for f in ["config.json", "summary.json", csv] {
            assert!(dir.path().join(f).exists(), "{args:?} missing {f}");
        }
        assert_eq!(json(&dir.path().join("config.json"))["command"], args[0]);
    }
}
