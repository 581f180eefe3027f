//! End-to-end runs of the `pppi` binary.

use std::process::{Command, Output};

fn pppi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pppi")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn fig2_curve_from_the_command_line() {
    let o = pppi(&["outage", "--m", "3", "--theta", "0.5", "--d", "2", "--alpha", "4", "--lambda-sweep", "0.001:0.03:30"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let p = column(&text, "p_success");
    assert_eq!(p.len(), 30);
    assert!(p.windows(2).all(|w| w[1] < w[0]));
    // outage at lambda = 0.01 is about 0.0978 (single-slot, m = 3)
    let text = stdout(&pppi(&["outage", "--lambda", "0.01"]));
    let p = column(&text, "p_success")[0];
    assert!(((1.0 - p) - 0.0977702698).abs() < 1e-9, "{p}");
}

#[test]
fn fig1_peak() {
    let o = pppi(&["sweep", "--quantity", "i-exp-i", "--alpha", "2.5", "--lambda-sweep", "0:0.8:100"]);
    assert!(o.status.success());
    let v = column(&stdout(&o), "value");
    let peak = v.iter().cloned().fold(0.0, f64::max);
    assert!((peak - 0.8 / std::f64::consts::E).abs() < 2e-4);
}

#[test]
fn verify_quick_passes() {
    let o = pppi(&["verify", "--suite", "quick", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",pass")));
}

#[test]
fn verify_reports_disagreement() {
    // a single replication has zero sample variance, so any gap to the
    // analytic value counts as a disagreement
    let o = pppi(&["verify", "--suite", "quick", "--reps", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains(",fail"));
}

#[test]
fn exit_codes() {
    assert_eq!(pppi(&["--help"]).status.code(), Some(0));
    assert_eq!(pppi(&["outage", "--nope"]).status.code(), Some(2));
    assert_eq!(pppi(&["functional", "--pathloss", "quartic"]).status.code(), Some(2));
    assert_eq!(pppi(&["joint", "--lambda", "-1"]).status.code(), Some(2));
    assert_eq!(pppi(&["functional", "--alpha", "2"]).status.code(), Some(2));
    let o = pppi(&["functional", "--pathloss", "min", "--p", "2,1", "--abs-tol", "1e-300", "--rel-tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not converge"));
}

#[test]
fn simulate_is_reproducible_and_seed_sensitive() {
    let a = pppi(&["simulate", "--seed", "7", "--reps", "20000"]);
    let b = pppi(&["simulate", "--seed", "7", "--reps", "20000"]);
    let c = pppi(&["simulate", "--seed", "8", "--reps", "20000"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn out_file_matches_stdout() {
    let path = std::env::temp_dir().join(format!("pppi-out-{}.csv", std::process::id()));
    let args = ["joint", "--alpha-list", "3,4", "--lambda", "0.02"];
    let direct = pppi(&args);
    let mut with_out: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap();
    with_out.extend(["--out", p]);
    let o = pppi(&with_out);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn functional_json_and_matrix_dump() {
    let o = pppi(&["functional", "--p", "1,2", "--tx-prob", "0.5", "--format", "json", "--dump-matrices"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["inputs"]["p"], "1,2");
    assert_eq!(v["method"], "quadrature");
    assert!(v["value"].as_f64().unwrap() > 0.0);
    let dump: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    // classes for ||p|| = 3: one per l = 1, 2, 3
    assert_eq!(dump["classes"].as_array().unwrap().len(), 3);
}

#[test]
fn presets_cover_every_figure() {
    for (fig, rows) in [
        ("fig1", 4 * 101),
        ("fig2", 4 * 31),
        ("fig3", 5 * 40),
        ("fig4", 5 * 51),
        ("fig5", 5 * 60),
        ("fig6", 4 * 31),
        ("fig7", 3 * 51),
        ("fig8", 3 * 51),
    ] {
        let o = pppi(&["sweep", "--preset", fig]);
        assert!(o.status.success(), "{fig}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o).lines().count(), rows + 1, "{fig}");
    }
}
