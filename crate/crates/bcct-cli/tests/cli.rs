use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bcct"));
    c.env_remove("BCCT_OUT");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("bcct-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn whitney_suite_on_one_gap_passes() {
    let out = scratch("whitney");
    let o = run(bin().args(["verify", "--suite", "whitney", "--set"]).arg(fixture("one_gap.json")).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&out.join("whitney.json"));
    assert_eq!(report["pass"], true);
    let csv = fs::read_to_string(out.join("whitney.csv")).unwrap();
    assert!(csv.starts_with("parent,rank,start,end,length,lambda\n"));
    // 1 gap, ranks −16..16
    assert_eq!(csv.lines().count(), 1 + 33);
    assert_eq!(json(&out.join("summary.json"))["pass"], true);
}

#[test]
fn transform_suite_reports_decay_slopes() {
    let out = scratch("transform");
    let o = run(bin()
        .args(["verify", "--suite", "transform", "--grid", "16", "--set"])
        .arg(fixture("two_gap.json"))
        .arg("--out")
        .arg(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report = json(&out.join("transform.json"));
    let details = report["details"].as_array().unwrap();
    assert_eq!(details.len(), 3);
    for d in details {
        assert!(d["decay"]["slope"].as_f64().unwrap() <= -4.0);
    }
    for deg in [0, 1, 3] {
        let csv = fs::read_to_string(out.join(format!("transform_p{deg}.csv"))).unwrap();
        assert!(csv.starts_with("n,abs_coefficient\n"));
        assert_eq!(csv.lines().count(), 1 + (1 << 15));
    }
}

#[test]
fn malformed_json_exits_with_two() {
    let dir = scratch("bad");
    let bad = dir.join("bad.json");
    fs::write(&bad, "{\"set\": {\"fixture\": ").unwrap();
    let o = run(bin().arg("verify").arg("--config").arg(&bad).arg("--out").arg(&dir));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed JSON"));
    let o = run(bin().arg("whitney").arg("--set").arg(&bad).arg("--out").arg(&dir));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_configuration_exits_with_two() {
    let dir = scratch("invalid");
    let overlapping = dir.join("overlap.json");
    fs::write(&overlapping, r#"{"gaps": [{"start": 0.0, "end": 1.0}, {"start": 0.5, "end": 2.0}]}"#).unwrap();
    let cases: Vec<Vec<std::ffi::OsString>> = vec![
        vec!["validate".into(), "--set".into(), overlapping.clone().into()],
        vec!["verify".into(), "--suite".into(), "nonsense".into()],
        vec!["validate".into(), "--tol".into(), "-1".into()],
        vec!["validate".into(), "--grid".into(), "4".into()],
        vec!["validate".into(), "--config".into(), dir.join("missing.json").into()],
    ];
    for args in cases {
        let o = run(bin().args(&args).arg("--out").arg(&dir));
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn env_var_overrides_out_flag() {
    let env_dir = scratch("env");
    let flag_dir = scratch("flag");
    let o = run(bin().env("BCCT_OUT", &env_dir).args(["validate", "--out"]).arg(&flag_dir));
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("validate.json").exists());
    assert!(!flag_dir.join("validate.json").exists());
}

#[test]
fn verdicts_are_byte_identical_across_runs() {
    let a = scratch("det-a");
    let b = scratch("det-b");
    for d in [&a, &b] {
        let o = run(bin().args(["verify", "--suite", "whitney", "--suite", "weights", "--seed", "7", "--out"]).arg(d));
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["whitney.json", "weights.json", "summary.json", "alpha.csv", "whitney.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    // 17 significant digits: mantissa with 16 decimals
    let text = fs::read_to_string(a.join("whitney.json")).unwrap();
    assert!(text.contains("e-"), "{text}");
    assert!(text.lines().any(|l| l.contains("\"measure\": 5.0000000000000000e-1") || l.contains("e0")));
}

#[test]
fn weights_command_reads_coefficient_csv() {
    let dir = scratch("weights");
    let input = dir.join("s.csv");
    let mut text = String::from("k,re,im\n");
    for k in 0..200 {
        text.push_str(&format!("{k},{},0\n", 0.5f64.powi(k)));
    }
    fs::write(&input, text).unwrap();
    let o = run(bin().args(["weights", "--nmax", "4", "--input"]).arg(&input).arg("--out").arg(&dir));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let alpha = fs::read_to_string(dir.join("alpha.csv")).unwrap();
    assert_eq!(alpha.lines().count(), 201);
    let report = json(&dir.join("weights.json"));
    assert_eq!(report["pass"], true);
    assert_eq!(report["details"]["tail_indices"].as_array().unwrap().len(), 5);

    fs::write(&input, "k,re\n0,abc\n").unwrap();
    let o = run(bin().args(["weights", "--input"]).arg(&input).arg("--out").arg(&dir));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_summarises_previous_run() {
    let dir = scratch("report");
    let o = run(bin().args(["report", "--out"]).arg(&dir));
    assert_eq!(o.status.code(), Some(2), "no verdicts yet");
    let o = run(bin().args(["verify", "--suite", "whitney", "--suite", "dbr-psd", "--parallel", "--out"]).arg(&dir));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let o = run(bin().args(["report", "--out"]).arg(&dir));
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("whitney") && text.contains("dbr-psd") && text.contains("PASS"));
}

#[test]
fn failing_certificate_gives_nonzero_exit() {
    // A 2^12 grid cannot host six dyadic levels inside the smallest geometric gaps.
    let dir = scratch("fail");
    let o = run(bin()
        .args(["cutoff", "--grid", "12", "--config"])
        .arg(fixture("run_geometric_piecewise.json"))
        .arg("--out")
        .arg(&dir));
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&dir.join("cutoff.json"))["pass"], false);
}

#[test]
fn shipped_configurations_pass() {
    for cfg in ["run_one_gap_constant.json", "run_two_gap_smooth.json"] {
        let dir = scratch(cfg);
        let o = run(bin().arg("verify").arg("--config").arg(fixture(cfg)).arg("--out").arg(&dir));
        assert_eq!(o.status.code(), Some(0), "{cfg}: {}", String::from_utf8_lossy(&o.stdout));
    }
}
