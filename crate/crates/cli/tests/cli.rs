use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpim")).args(args).output().unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    all.extend(["--out", dir.to_str().unwrap()]);
    run(&all)
}

#[test]
fn unknown_flag_exits_with_config_code_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run_in(&out, &["validity", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_criterion_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run_in(&out, &["validity", "--criteria", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown criterion"));
    assert!(!out.exists());
}

#[test]
fn bad_ratio_is_rejected() {
    let o = run(&["parametrise", "--ratio", "1-3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn two_dof_max_forcing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["max-forcing", "--system", "twodof", "--xi1", "0.05", "--xi2", "0.05", "--rho", "0.63"]);
    assert!(o.status.success());
    let k: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!((k / 0.0629 - 1.0).abs() < 0.02, "{k}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("max_forcing.json")).unwrap()).unwrap();
    assert!((json["kappa_max"].as_f64().unwrap() - k).abs() < 1e-6);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn validity_writes_summary_and_angles() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["validity", "--criteria", "invariance,singularity,simplified"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let rows = summary.as_array().unwrap();
    let expected = [("invariance", 1.143, 1.063), ("singularity", 1.450, 1.240), ("simplified", 1.202, 1.109)];
    for (row, (name, rho, u)) in rows.iter().zip(expected) {
        assert_eq!(row["criterion"], name);
        assert!((row["rho_star"].as_f64().unwrap() / rho - 1.0).abs() < 0.03);
        assert!((row["u_max"].as_f64().unwrap() / u - 1.0).abs() < 0.03);
    }
    let mut angles = csv::Reader::from_path(dir.path().join("angles.csv")).unwrap();
    assert_eq!(angles.headers().unwrap(), vec!["criterion", "theta", "phi", "rho"]);
    assert_eq!(angles.records().count(), 64 * 2 + 1);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "frc", "--kappa", "0.1", "--xi", "0.02", "--order", "5", "--omega-min", "1.3", "--omega-max", "1.7", "--points", "9",
    ];
    assert!(run_in(a.path(), &args).status.success());
    assert!(run_in(b.path(), &args).status.success());
    let x = fs::read(a.path().join("frc.csv")).unwrap();
    assert!(x.len() > 40);
    assert_eq!(x, fs::read(b.path().join("frc.csv")).unwrap());
}

#[test]
fn backbone_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["backbone", "--order", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("backbone.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["rho", "omega_nl", "u_max"]);
    let first = r.records().next().unwrap().unwrap();
    let omega: f64 = first[1].parse().unwrap();
    assert!(omega >= 1.5);
}
