use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn specact(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specact"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SPECACT_OUT")
        .output()
        .expect("binary runs")
}

#[test]
fn bump_writes_records_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = specact(
        &[
            "bump", "--a", "0", "--b", "1", "--eps", "0.25", "--out", "o",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = fs::read_to_string(dir.path().join("o/bump.csv")).unwrap();
    assert!(records.starts_with("tag,fixture,value,bound,verdict"));
    assert!(records.lines().skip(1).all(|l| l.ends_with(",pass")));
    let samples = fs::read_to_string(dir.path().join("o/bump-bump.csv")).unwrap();
    for line in samples.lines().skip(1) {
        let (x, phi) = line.split_once(',').unwrap();
        let (x, phi): (f64, f64) = (x.parse().unwrap(), phi.parse().unwrap());
        assert!((0.0..=1.0).contains(&phi));
        if (0.0..=1.0).contains(&x) {
            assert!((phi - 1.0).abs() <= 1e-12, "phi({x}) = {phi}");
        }
    }
}

#[test]
fn unknown_config_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "schema_version = 1\ntask = \"ssf\"\nseed = 1\n[params]\nnn = 2\n",
    )
    .unwrap();
    let out = specact(&["run", "bad.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.nn"));
}

#[test]
fn missing_config_and_bad_arguments_exit_with_usage_status() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        specact(&["run", "absent.toml"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        specact(&["verify", "--suite", "nope"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn remainder_of_low_degree_polynomial_passes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("poly.toml"),
        r#"schema_version = 1
task = "remainder"
seed = 5
fixtures = 4

[[functions]]
kind = "polynomial"
coeffs = [0.5, -1.0, 2.0]

[params]
n = 3
"#,
    )
    .unwrap();
    let out = specact(&["run", "poly.toml", "--out", "o"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("o").read_dir().unwrap().count() > 0);
}
