use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gasket_cli::config::{parse_range, validate, CommandKind, ExperimentConfig};
use proptest::prelude::*;
use serde_json::Value;

fn gasket(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gasket"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn spectrum_run_writes_headed_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = gasket(dir.path(), &["spectrum", "--m", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let summary = json(&dir.path().join("summary.json"));
    let header = format!(
        "# config_hash={} seed=0",
        summary["config_hash"].as_str().unwrap()
    );
    assert_eq!(csv.lines().next(), Some(header.as_str()));
    assert_eq!(summary["dense_matches"], true);
}

#[test]
fn invalid_configuration_exits_two_with_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = gasket(
        dir.path(),
        &["szego", "--j", "2..3", "--N", "3", "--f", "simple:1,-2,3"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["status"], "invalid_config");
    let messages: Vec<&str> = err["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["message"].as_str().unwrap())
        .collect();
    assert!(
        messages.iter().any(|m| m.contains("N must be < birth j")),
        "{messages:?}"
    );
    assert!(
        messages.iter().any(|m| m.contains("positivity required")),
        "{messages:?}"
    );
    assert_eq!(json(&dir.path().join("error.json"))["exit_code"], 2);
}

#[test]
fn desk_scale_cap_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let out = gasket(dir.path(), &["szego", "--j", "2..9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("desk-scale cap exceeded"));
}

#[test]
fn nonpositive_expression_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = gasket(dir.path(), &["szego", "--j", "2..3", "--f", "expr:x - 0.5"]);
    assert_eq!(out.status.code(), Some(3));
    let err = json(&dir.path().join("error.json"));
    assert_eq!(err["status"], "numerical_failure");
}

#[test]
fn unknown_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        gasket(dir.path(), &["spectrum", "--bogus"]).status.code(),
        Some(2)
    );
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"series": "six", "j_range": "3", "N": 1, "seed": 4}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("run");
    let out = gasket(&out_dir, &["basis", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = json(&out_dir.join("summary.json"));
    assert_eq!(summary["seed"], 4);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"sereis": "six"}"#).unwrap();
    assert_eq!(
        gasket(&out_dir, &["basis", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn reruns_are_byte_identical_and_hash_ignores_output_dir() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = [
        "szego",
        "--mode",
        "cutoff",
        "--m-range",
        "2..3",
        "--f",
        "harmonic:1,1.5,2",
    ];
    assert!(gasket(a.path(), &args).status.success());
    assert!(gasket(b.path(), &args).status.success());
    for name in ["sweep.csv", "plot.dat"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap()
        );
    }
    let other = tempfile::tempdir().unwrap();
    let seeded = gasket(other.path(), &[&args[..], &["--seed", "1"]].concat());
    assert!(seeded.status.success());
    assert_ne!(
        json(&a.path().join("summary.json"))["config_hash"],
        json(&other.path().join("summary.json"))["config_hash"]
    );
}

#[test]
fn resistance_reports_boundary_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = gasket(
        dir.path(),
        &["resistance", "--m", "3", "--f", "harmonic:0,1,2"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("resistance.csv").exists());
}

#[test]
fn defaults_validate_for_every_command() {
    for kind in [
        CommandKind::Topology,
        CommandKind::Spectrum,
        CommandKind::Basis,
        CommandKind::Szego,
        CommandKind::Equidist,
        CommandKind::Resistance,
    ] {
        let config = ExperimentConfig {
            command: Some(kind),
            j_range: "3".into(),
            ..Default::default()
        };
        assert!(
            validate(&config).is_empty(),
            "{kind:?}: {:?}",
            validate(&config)
        );
    }
}

proptest! {
    #[test]
    fn ranges_round_trip(a in 0usize..50, b in 0usize..50) {
        prop_assert_eq!(parse_range(&format!("{a}..{b}")).unwrap(), a..=b);
        prop_assert_eq!(parse_range(&format!("{a}..={b}")).unwrap(), a..=b);
        prop_assert_eq!(parse_range(&a.to_string()).unwrap(), a..=a);
    }

    #[test]
    fn garbage_ranges_are_errors(s in "[a-z]{1,5}") {
        prop_assert!(parse_range(&s).is_err());
    }
}
