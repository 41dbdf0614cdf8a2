//! End-to-end tests of the `kolmo` binary: exit codes, the documented
//! output formats, and determinism of the verify experiments.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kolmo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kolmo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_k1(dir: &Path) -> String {
    let path = dir.join("k1.json");
    fs::write(
        &path,
        r#"{"block_sizes": [1, 1], "matrix": [[0.0, 0.0], [1.0, 0.0]]}"#,
    )
    .unwrap();
    path.display().to_string()
}

fn write_k2(dir: &Path) -> String {
    let path = dir.join("k2.json");
    fs::write(
        &path,
        r#"{"block_sizes": [1, 1], "matrix": [[1.0, 0.0], [1.0, 0.0]]}"#,
    )
    .unwrap();
    path.display().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_prints_homogeneity() {
    let dir = tempfile::tempdir().unwrap();
    let k1 = write_k1(dir.path());
    let out = kolmo(dir.path(), &["validate", "--structure", &k1]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("homogeneous: true"));

    let k2 = write_k2(dir.path());
    let out = kolmo(dir.path(), &["validate", "--structure", &k2]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("homogeneous: false"));
}

#[test]
fn invalid_structure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"block_sizes": [1, 1], "matrix": [[0.0, 1.0], [0.0, 0.0]]}"#,
    )
    .unwrap();
    let out = kolmo(
        dir.path(),
        &["validate", "--structure", &path.display().to_string()],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = kolmo(dir.path(), &["norm"]);
    assert_eq!(out.status.code(), Some(2));

    let k1 = write_k1(dir.path());
    let out = kolmo(
        dir.path(),
        &["norm", "--structure", &k1, "--point", "0.1,abc,0.2"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn norm_compose_inverse_distance_examples() {
    let dir = tempfile::tempdir().unwrap();
    let k1 = write_k1(dir.path());

    let out = kolmo(
        dir.path(),
        &["norm", "--structure", &k1, "--point", "0.25,0,0.008"],
    );
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0.7");

    let out = kolmo(
        dir.path(),
        &[
            "compose",
            "--structure",
            &k1,
            "--left",
            "1,2,3",
            "--right",
            "2,4,5",
        ],
    );
    assert_eq!(stdout(&out).trim(), "3,6,12");

    let out = kolmo(
        dir.path(),
        &["inverse", "--structure", &k1, "--point", "1,1,0"],
    );
    assert_eq!(stdout(&out).trim(), "-1,-1,1");

    let out = kolmo(
        dir.path(),
        &[
            "distance",
            "--structure",
            &k1,
            "--from",
            "0,0,0",
            "--to",
            "0,0,1",
        ],
    );
    assert_eq!(stdout(&out).trim(), "1");

    // Wrong point arity is a validation error.
    let out = kolmo(dir.path(), &["norm", "--structure", &k1, "--point", "1,2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn taylor_table_and_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let k1 = write_k1(dir.path());
    let out = kolmo(
        dir.path(),
        &[
            "taylor",
            "--structure",
            &k1,
            "--function",
            "mono:0:0,1",
            "--center",
            "0,0.7,-0.2",
            "--order",
            "3",
            "--point",
            "0.5,1,2",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let (json_part, value_part) = text.rsplit_once('\n').unwrap();
    let (json_part, value_part) = match value_part {
        "" => json_part.rsplit_once('\n').unwrap(),
        _ => (json_part, value_part),
    };
    let table: serde_json::Value = serde_json::from_str(json_part).unwrap();
    assert_eq!(table["order"], 3);
    let terms = table["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 7);
    // The coefficient of (0,(0,1)) is exactly one for u = y.
    let unit = terms
        .iter()
        .find(|t| t["k"] == 0 && t["beta"] == serde_json::json!([0, 1]))
        .unwrap();
    assert_eq!(unit["coefficient"], 1.0);
    // u = y is reproduced exactly at order 3.
    assert_eq!(value_part.trim(), "2");
}

#[test]
fn connect_matches_hand_example() {
    let dir = tempfile::tempdir().unwrap();
    let k1 = write_k1(dir.path());
    let out = kolmo(
        dir.path(),
        &[
            "connect",
            "--structure",
            &k1,
            "--point",
            "0,0,0",
            "--eta",
            "0.001",
        ],
    );
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["delta"], 0.1);
    assert_eq!(json["v"][0], 1.0);

    // Beyond the admissible bound the solver refuses: exit 4.
    let out = kolmo(
        dir.path(),
        &[
            "connect",
            "--structure",
            &k1,
            "--point",
            "0,0,0",
            "--eta",
            "0.9",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unknown_function_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let k1 = write_k1(dir.path());
    let out = kolmo(
        dir.path(),
        &[
            "taylor",
            "--structure",
            &k1,
            "--function",
            "nope",
            "--center",
            "0,0,0",
            "--order",
            "2",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seminorm_reports_exact_coordinate_value() {
    let dir = tempfile::tempdir().unwrap();
    let k1 = write_k1(dir.path());
    let out = kolmo(
        dir.path(),
        &[
            "seminorm",
            "--structure",
            &k1,
            "--function",
            "x1",
            "--box",
            "-1,-1,-1:1,1,1",
            "--inner-box",
            "-0.5,-0.5,-0.5:0.5,0.5,0.5",
            "--order",
            "0",
            "--alpha",
            "1",
            "--grid",
            "4",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let value = json["value"].as_f64().unwrap();
    assert!((value - 1.0).abs() <= 1e-9, "value {value}");

    // Out-of-range exponent is a validation error.
    let out = kolmo(
        dir.path(),
        &[
            "seminorm",
            "--structure",
            &k1,
            "--function",
            "x1",
            "--box",
            "-1,-1,-1:1,1,1",
            "--inner-box",
            "-0.5,-0.5,-0.5:0.5,0.5,0.5",
            "--alpha",
            "1.5",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let k2 = write_k2(dir.path());
    let args = [
        "verify",
        "--structure",
        &k2,
        "--function",
        "sin1",
        "--order",
        "1",
        "--scales",
        "1e-3:1e-1:8",
        "--seed",
        "7",
        "--csv",
        "samples.csv",
    ];
    let first = kolmo(dir.path(), &args);
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let csv_first = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert!(csv_first.starts_with("scale,b_distance,remainder\n"));
    assert_eq!(csv_first.lines().count(), 33);
    // Data rows are plain decimals, never scientific notation.
    for line in csv_first.lines().skip(1) {
        assert!(!line.contains('e'), "unexpected exponent in {line:?}");
    }

    let second = kolmo(dir.path(), &args);
    assert_eq!(stdout(&first), stdout(&second));
    let csv_second = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(csv_first, csv_second);

    let json: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();
    assert_eq!(json["pass"], true);
    assert_eq!(json["criteria"][0]["name"], "remainder_order");
}

#[test]
fn verify_all_runs_every_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let k2 = write_k2(dir.path());
    let out = kolmo(
        dir.path(),
        &[
            "verify",
            "--structure",
            &k2,
            "--function",
            "cos1",
            "--order",
            "1",
            "--scales",
            "1e-3:1e-1:8",
            "--experiment",
            "all",
            "--csv",
            "all.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let names: Vec<&str> = json["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        vec![
            "remainder_order",
            "commutator_order",
            "reconstruction_max_error",
            "curve_taylor_order"
        ]
    );
    assert_eq!(json["pass"], true);
}
