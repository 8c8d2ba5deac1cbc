//! End-to-end tests of the command-line interface: flag handling, exit
//! codes, output shapes, and CSV determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsf-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn design_reproduces_reference_cell_count() {
    let out = run(&["design", "--theta-i", "15", "--theta-r", "60"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("N_m = 8"), "{text}");
    assert!(text.contains("# command: design"));
}

#[test]
fn design_prints_achieved_angle() {
    let out = run(&["design", "--theta-i", "15", "--theta-r", "50"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("N_m = 10"), "{text}");
    assert!(text.contains("achieved 49.330"), "{text}");
}

#[test]
fn design_specular_exits_two() {
    let out = run(&["design", "--theta-i", "30", "--theta-r", "30"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("specular"), "{}", stderr(&out));
}

#[test]
fn design_retrosteering_needs_negative_order() {
    // Toward-normal steering with a positive order clamps to the minimum
    // supercell and the first-order beam goes evanescent.
    let out = run(&["design", "--theta-i", "25", "--theta-r", "15"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("evanescent"), "{}", stderr(&out));
    let out = run(&[
        "design",
        "--theta-i",
        "25",
        "--theta-r",
        "15",
        "--order",
        "-1",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("N_m = 31"), "{}", stdout(&out));
}

#[test]
fn simulate_default_receiver_is_silent_without_configuration() {
    // Every tile absorbs by default and the partition blocks everything
    // else, so the first receiver hears nothing at all.
    let out = run(&["simulate", "--scene", "builtin:paper", "--rx-index", "0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("received power (noncoherent): -inf dBmW"),
        "{text}"
    );
}

#[test]
fn simulate_with_chain_emits_two_bounce_component() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("cir.csv");
    let args = [
        "simulate",
        "--scene",
        "builtin:paper",
        "--rx-index",
        "0",
        "--chain",
        "10.0_3.5_0.5,4.5_0.0_0.5",
        "--csv-out",
        csv_path.to_str().unwrap(),
    ];
    let out = run(&args);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("10.0_3.5_0.5;4.5_0.0_0.5"), "{text}");
    assert!(!text.contains("-inf"), "{text}");

    let first = std::fs::read(&csv_path).unwrap();
    let header = String::from_utf8(first.clone()).unwrap();
    assert!(header.starts_with(
        "path_id,kind,delay_ns,gain_db,phase_rad,aoa_el_deg,aoa_az_deg,bounce_count,via_ids\n"
    ));
    // Identical invocation, byte-identical CSV.
    let out2 = run(&args);
    assert!(out2.status.success());
    let second = std::fs::read(&csv_path).unwrap();
    assert_eq!(first, second);
}

#[test]
fn simulate_missing_scene_exits_two() {
    let out = run(&["simulate", "--scene", "/nonexistent/room.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_minimal_scene_has_one_direct_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("minimal.json");
    std::fs::write(
        &path,
        r#"{
  "units": { "length": "m", "frequency": "GHz", "power": "dBmW" },
  "name": "minimal",
  "frequency_ghz": 60.0,
  "power_dbmw": 100.0,
  "tx": [0.0, 0.0, 1.0],
  "rx": [[1.0, 0.0, 1.0]],
  "walls": []
}"#,
    )
    .unwrap();
    let out = run(&["simulate", "--scene", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let los_rows = text.lines().filter(|l| l.contains(" los ")).count();
    assert_eq!(los_rows, 1, "{text}");
    // Free-space spreading at 1 m and 60 GHz: 100 + 20*log10(c / (4*pi*f)).
    assert!(text.contains("31.989"), "Friis power expected: {text}");
}

#[test]
fn compare_lists_every_receiver_with_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("compare.csv");
    let args = [
        "compare",
        "--scene",
        "builtin:paper",
        "--csv-out",
        csv_path.to_str().unwrap(),
    ];
    let out = run(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for rx in ["rx0", "rx1", "rx2", "rx3"] {
        assert!(text.contains(rx), "{text}");
    }
    let first = std::fs::read(&csv_path).unwrap();
    assert!(String::from_utf8(first.clone())
        .unwrap()
        .starts_with("rx_id,rx_x,rx_y,rx_z,chain,plain_dbmw,hsf_dbmw,gain_percent\n"));
    let out2 = run(&args);
    assert!(out2.status.success());
    assert_eq!(first, std::fs::read(&csv_path).unwrap());
}

fn hsf_column(csv: &str) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn compare_ideal_never_loses_to_lossy() {
    let dir = tempfile::tempdir().unwrap();
    let lossy_path = dir.path().join("lossy.csv");
    let ideal_path = dir.path().join("ideal.csv");
    let out = run(&[
        "compare",
        "--scene",
        "builtin:paper",
        "--csv-out",
        lossy_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "compare",
        "--scene",
        "builtin:paper",
        "--ideal-hsf",
        "--csv-out",
        ideal_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let lossy = hsf_column(&std::fs::read_to_string(&lossy_path).unwrap());
    let ideal = hsf_column(&std::fs::read_to_string(&ideal_path).unwrap());
    assert_eq!(lossy.len(), 4);
    for (i, (l, h)) in lossy.iter().zip(&ideal).enumerate() {
        assert!(h >= l, "rx{i}: ideal {h} below lossy {l}");
    }
}

#[test]
fn tables_print_reference_data() {
    let out = run(&["tables", "--which", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for alpha in [
        "-42.0", "-33.0", "-36.0", "-27.0", "-29.0", "-26.0", "-28.0",
    ] {
        assert!(text.contains(alpha), "{text}");
    }

    let out = run(&["tables", "--which", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("note:"), "audit note expected: {text}");
    assert_eq!(
        text.lines()
            .filter(|l| l.trim_start().starts_with(['1', '2']))
            .count(),
        14,
        "{text}"
    );

    let out = run(&["tables", "--which", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("126.98"), "{text}");
    assert!(text.contains("147.46"), "{text}");

    let out = run(&["tables", "--which", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exported_scene_matches_committed_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scene.json");
    let out = run(&["export-scene", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let exported = std::fs::read(&path).unwrap();
    let fixture: PathBuf =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/scenes/paper_fig6.json");
    let committed = std::fs::read(&fixture).expect("fixture exists");
    assert_eq!(
        exported, committed,
        "committed scene fixture is stale; regenerate with export-scene"
    );
}
