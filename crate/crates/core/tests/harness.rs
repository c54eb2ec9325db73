use std::process::Command;

use sensbound::harness::oracle::{default_deltas, SMOOTH_DELTAS};
use sensbound::harness::output::csv_string;
use sensbound::harness::{
    dense_oracle, emit_outputs, fd_oracle, membrane_line_load_variants, parse_csv, run_case, CaseConfig, CaseId,
    OutputFormat,
};
use sensbound::linalg::DEFAULT_REL_TOL;

const BIN: &str = env!("CARGO_BIN_EXE_sensbound");

#[test]
fn finite_differences_match_on_reference_meshes() {
    for case in CaseId::STUDIES {
        let c = CaseConfig::preset(case);
        let o = fd_oracle(&c, &default_deltas(&c, c.reference)).unwrap();
        assert!(o.rel_diff < 5e-3 && !o.noisy, "{case}: {o:?}");
    }
}

#[test]
fn membrane_beta2_steps_follow_the_mesh() {
    let c = CaseConfig::preset(CaseId::MembraneJ2);
    assert_eq!(default_deltas(&c, 128), vec![4.0 / 128.0, 2.0 / 128.0, 1.0 / 128.0]);
    assert_eq!(default_deltas(&CaseConfig::preset(CaseId::MembraneJ1), 128), SMOOTH_DELTAS.to_vec());
}

#[test]
fn dense_oracle_on_small_meshes() {
    for m in 1..=8 {
        for case in [CaseId::FrameJ1, CaseId::FrameJ2] {
            let d = dense_oracle(&CaseConfig::preset(case), m, 1.0).unwrap();
            assert!(d.rel_diff < 1e-10 && d.field_diff < 1e-10, "{case} m={m}: {d:?}");
        }
    }
    for case in [CaseId::MembraneJ1, CaseId::MembraneJ2] {
        let d = dense_oracle(&CaseConfig::preset(case), 8, 1.0).unwrap();
        assert!(d.rel_diff < 1e-10 && d.field_diff < 1e-10, "{case}: {d:?}");
    }
}

#[test]
fn line_load_readings_differ() {
    let v = membrane_line_load_variants(32, DEFAULT_REL_TOL).unwrap();
    assert!(v.load_boundary > 1.0 && v.qoi_boundary < 0.7, "{v:?}");
}

#[test]
fn outputs_are_deterministic_and_round_trip() {
    let mut c = CaseConfig::preset(CaseId::MembraneJ1);
    c.meshes = vec![8, 16];
    c.reference = 32;
    let a = run_case(&c).unwrap();
    let b = run_case(&c).unwrap();
    let (ta, tb) = (csv_string(&a.rows()).unwrap(), csv_string(&b.rows()).unwrap());
    assert_eq!(ta, tb);
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_outputs(&a, dir.path(), &[OutputFormat::Csv, OutputFormat::PlotData]).unwrap();
    assert_eq!(paths.len(), 3);
    let text = std::fs::read_to_string(&paths[0]).unwrap();
    assert_eq!(text, ta);
    assert_eq!(parse_csv(&text).unwrap(), a.rows());
    let values = std::fs::read_to_string(dir.path().join("membrane-J1_values.dat")).unwrap();
    for curve in ["# J_h", "# upper", "# lower"] {
        assert!(values.contains(curve));
    }
}

#[test]
fn failed_rows_are_recorded_not_fatal() {
    // the loaded box is not aligned with a 4 x 4 mesh
    let mut c = CaseConfig::preset(CaseId::MembraneJ1);
    c.meshes = vec![4, 8];
    c.reference = 16;
    let r = run_case(&c).unwrap();
    assert!(r.outcomes[0].result.is_err());
    assert!(r.outcomes[1].result.is_ok());
    assert!(!r.all_strict());
    let mut only_bad = c.clone();
    only_bad.meshes = vec![4];
    let empty = run_case(&only_bad).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_outputs(&empty, dir.path(), &[OutputFormat::Csv]).is_err());
}

#[test]
fn cli_run_writes_files_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .args(["run", "--case", "frame-J2", "--meshes", "2,4,8", "--reference", "32"])
        .env("SENSBOUND_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("frame-J2.csv")).unwrap();
    assert_eq!(parse_csv(&csv).unwrap().len(), 3);
    let report = Command::new(BIN).arg("report").arg(dir.path().join("frame-J2.csv")).output().unwrap();
    assert!(report.status.success());
    assert!(String::from_utf8_lossy(&report.stdout).contains("gap slope"));
}

#[test]
fn cli_config_file_and_converge() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("case.toml");
    std::fs::write(
        &cfg,
        format!(
            "case = \"frame-J1\"\nmeshes = [2, 4, 8]\nxi = [0.1, 1.9]\nreference = 32\n[output]\ndir = \"{}\"\nprefix = \"sweep\"\n",
            dir.path().display()
        ),
    )
    .unwrap();
    let out = Command::new(BIN).arg("converge").arg("--config").arg(&cfg).env_remove("SENSBOUND_OUT_DIR").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("xi=0.1: gap slope") && stdout.contains("xi=1.9: gap slope"));
    assert!(dir.path().join("sweep.csv").exists());
}

#[test]
fn cli_reports_failures_by_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = Command::new(BIN).args(["run", "--case", "frame-J7"]).output().unwrap();
    assert!(!bad.status.success());
    let out_of_range = Command::new(BIN)
        .args(["run", "--case", "frame-J1", "--xi", "2.5", "--meshes", "2", "--reference", "4"])
        .env("SENSBOUND_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out_of_range.status.code(), Some(2));
    let misaligned = Command::new(BIN)
        .args(["run", "--case", "membrane-J1", "--meshes", "4,8", "--reference", "16"])
        .env("SENSBOUND_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(misaligned.status.code(), Some(1));
}
