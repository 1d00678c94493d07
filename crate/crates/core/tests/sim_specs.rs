//! Spec files, studies and result files.

use std::path::Path;

use lfc_harq::sim::{
    load_study, parse_results_csv, parse_study, run_study, sidecar_path, write_output, OutputFormat, Study,
};

fn recipes() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes")
}

#[test]
fn every_recipe_parses() {
    let mut n = 0;
    for entry in std::fs::read_dir(recipes()).unwrap() {
        let spec = entry.unwrap().path().join("experiment.spec");
        if spec.exists() {
            load_study(&spec).unwrap_or_else(|e| panic!("{}: {e}", spec.display()));
            n += 1;
        }
    }
    assert!(n >= 7);
}

#[test]
fn one_mode_one_point_one_packet_is_one_row() {
    let text = "[experiment]\nrho_db = 3\npackets = 1\n[mode a]\nmode = fpf\nl_info = 100\n";
    let study = parse_study(text, "inline", Path::new(".")).unwrap();
    let out = run_study(&study, 1).unwrap();
    assert_eq!(out.rows, 1);
    let rows = parse_results_csv(&out.csv, "inline").unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].packets, 1);
}

#[test]
fn snr_and_miso_studies_are_worker_independent() {
    let snr = "[snr]\nrho_db = 0\nsigma2 = 0.25\ngamma = auto, 0\nn_max = 3\ntraces = 2500\n";
    let miso = "[miso]\nmt = 2\nrate_fraction = 0.5\nn_max = 3\nrealizations = 2500\ncodebooks = rvq:2\n";
    for text in [snr, miso] {
        let study = parse_study(text, "inline", Path::new(".")).unwrap();
        assert!(!matches!(study, Study::Harq(_)));
        let a = run_study(&study, 1).unwrap();
        let b = run_study(&study, 3).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(a.body, b.body);
    }
}

#[test]
fn writes_csv_with_sidecar_and_json() {
    let text = "[miso]\nmt = 2\nn_max = 2\nrealizations = 500\n";
    let out = run_study(&parse_study(text, "inline", Path::new(".")).unwrap(), 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("nested/m.csv");
    write_output(&out, &csv, OutputFormat::Csv).unwrap();
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("variant,rate_fraction"));
    assert!(sidecar_path(&csv).exists());
    let json = dir.path().join("m.json");
    write_output(&out, &json, OutputFormat::Json).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), out.rows);
}

#[test]
fn bad_study_keys_report_their_line() {
    let text = "[snr]\nrho_db = 0\nsigma2 = abc\n";
    match parse_study(text, "x.spec", Path::new(".")) {
        Err(lfc_harq::Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}
