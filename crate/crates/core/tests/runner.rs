use std::fs;
use std::path::{Path, PathBuf};

use sqa_core::runner::{
    analyze_results, merge_results, run_experiment, store, ExperimentSpec, RunManifest, RunOptions, SystemKind,
    MERGED_ERES, MERGED_FITS, MERGED_TROTTER,
};
use sqa_core::Error;

fn small_spec(out: &Path, times: &[u32]) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(SystemKind::Closed, vec![6]);
    spec.annealing_times = times.to_vec();
    spec.samples = 4;
    spec.master_seed = 11;
    spec.bootstrap_resamples = 50;
    spec.power_law_window = [2, 64];
    spec.ratio_window = [2, 64];
    spec.output_dir = out.to_path_buf();
    spec
}

fn opts() -> RunOptions {
    RunOptions { threads: Some(2) }
}

fn read(path: PathBuf) -> Vec<u8> {
    fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

const CELL: &str = "L6_P24_alpha0";

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&small_spec(a.path(), &[2, 8, 32]), &opts()).unwrap();
    // A different worker count must not change anything.
    run_experiment(&small_spec(b.path(), &[2, 8, 32]), &RunOptions { threads: Some(1) }).unwrap();
    for name in ["defects_ta2.csv", "defects_ta32.csv", "hist_ta8.csv", "eres.csv", "summary.json"] {
        assert_eq!(
            read(a.path().join(CELL).join(name)),
            read(b.path().join(CELL).join(name)),
            "{name}"
        );
    }
}

#[test]
fn resume_matches_uninterrupted_run() {
    let full = tempfile::tempdir().unwrap();
    let parts = tempfile::tempdir().unwrap();
    run_experiment(&small_spec(full.path(), &[2, 8, 32]), &opts()).unwrap();

    run_experiment(&small_spec(parts.path(), &[2, 8]), &opts()).unwrap();
    let report = run_experiment(&small_spec(parts.path(), &[2, 8, 32]), &opts()).unwrap();
    assert_eq!(report[0].skipped, vec![2, 8]);
    assert_eq!(report[0].computed, vec![32]);

    for name in ["defects_ta32.csv", "hist_ta2.csv", "eres.csv", "summary.json"] {
        assert_eq!(read(full.path().join(CELL).join(name)), read(parts.path().join(CELL).join(name)), "{name}");
    }
}

#[test]
fn interrupted_time_is_redone() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), &[2, 8]);
    run_experiment(&spec, &opts()).unwrap();
    let cell = dir.path().join(CELL);
    let reference = read(cell.join("defects_ta8.csv"));

    // Simulate a crash after the seeds were recorded but before the data was.
    let mut manifest = RunManifest::load(&cell).unwrap().unwrap();
    let mut rec = manifest.record(8).unwrap().clone();
    rec.complete = false;
    manifest.upsert(rec);
    manifest.save(&cell).unwrap();
    fs::write(cell.join("defects_ta8.csv"), b"replica,slice,n\n1,1,").unwrap();

    let report = run_experiment(&spec, &opts()).unwrap();
    assert_eq!(report[0].computed, vec![8]);
    assert_eq!(read(cell.join("defects_ta8.csv")), reference);
}

#[test]
fn corruption_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), &[2, 8]);
    run_experiment(&spec, &opts()).unwrap();
    let cell = dir.path().join(CELL);
    let path = cell.join("defects_ta2.csv");
    let original = read(path.clone());
    let mut bytes = original.clone();
    let last = bytes.len() - 2;
    bytes[last] = if bytes[last] == b'0' { b'1' } else { b'0' };
    fs::write(&path, &bytes).unwrap();

    assert!(matches!(analyze_results(dir.path()), Err(Error::Corrupt { .. })));
    // A resumed run repairs the damaged time.
    let report = run_experiment(&spec, &opts()).unwrap();
    assert_eq!(report[0].computed, vec![2]);
    assert_eq!(read(path), original);
}

#[test]
fn changed_settings_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&small_spec(dir.path(), &[2]), &opts()).unwrap();
    let mut other = small_spec(dir.path(), &[2]);
    other.samples = 5;
    assert!(matches!(run_experiment(&other, &opts()), Err(Error::ManifestMismatch(_))));
}

#[test]
fn summary_is_recomputable_from_raw_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path(), &[2, 8, 32]);
    let report = run_experiment(&spec, &opts()).unwrap();
    let cell = dir.path().join(CELL);
    let before = read(cell.join("summary.json"));
    fs::remove_file(cell.join("summary.json")).unwrap();
    fs::remove_file(cell.join("eres.csv")).unwrap();
    let summaries = analyze_results(dir.path()).unwrap();
    assert_eq!(summaries[0], report[0].summary);
    assert_eq!(read(cell.join("summary.json")), before);

    let eres = store::parse_eres(&cell.join("eres.csv"), &read(cell.join("eres.csv"))).unwrap();
    let taus: Vec<u32> = eres.points.iter().map(|p| p.ta).collect();
    assert_eq!(taus, vec![2, 8, 32]);
    // Every point carries the identity mean(n) * 2 / L = mean(E_res).
    for pt in &summaries[0].points {
        let k1 = pt.cumulants.unwrap().k1;
        assert!((k1 * 2.0 / 6.0 - pt.e_res.mean).abs() < 1e-12);
    }
}

#[test]
fn open_chain_without_bath_reproduces_closed_chain() {
    let closed = tempfile::tempdir().unwrap();
    let open = tempfile::tempdir().unwrap();
    run_experiment(&small_spec(closed.path(), &[8]), &opts()).unwrap();
    let mut spec = small_spec(open.path(), &[8]);
    spec.system = SystemKind::Open;
    spec.alphas = vec![0.0, 0.6];
    run_experiment(&spec, &opts()).unwrap();
    assert_eq!(
        read(closed.path().join(CELL).join("defects_ta8.csv")),
        read(open.path().join(CELL).join("defects_ta8.csv"))
    );
    assert!(open.path().join("L6_P24_alpha0.6").join("defects_ta8.csv").exists());
}

#[test]
fn merge_unions_and_deduplicates() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    run_experiment(&small_spec(a.path(), &[8, 32]), &opts()).unwrap();
    run_experiment(&small_spec(b.path(), &[2, 8]), &opts()).unwrap();
    let mut two_p = small_spec(c.path(), &[8]);
    two_p.trotter_multipliers = vec![2];
    run_experiment(&two_p, &opts()).unwrap();

    let report = merge_results(
        &[a.path().to_path_buf(), b.path().to_path_buf(), c.path().to_path_buf()],
        out.path(),
        None,
    )
    .unwrap();
    assert_eq!(report.duplicates.len(), 1);
    assert_eq!(report.duplicates[0].1, 8);
    assert_eq!(report.summaries.len(), 2);

    let eres = String::from_utf8(read(out.path().join(MERGED_ERES))).unwrap();
    let rows: Vec<&str> = eres.lines().collect();
    assert_eq!(rows[0], "l,p,alpha,ta,mean,stderr,n_samples");
    let p24: Vec<&str> = rows[1..].iter().filter(|r| r.starts_with("6,24,")).copied().collect();
    let taus: Vec<&str> = p24.iter().map(|r| r.split(',').nth(3).unwrap()).collect();
    assert_eq!(taus, vec!["2", "8", "32"]);

    // The merged series equals the one of a single run over the union.
    let whole = tempfile::tempdir().unwrap();
    let single = run_experiment(&small_spec(whole.path(), &[2, 8, 32]), &opts()).unwrap();
    let merged = report.summaries.iter().find(|s| s.cell.p == 24).unwrap();
    assert_eq!(merged.points, single[0].summary.points);

    let trotter = String::from_utf8(read(out.path().join(MERGED_TROTTER))).unwrap();
    assert!(trotter.contains("6,0.0,8,12,") && trotter.contains("6,0.0,8,24,"), "{trotter}");
    let fits: serde_json::Value = serde_json::from_slice(&read(out.path().join(MERGED_FITS))).unwrap();
    assert_eq!(fits.as_array().unwrap().len(), 2);
}

#[test]
fn merge_refuses_conflicting_inputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    run_experiment(&small_spec(a.path(), &[8]), &opts()).unwrap();
    let mut other = small_spec(b.path(), &[8]);
    other.master_seed = 12;
    run_experiment(&other, &opts()).unwrap();
    let inputs = [a.path().to_path_buf(), b.path().to_path_buf()];
    assert!(matches!(
        merge_results(&inputs, out.path(), None),
        Err(Error::ManifestMismatch(_))
    ));

    let c = tempfile::tempdir().unwrap();
    let mut warm = small_spec(c.path(), &[2]);
    warm.warmup_sweeps = 3;
    run_experiment(&warm, &opts()).unwrap();
    let inputs = [a.path().to_path_buf(), c.path().to_path_buf()];
    assert!(matches!(
        merge_results(&inputs, out.path(), None),
        Err(Error::ManifestMismatch(_))
    ));
}
