//! End-to-end behavior of the pipeline commands, exercised in-process
//! through the same dispatch the binary uses.

use qcmol::chemmap::Molecule;
use qcmol::circuit::CircuitGrid;
use qcmol_cli::{run_args, Outcome};
use std::path::{Path, PathBuf};
use tempfile::TempDir;

fn args(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

fn run(parts: &[&str]) -> anyhow::Result<Outcome> {
    run_args(&args(parts))
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn read(dir: &TempDir, name: &str) -> String {
    std::fs::read_to_string(dir.path().join(name)).unwrap()
}

#[test]
fn generate_writes_count_circuits_deterministically() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "c.txt");
    let flags = [
        "generate", "--qubits", "4", "--layers", "5", "--count", "25", "--seed", "9", "--out",
        &out,
    ];
    assert_eq!(run(&flags).unwrap(), Outcome::Clean);
    let first = read(&dir, "c.txt");
    assert_eq!(first.lines().count(), 25);
    for line in first.lines() {
        let grid = CircuitGrid::from_line(line).unwrap();
        assert_eq!(grid.n_qubits(), 4);
        assert_eq!(grid.n_layers(), 5);
        assert!(grid.validate().is_empty());
    }
    // Byte-identical rerun.
    assert_eq!(run(&flags).unwrap(), Outcome::Clean);
    assert_eq!(first, read(&dir, "c.txt"));
}

#[test]
fn generate_extend_preserves_prefixes() {
    let dir = TempDir::new().unwrap();
    let five = path(&dir, "c5.txt");
    let eight = path(&dir, "c8.txt");
    run(&[
        "generate", "--qubits", "4", "--layers", "5", "--count", "10", "--seed", "3", "--out",
        &five,
    ])
    .unwrap();
    run(&[
        "generate", "--layers", "8", "--extend-from", &five, "--seed", "3", "--out", &eight,
    ])
    .unwrap();
    let base: Vec<CircuitGrid> = read(&dir, "c5.txt")
        .lines()
        .map(|l| CircuitGrid::from_line(l).unwrap())
        .collect();
    let grown: Vec<CircuitGrid> = read(&dir, "c8.txt")
        .lines()
        .map(|l| CircuitGrid::from_line(l).unwrap())
        .collect();
    assert_eq!(base.len(), grown.len());
    for (b, g) in base.iter().zip(&grown) {
        assert_eq!(g.n_layers(), 8);
        for l in 0..5 {
            assert_eq!(b.layer(l), g.layer(l));
        }
        assert!(g.validate().is_empty());
    }
}

#[test]
fn generate_rejects_shrinking_extension() {
    let dir = TempDir::new().unwrap();
    let five = path(&dir, "c5.txt");
    run(&[
        "generate", "--qubits", "4", "--layers", "5", "--count", "3", "--seed", "1", "--out",
        &five,
    ])
    .unwrap();
    let out = path(&dir, "c2.txt");
    assert!(run(&["generate", "--layers", "2", "--extend-from", &five, "--out", &out]).is_err());
}

#[test]
fn describe_flags_unmappable_offsets_and_continues() {
    let dir = TempDir::new().unwrap();
    let circuits = path(&dir, "c.txt");
    // Two mappable 6-qubit circuits around one with a delta-5 CNOT.
    let ok_line = "6 1 RZ RZ RZ RZ RZ RZ";
    let bad_line = "6 1 C5 RZ RZ RZ RZ T";
    std::fs::write(&circuits, format!("{ok_line}\n{bad_line}\n{ok_line}\n")).unwrap();
    let out = path(&dir, "d.csv");
    let outcome = run(&["describe", "--circuits", &circuits, "--out", &out, "--seed", "1"]).unwrap();
    assert_eq!(outcome, Outcome::Partial);
    let records = qcmol_cli::records::parse_described(&read(&dir, "d.csv")).unwrap();
    assert_eq!(records.len(), 3);
    assert!(records[0].is_ok());
    assert_eq!(records[1].status, "unmappable_delta");
    assert!(records[1].r_min.is_none());
    assert!(records[2].is_ok());
    assert!(records[0].r_min.unwrap() > 0.0);
}

#[test]
fn describe_is_deterministic_and_emits_molecules() {
    let dir = TempDir::new().unwrap();
    let circuits = path(&dir, "c.txt");
    run(&[
        "generate", "--qubits", "4", "--layers", "3", "--count", "12", "--seed", "7", "--out",
        &circuits,
    ])
    .unwrap();
    let out = path(&dir, "d.csv");
    let mols = path(&dir, "m.txt");
    let flags = [
        "describe", "--circuits", &circuits, "--out", &out, "--seed", "2", "--molecules-out",
        &mols,
    ];
    assert_eq!(run(&flags).unwrap(), Outcome::Clean);
    let first = read(&dir, "d.csv");
    let first_mols = read(&dir, "m.txt");
    run(&flags).unwrap();
    assert_eq!(first, read(&dir, "d.csv"));
    assert_eq!(first_mols, read(&dir, "m.txt"));
    // Molecule lines parse back and validate.
    for line in first_mols.lines() {
        let (id, record) = line.split_once(' ').unwrap();
        id.parse::<usize>().unwrap();
        let mol = Molecule::from_line(record).unwrap();
        assert!(mol.validate().is_empty());
    }
}

fn write_identical_circuits(dir: &TempDir, n: usize) -> String {
    let line = "4 2 RZ RZ I I I RZ RZ I";
    let circuits = path(dir, "same.txt");
    std::fs::write(&circuits, format!("{}\n", vec![line; n].join("\n"))).unwrap();
    circuits
}

#[test]
fn evaluate_identical_circuits_all_discarded() {
    let dir = TempDir::new().unwrap();
    let circuits = write_identical_circuits(&dir, 20);
    let out = path(&dir, "e.csv");
    run(&[
        "evaluate",
        "--circuits",
        &circuits,
        "--dataset",
        "hidden-manifold:d=4",
        "--train-size",
        "40",
        "--test-size",
        "40",
        "--bo-budget",
        "3",
        "--seed",
        "5",
        "--out",
        &out,
    ])
    .unwrap();
    let records = qcmol_cli::records::parse_evaluated(&read(&dir, "e.csv")).unwrap();
    assert_eq!(records.len(), 20);
    let first_acc = records[0].test_accuracy;
    for r in &records {
        assert_eq!(r.test_accuracy, first_acc);
        assert_eq!(r.label, qcmol::svm::PerformanceLabel::Discarded);
    }
}

#[test]
fn evaluate_bo_budget_one_records_trace_length_one() {
    let dir = TempDir::new().unwrap();
    let circuits = write_identical_circuits(&dir, 3);
    let out = path(&dir, "e.csv");
    run(&[
        "evaluate",
        "--circuits",
        &circuits,
        "--dataset",
        "hidden-manifold:d=4",
        "--train-size",
        "30",
        "--test-size",
        "30",
        "--bo-budget",
        "1",
        "--seed",
        "2",
        "--out",
        &out,
    ])
    .unwrap();
    let manifest =
        qcmol_cli::manifest::Manifest::read(&dir.path().join("e.csv.manifest")).unwrap();
    let trace_len = manifest
        .settings
        .iter()
        .find(|(k, _)| k == "bo.trace_len")
        .map(|(_, v)| v.clone())
        .unwrap();
    assert_eq!(trace_len, "1");
}

/// Build a small described+evaluated pair for the search and report tests.
fn descriptor_fixture(dir: &TempDir) -> (String, String) {
    let circuits = path(dir, "c.txt");
    run(&[
        "generate", "--qubits", "4", "--layers", "5", "--count", "40", "--seed", "11", "--out",
        &circuits,
    ])
    .unwrap();
    let described = path(dir, "d.csv");
    run(&["describe", "--circuits", &circuits, "--out", &described, "--seed", "11"]).unwrap();
    let evaluated = path(dir, "e.csv");
    run(&[
        "evaluate",
        "--circuits",
        &circuits,
        "--dataset",
        "hidden-manifold:d=4",
        "--train-size",
        "60",
        "--test-size",
        "60",
        "--bo-budget",
        "3",
        "--margin",
        "0.25",
        "--margin-mode",
        "relative",
        "--seed",
        "11",
        "--out",
        &evaluated,
    ])
    .unwrap();
    (described, evaluated)
}

#[test]
fn evaluate_runs_on_csv_datasets() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "toy.csv");
    let mut content = String::from("f1,f2,kind\n");
    for i in 0..20 {
        // Two linearly separated blobs.
        content.push_str(&format!("{},{},metal\n", 1.0 + 0.1 * i as f64, 0.5 + 0.02 * i as f64));
        content.push_str(&format!("{},{},nonmetal\n", -1.0 - 0.1 * i as f64, -0.5));
    }
    std::fs::write(&csv, content).unwrap();
    let circuits = path(&dir, "c.txt");
    run(&[
        "generate", "--qubits", "2", "--layers", "2", "--count", "4", "--seed", "1", "--out",
        &circuits,
    ])
    .unwrap();
    let out = path(&dir, "e.csv");
    let spec = format!("csv:path={csv};features=f1,f2;label=kind;positive=metal");
    run(&[
        "evaluate",
        "--circuits",
        &circuits,
        "--dataset",
        &spec,
        "--train-size",
        "20",
        "--test-size",
        "20",
        "--bo-budget",
        "2",
        "--seed",
        "1",
        "--out",
        &out,
    ])
    .unwrap();
    let records = qcmol_cli::records::parse_evaluated(&read(&dir, "e.csv")).unwrap();
    assert_eq!(records.len(), 4);
    // The blobs are trivially separable; kernels should do well.
    assert!(records.iter().any(|r| r.test_accuracy > 0.8));
}

#[test]
fn evaluate_runs_on_idx_digit_pairs() {
    let dir = TempDir::new().unwrap();
    let n_per_digit = 20usize;
    let mut digits = Vec::new();
    for i in 0..(2 * n_per_digit) {
        digits.push(if i % 2 == 0 { 3u8 } else { 5u8 });
    }
    let mut images = Vec::new();
    images.extend_from_slice(&0x0000_0803u32.to_be_bytes());
    images.extend_from_slice(&(digits.len() as u32).to_be_bytes());
    images.extend_from_slice(&28u32.to_be_bytes());
    images.extend_from_slice(&28u32.to_be_bytes());
    for (i, &digit) in digits.iter().enumerate() {
        for p in 0..784usize {
            images.push(((digit as usize * 83 + i * 29 + p * 7) % 253) as u8);
        }
    }
    let mut labels = Vec::new();
    labels.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    labels.extend_from_slice(&(digits.len() as u32).to_be_bytes());
    labels.extend_from_slice(&digits);
    let images_path = path(&dir, "images.idx");
    let labels_path = path(&dir, "labels.idx");
    std::fs::write(&images_path, images).unwrap();
    std::fs::write(&labels_path, labels).unwrap();

    let circuits = path(&dir, "c.txt");
    run(&[
        "generate", "--qubits", "3", "--layers", "2", "--count", "3", "--seed", "2", "--out",
        &circuits,
    ])
    .unwrap();
    let out = path(&dir, "e.csv");
    let spec = format!("mnist:images={images_path};labels={labels_path};a=3;b=5;dim=3");
    run(&[
        "evaluate",
        "--circuits",
        &circuits,
        "--dataset",
        &spec,
        "--train-size",
        "20",
        "--test-size",
        "20",
        "--bo-budget",
        "2",
        "--seed",
        "2",
        "--out",
        &out,
    ])
    .unwrap();
    let records = qcmol_cli::records::parse_evaluated(&read(&dir, "e.csv")).unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| (0.0..=1.0).contains(&r.test_accuracy)));
}

#[test]
fn search_quadrant_filter_and_enrichment() {
    let dir = TempDir::new().unwrap();
    let (described, evaluated) = descriptor_fixture(&dir);
    let out = path(&dir, "sel.csv");
    let report = path(&dir, "enrich.txt");
    run(&[
        "search",
        "--described",
        &described,
        "--evaluated",
        &evaluated,
        "--quadrant",
        "high",
        "--seed",
        "1",
        "--out",
        &out,
        "--report-out",
        &report,
    ])
    .unwrap();
    // Thresholds default to batch medians; recover them from the manifest.
    let manifest = qcmol_cli::manifest::Manifest::read(&dir.path().join("sel.csv.manifest")).unwrap();
    let get = |key: &str| -> f64 {
        manifest
            .settings
            .iter()
            .find(|(k, _)| k == key)
            .unwrap()
            .1
            .parse()
            .unwrap()
    };
    let (t_min, t_max) = (get("r_min_threshold"), get("r_max_threshold"));
    let selected = read(&dir, "sel.csv");
    let mut rows = 0;
    for line in selected.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let r_min: f64 = fields[1].parse().unwrap();
        let r_max: f64 = fields[2].parse().unwrap();
        assert!(r_min > t_min && r_max > t_max, "row outside quadrant: {line}");
        rows += 1;
    }
    assert!(rows > 0);
    let enrich = read(&dir, "enrich.txt");
    assert!(enrich.contains("high group:"));
    assert!(enrich.contains("ratio "));
}

#[test]
fn search_top_rmin_selects_the_largest() {
    let dir = TempDir::new().unwrap();
    let (described, _) = descriptor_fixture(&dir);
    let out = path(&dir, "top.csv");
    run(&[
        "search", "--described", &described, "--top-rmin", "10", "--seed", "1", "--out", &out,
    ])
    .unwrap();
    let records = qcmol_cli::records::parse_described(&read(&dir, "d.csv")).unwrap();
    let mut all_rmin: Vec<f64> = records.iter().filter_map(|r| r.r_min).collect();
    all_rmin.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let cutoff = all_rmin[9];
    let selected = read(&dir, "top.csv");
    let rows: Vec<&str> = selected.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    for line in rows {
        let r_min: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(r_min >= cutoff);
    }
}

#[test]
fn search_subsamples_and_copies_circuits() {
    let dir = TempDir::new().unwrap();
    let (described, _) = descriptor_fixture(&dir);
    let circuits = path(&dir, "c.txt");
    let out = path(&dir, "sel.csv");
    let subset = path(&dir, "sel_circuits.txt");
    run(&[
        "search",
        "--described",
        &described,
        "--quadrant",
        "low",
        "--sample",
        "5",
        "--seed",
        "4",
        "--circuits",
        &circuits,
        "--circuits-out",
        &subset,
        "--out",
        &out,
    ])
    .unwrap();
    let selected = read(&dir, "sel.csv");
    assert_eq!(selected.lines().count(), 6); // header + 5
    let lines = read(&dir, "sel_circuits.txt");
    assert_eq!(lines.lines().count(), 5);
    let all: Vec<String> = read(&dir, "c.txt").lines().map(String::from).collect();
    for line in lines.lines() {
        assert!(all.contains(&line.to_string()));
    }
}

#[test]
fn search_fresh_mode_rejection_samples_into_quadrant() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "fresh.csv");
    let circuits_out = path(&dir, "fresh.txt");
    run(&[
        "search",
        "--fresh",
        "--quadrant",
        "high",
        "--sample",
        "6",
        "--r-min-threshold",
        "12",
        "--r-max-threshold",
        "100",
        "--qubits",
        "4",
        "--layers",
        "5",
        "--seed",
        "3",
        "--circuits-out",
        &circuits_out,
        "--out",
        &out,
    ])
    .unwrap();
    let selected = read(&dir, "fresh.csv");
    assert_eq!(selected.lines().count(), 7);
    for line in selected.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(fields[1].parse::<f64>().unwrap() > 12.0);
        assert!(fields[2].parse::<f64>().unwrap() > 100.0);
    }
    assert_eq!(read(&dir, "fresh.txt").lines().count(), 6);
}

#[test]
fn search_fresh_mode_respects_rejection_cap() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "fresh.csv");
    let circuits_out = path(&dir, "fresh.txt");
    let err = run(&[
        "search",
        "--fresh",
        "--quadrant",
        "high",
        "--sample",
        "5",
        "--r-min-threshold",
        "1e9",
        "--r-max-threshold",
        "1e9",
        "--qubits",
        "4",
        "--layers",
        "2",
        "--seed",
        "3",
        "--reject-cap",
        "50",
        "--circuits-out",
        &circuits_out,
        "--out",
        &out,
    ])
    .unwrap_err();
    assert!(err.to_string().contains("rejection cap"));
}

#[test]
fn report_emits_pca_and_kde_tables() {
    let dir = TempDir::new().unwrap();
    let (described, evaluated) = descriptor_fixture(&dir);
    let prefix = path(&dir, "rep");
    run(&[
        "report",
        "--evaluated",
        &evaluated,
        "--described",
        &described,
        "--out-prefix",
        &prefix,
        "--seed",
        "1",
        "--n-boot",
        "50",
        "--grid-points",
        "64",
    ])
    .unwrap();
    let pca = read(&dir, "rep_pca.csv");
    assert!(pca.starts_with("id,pc1,pc2,label\n"));
    assert!(pca.lines().count() > 1);
    let kde = read(&dir, "rep_kde.csv");
    assert!(kde.starts_with("class,x,density,lower,upper\n"));
    // Densities over the other descriptor are also available.
    let rmax_prefix = path(&dir, "rep_rmax");
    run(&[
        "report",
        "--evaluated",
        &evaluated,
        "--described",
        &described,
        "--out-prefix",
        &rmax_prefix,
        "--seed",
        "1",
        "--n-boot",
        "50",
        "--grid-points",
        "64",
        "--kde-over",
        "r-max",
    ])
    .unwrap();
    assert!(read(&dir, "rep_rmax_kde.csv").lines().count() > 1);
    // Rerun determinism.
    let first_pca = pca.clone();
    let first_kde = kde.clone();
    run(&[
        "rerun",
        "--manifest",
        &format!("{}.manifest", prefix),
    ])
    .unwrap();
    assert_eq!(first_pca, read(&dir, "rep_pca.csv"));
    assert_eq!(first_kde, read(&dir, "rep_kde.csv"));
}

#[test]
fn report_single_class_warns_but_emits() {
    let dir = TempDir::new().unwrap();
    // Hand-build tables where every circuit is performant except
    // underperforming entries are absent entirely.
    let described = path(&dir, "d.csv");
    let mut d = String::from("id,status,atoms,r_min,r_max,pc1,pc2\n");
    let mut e = String::from("id,n_rz,val_accuracy,test_accuracy,label,theta\n");
    for i in 0..8 {
        d.push_str(&format!("{i},ok,10,{},{},0.1,0.2\n", 5.0 + i as f64, 20.0 + i as f64));
        e.push_str(&format!("{i},2,0.9,0.9,performant,0.5;0.5\n"));
    }
    std::fs::write(&described, &d).unwrap();
    let evaluated = path(&dir, "e.csv");
    std::fs::write(&evaluated, &e).unwrap();
    let prefix = path(&dir, "one");
    let outcome = run(&[
        "report",
        "--evaluated",
        &evaluated,
        "--described",
        &described,
        "--out-prefix",
        &prefix,
        "--n-boot",
        "20",
        "--grid-points",
        "32",
    ])
    .unwrap();
    assert_eq!(outcome, Outcome::Partial);
    let kde = read(&dir, "one_kde.csv");
    assert!(kde.contains("performant,"));
    assert!(!kde.contains("underperforming,"));
}

#[test]
fn rerun_reproduces_generate_byte_exactly() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "c.txt");
    run(&[
        "generate", "--qubits", "5", "--layers", "4", "--count", "15", "--seed", "21", "--out",
        &out,
    ])
    .unwrap();
    let first = read(&dir, "c.txt");
    // Clobber the output, then rerun from the manifest alone.
    std::fs::write(&out, "garbage\n").unwrap();
    run(&["rerun", "--manifest", &format!("{out}.manifest")]).unwrap();
    assert_eq!(first, read(&dir, "c.txt"));
}

#[test]
fn config_errors_do_not_write_outputs() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "c.txt");
    assert!(run(&["generate", "--layers", "3", "--out", &out]).is_err());
    assert!(!Path::new(&out).exists());
    let missing: PathBuf = dir.path().join("nope.txt");
    assert!(run(&[
        "describe",
        "--circuits",
        missing.to_str().unwrap(),
        "--out",
        &out
    ])
    .is_err());
}
