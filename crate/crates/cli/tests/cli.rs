use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_topofront");

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .env_remove("TOPOFRONT_CACHE")
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn volume_fraction_out_of_range_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--grid", "12x4", "optimize", "--vf", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("volume fraction"));
}

#[test]
fn solid_design_reports_full_density_compliance() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--grid", "30x10", "optimize", "--vf", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("out/design_mbb_vf1.json"));
    let c = s["compliance_p"].as_f64().unwrap();
    // solid 30x10 half beam, from an independent dense numpy solve
    assert!((c / 123.06935117426889 - 1.0).abs() < 1e-6, "{c}");
    assert_eq!(s["compliance_p1"].as_f64().unwrap(), c);
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["--grid", "16x6", "--vf-min", "0.2", "--points", "5", "--no-cache", "pareto", "--strategy", "multistart"];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(a.path(), &args).status.success());
    assert!(run(b.path(), &["--threads", "1"].iter().chain(&args).copied().collect::<Vec<_>>()).status.success());
    for f in ["front_mbb_baseline.csv", "front_mbb_multistart.csv", "front_mbb.svg"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    assert!(!a.path().join("out/cache").exists());
}

#[test]
fn warm_cache_reproduces_the_cold_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--grid", "16x6", "--vf-min", "0.2", "--points", "4", "--cache-dir", "c", "pareto", "--strategy", "baseline"];
    assert!(run(dir.path(), &args).status.success());
    let cold = std::fs::read(dir.path().join("out/front_mbb_baseline.csv")).unwrap();
    let entries = std::fs::read_dir(dir.path().join("c")).unwrap().count();
    assert!(entries > 0);
    std::fs::remove_file(dir.path().join("out/front_mbb_baseline.csv")).unwrap();
    assert!(run(dir.path(), &args).status.success());
    assert_eq!(std::fs::read(dir.path().join("out/front_mbb_baseline.csv")).unwrap(), cold);
}

#[test]
fn empty_material_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("none.csv"), "name,E_GPa,rho_kgm3\n").unwrap();
    let load = data("beam_load.json");
    let out = run(dir.path(), &["--grid", "12x12", "select", "--materials", "none.csv", "--load", &load]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn empty_front_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("front.csv"), "").unwrap();
    let out = run(dir.path(), &["er", "--front", "front.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out/er_front_raw.csv").exists());
}

#[test]
fn unknown_preset_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--problem", "cantilever", "fit"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn er_consumes_a_pareto_front() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(dir.path(), &["--grid", "16x6", "--vf-min", "0.1", "--points", "8", "pareto"]).status.success());
    let out = run(dir.path(), &["er", "--front", "out/front_mbb_refine.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let filtered = std::fs::read_to_string(dir.path().join("out/er_front_mbb_refine_filtered.csv")).unwrap();
    assert_eq!(filtered.lines().count(), 9);
}

#[test]
fn selection_writes_report_and_trail() {
    let dir = tempfile::tempdir().unwrap();
    let (mats, load) = (data("metals.csv"), data("beam_load.json"));
    let out = run(
        dir.path(),
        &["--problem", "mbb-deep", "--grid", "12x12", "select", "--materials", &mats, "--load", &load],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("out/selection.json"));
    let winner = report["winner"].as_str().unwrap();
    assert!(["Ti-6Al-4V", "Inconel 713"].contains(&winner), "{winner}");
    let trail = std::fs::read_to_string(dir.path().join("out/selection_trail.txt")).unwrap();
    assert!(trail.contains("Stainless AISI 347"));
    assert!(String::from_utf8_lossy(&out.stdout).contains(winner));
    assert!(dir.path().join("out/model_mbb-deep.json").exists());
    assert!(dir.path().join("out/ashby.svg").exists());
}
