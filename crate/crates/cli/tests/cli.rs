use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use psart_core::io::{decode_pgm16, parse_table, Grid};
use serde_json::Value;
use tempfile::TempDir;

fn psart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psart")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = psart(args);
    assert!(
        out.status.success(),
        "psart {args:?} failed:\n{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = psart(args);
    assert!(!out.status.success(), "psart {args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn table(path: &Path, header: &[&str]) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    parse_table(&text, &path.display().to_string(), header)
        .unwrap()
        .into_iter()
        .map(|r| r.values)
        .collect()
}

#[test]
fn mono_simulation_is_recovered_by_sart() {
    let tmp = TempDir::new().unwrap();
    let sim = tmp.path().join("sim");
    let rec = tmp.path().join("rec");
    ok(&["simulate", "--size", "32", "--mono-kev", "70", "--out", s(&sim)]);
    ok(&[
        "reconstruct",
        "--algorithm",
        "sart",
        "--size",
        "32",
        "--sinogram",
        s(&sim.join("line_integrals.csv")),
        "--reference",
        s(&sim.join("image.csv")),
        "--max-iterations",
        "20000",
        "--tol",
        "1e-12",
        "--out",
        s(&rec),
    ]);
    let report = &manifest(&rec)["report"];
    let rmse = report["error"]["rmse"].as_f64().unwrap();
    assert!(rmse < 1e-4, "rmse {rmse}");

    // every artifact loads back and matches its checksum entry
    let image = Grid::read(&rec.join("final.csv")).unwrap();
    assert_eq!((image.rows, image.cols), (32, 32));
    let (w, h, levels) = decode_pgm16(&fs::read(rec.join("final.pgm")).unwrap()).unwrap();
    assert_eq!((w, h, levels.len()), (32, 32, 1024));
    let residuals = table(&rec.join("residuals.csv"), &["iteration", "update_norm"]);
    assert_eq!(residuals.len(), 20000);
    let sino = Grid::read(&sim.join("intensity.csv")).unwrap();
    assert_eq!((sino.rows, sino.cols), (64, 32));
    let artifacts = manifest(&sim)["artifacts"].as_object().unwrap().clone();
    assert!(artifacts.contains_key("line_integrals.pgm") && artifacts.contains_key("image.csv"));
}

#[test]
fn fig2_trajectories_end_at_the_solution() {
    let tmp = TempDir::new().unwrap();
    let out = ok(&["repro", "fig2", "--out", s(tmp.path())]);
    assert!(out.contains("rho(T) = 0.9060278485"), "{out}");
    for name in ["art", "sart"] {
        let rows = table(&tmp.path().join(format!("{name}_trajectory.csv")), &["iteration", "t1", "t2"]);
        assert_eq!(rows[0][1..], [0.0, 0.0]);
        let last = rows.last().unwrap();
        assert!((last[1] - 0.1).abs() < 1e-6 && (last[2] - 0.16).abs() < 1e-6, "{name}: {last:?}");
        assert!(rows.len() <= 501);
    }
}

#[test]
fn fig4_separates_converging_and_cycling_objects() {
    let tmp = TempDir::new().unwrap();
    ok(&["repro", "fig4", "--out", s(tmp.path())]);
    let header = [
        "t1",
        "t2",
        "rho_jf",
        "psart_converged",
        "psart_period",
        "psart_iterations",
        "part_converged",
        "part_period",
        "part_iterations",
    ];
    let rows = table(&tmp.path().join("summary.csv"), &header);
    let t2: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(t2, [0.16, 0.24, 0.203, 0.204]);
    for row in &rows {
        let converges = row[2] < 1.0;
        assert_eq!(row[3] == 1.0, converges, "{row:?}");
        if !converges {
            assert_eq!(row[4], 2.0, "expected a two-cycle: {row:?}");
        }
    }
    let traj = table(&tmp.path().join("psart_t2_0.240.csv"), &["iteration", "t1", "t2"]);
    let n = traj.len();
    // the last iterate repeats the one two steps earlier
    assert!((traj[n - 1][1] - traj[n - 3][1]).abs() < 1e-9);
    assert!((traj[n - 1][1] - traj[n - 2][1]).abs() > 1e-6);
}

#[test]
fn fig5_map_agrees_with_spectral_radius() {
    let tmp = TempDir::new().unwrap();
    ok(&["repro", "fig5", "--out", s(tmp.path())]);
    let report = &manifest(tmp.path())["report"]["convergence_map"];
    assert!(report["agreement"].as_f64().unwrap() >= 0.95, "{report}");
    assert!(report["jump_ratio"].as_f64().unwrap() >= 5.0, "{report}");
    let rho = Grid::read(&tmp.path().join("spectral_radius.csv")).unwrap();
    let conv = Grid::read(&tmp.path().join("converged.csv")).unwrap();
    assert_eq!((rho.rows, rho.cols, conv.rows, conv.cols), (60, 60, 60, 60));
    assert!(conv.data.iter().all(|&v| v == 0.0 || v == 1.0));
    let ppm = fs::read(tmp.path().join("spectral_radius.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n60 60\n255\n"));
    assert_eq!(ppm.len(), b"P6\n60 60\n255\n".len() + 60 * 60 * 3);
}

#[test]
fn convmap_subcommand_honours_ranges() {
    let tmp = TempDir::new().unwrap();
    ok(&[
        "convmap", "--grid", "5", "--t1-min", "0.05", "--t1-max", "0.15", "--t2-min", "0.15", "--t2-max", "0.25",
        "--out", s(tmp.path()),
    ]);
    let nodes = table(&tmp.path().join("nodes.csv"), &["index", "t1", "t2"]);
    assert_eq!(nodes.len(), 5);
    assert!((nodes[0][1] - 0.05).abs() < 1e-12 && (nodes[4][2] - 0.25).abs() < 1e-12);
    let err = fails(&["convmap", "--t1-min", "0.3", "--t1-max", "0.1", "--out", s(tmp.path())]);
    assert!(err.contains("t1 range"), "{err}");
}

#[test]
fn specrad_matches_two_pixel_closed_form() {
    let tmp = TempDir::new().unwrap();
    let out = ok(&["specrad", "--operator", "psart-jf", "--phantom", "two-pixel", "--power-tol", "1e-12", "--out", s(tmp.path())]);
    assert!(out.contains("exact spectral radius = 0.8869005"), "{out}");
    let report = &manifest(tmp.path())["report"]["power_iteration"];
    assert!(report["converged"].as_bool().unwrap());
    assert!((report["eigenvalue"].as_f64().unwrap().abs() - 0.886_900_515).abs() < 1e-6, "{report}");

    let out = ok(&["specrad", "--operator", "sart-t", "--phantom", "two-pixel", "--power-tol", "1e-12", "--out", s(tmp.path())]);
    assert!(out.contains("exact spectral radius = 0.9060278"), "{out}");
}

#[test]
fn table1_radii_are_close_for_a_small_phantom() {
    let tmp = TempDir::new().unwrap();
    ok(&["repro", "table1", "--size", "32", "--views", "60", "--out", s(tmp.path())]);
    let header = ["rho_t", "iterations_t", "residual_t", "rho_jf", "iterations_jf", "residual_jf", "difference"];
    let row = &table(&tmp.path().join("table1.csv"), &header)[0];
    assert!(row[0] > 0.9 && row[0] < 1.0 && row[3] > 0.9 && row[3] < 1.0, "{row:?}");
    assert!(row[6].abs() < 5e-3, "{row:?}");
}

#[test]
fn verify_lemmas_reports_pass() {
    let tmp = TempDir::new().unwrap();
    let out = ok(&["verify-lemmas", "--trials", "40", "--seed", "3", "--out", s(tmp.path())]);
    assert_eq!(out.matches("PASS").count(), 3, "{out}");
    let header = [
        "trial",
        "m",
        "n",
        "rank_deficient",
        "a1",
        "a2",
        "a3",
        "max_row_sum_error",
        "max_imag",
        "min_real",
        "rho_t",
    ];
    let rows = table(&tmp.path().join("lemmas.csv"), &header);
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r[4] == 1.0 && r[5] == 1.0 && r[6] == 1.0 && r[10] < 1.0));
    assert!(manifest(tmp.path())["report"]["all_passed"].as_bool().unwrap());
}

#[test]
fn phantom_outputs_round_trip() {
    let tmp = TempDir::new().unwrap();
    ok(&["phantom", "--size", "64", "--out", s(tmp.path())]);
    let grid = Grid::read(&tmp.path().join("phantom.csv")).unwrap();
    assert_eq!((grid.rows, grid.cols), (64, 64));
    assert_eq!(grid.data.iter().cloned().fold(0.0, f64::max), 0.4948);
    let (w, h, levels) = decode_pgm16(&fs::read(tmp.path().join("phantom.pgm")).unwrap()).unwrap();
    assert_eq!((w, h), (64, 64));
    assert_eq!(levels.iter().max(), Some(&65535));

    let two = tmp.path().join("two");
    ok(&["phantom", "--kind", "two-pixel", "--t2", "0.24", "--out", s(&two)]);
    assert_eq!(Grid::read(&two.join("phantom.csv")).unwrap().data, [0.1, 0.24]);
    assert_eq!(Grid::read(&two.join("matrix.csv")).unwrap().data, [1.0, 1.0, 0.28, 1.13]);
}

fn poly_pipeline(root: &Path, tag: &str, threads: Option<&str>) -> PathBuf {
    let sim = root.join("sim");
    if !sim.exists() {
        ok(&["simulate", "--size", "16", "--views", "24", "--out", s(&sim)]);
    }
    let rec = root.join(tag);
    let intensity = sim.join("intensity.csv");
    let mut args = vec![
        "reconstruct",
        "--algorithm",
        "psart",
        "--size",
        "16",
        "--views",
        "24",
        "--sinogram",
        s(&intensity),
        "--max-iterations",
        "50",
        "--out",
        s(&rec),
    ];
    if let Some(t) = threads {
        args.extend(["--threads", t]);
    }
    ok(&args);
    rec
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let a = poly_pipeline(tmp.path(), "a", None);
    let b = poly_pipeline(tmp.path(), "b", None);
    let c = poly_pipeline(tmp.path(), "c", Some("1"));
    for name in ["final.csv", "final.pgm", "residuals.csv", "run.json"] {
        let first = fs::read(a.join(name)).unwrap();
        assert_eq!(first, fs::read(b.join(name)).unwrap(), "{name}");
        if name != "run.json" {
            assert_eq!(first, fs::read(c.join(name)).unwrap(), "{name} with one thread");
        }
    }
    let m = manifest(&a);
    for (name, digest) in m["artifacts"].as_object().unwrap() {
        let bytes = fs::read(a.join(name)).unwrap();
        use sha2::Digest;
        assert_eq!(digest.as_str().unwrap(), hex::encode(sha2::Sha256::digest(&bytes)), "{name}");
    }
}

#[test]
fn two_pixel_reconstruction_writes_a_trajectory() {
    let tmp = TempDir::new().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--phantom", "two-pixel", "--t2", "0.203", "--out", s(&sim)]);
    let rec = tmp.path().join("rec");
    ok(&[
        "reconstruct",
        "--algorithm",
        "psart",
        "--matrix",
        s(&sim.join("matrix.csv")),
        "--sinogram",
        s(&sim.join("intensity.csv")),
        "--reference",
        s(&sim.join("image.csv")),
        "--max-iterations",
        "5000",
        "--out",
        s(&rec),
    ]);
    let report = &manifest(&rec)["report"];
    assert_eq!(report["status"], "converged");
    assert!(report["error"]["max_abs"].as_f64().unwrap() < 1e-6);
    let traj = table(&rec.join("trajectory.csv"), &["iteration", "t1", "t2"]);
    assert_eq!(traj.len(), report["iterations"].as_u64().unwrap() as usize + 1);
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"size": 40, "kind": "head"}"#).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["phantom", "--config", s(&cfg), "--out", s(&a)]);
    assert_eq!(Grid::read(&tmp.path().join("a/phantom.csv")).unwrap().rows, 40);
    ok(&["phantom", "--config", s(&cfg), "--size", "20", "--out", s(&b)]);
    assert_eq!(Grid::read(&tmp.path().join("b/phantom.csv")).unwrap().rows, 20);
    assert_eq!(manifest(&tmp.path().join("b"))["config"]["size"], 20);

    fs::write(&cfg, r#"{"geometry": {"size": "large"}}"#).unwrap();
    let err = fails(&["simulate", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert!(err.contains("geometry.size"), "{err}");
    fs::write(&cfg, r#"{"geometry": {"sizes": 3}}"#).unwrap();
    let err = fails(&["simulate", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert!(err.contains("geometry.sizes"), "{err}");
}

#[test]
fn diagnostics_name_the_offending_field() {
    let tmp = TempDir::new().unwrap();
    let out = s(tmp.path());
    assert!(fails(&["reconstruct", "--sinogram", "x.csv", "--out", out]).contains("algorithm"));
    let err = fails(&["reconstruct", "--algorithm", "sart", "--sinogram", "/nonexistent.csv", "--out", out]);
    assert!(err.contains("sinogram"), "{err}");
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--size", "16", "--out", s(&sim)]);
    let sino = tmp.path().join("sim/line_integrals.csv");
    let err = fails(&["reconstruct", "--algorithm", "sart", "--size", "20", "--sinogram", s(&sino), "--out", out]);
    assert!(err.contains("sinogram: holds"), "{err}");
    assert!(fails(&["simulate", "--size", "8", "--out", out]).contains("size"));
    assert!(fails(&["simulate", "--pixel-pitch=-1", "--out", out]).contains("pixel-pitch"));
    assert!(fails(&["simulate", "--mono-kev", "70", "--spectrum", "s.csv", "--out", out]).contains("mono-kev"));
    assert!(fails(&["specrad", "--out", out]).contains("operator"));
    assert!(fails(&["verify-lemmas", "--max-n", "9", "--out", out]).contains("max-n"));
    assert!(fails(&["repro", "fig2", "--size", "32", "--out", out]).contains("size"));
    assert!(fails(&["phantom", "--threads", "0", "--out", out]).contains("threads"));
}
