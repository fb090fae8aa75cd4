//! Command-line contract: outputs, exit codes, manifests and determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

use qgfem::cli::{run, EXIT_BAND, EXIT_OK, EXIT_SOLVER, EXIT_USAGE};

fn qg(args: &[&str]) -> i32 {
    run(std::iter::once("qgfem").chain(args.iter().copied()))
}

/// Separate process, so faer's process-wide parallelism setting stays
/// private to the run.
fn qg_process(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_qgfem"))
        .args(args)
        .status()
        .unwrap()
        .code()
        .unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn manifest_value(dir: &Path, key: &str) -> String {
    let text = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("{key} missing from manifest"))
}

#[test]
fn convergence_writes_table_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("conv");
    assert_eq!(qg(&["convergence", "--levels", "4,8", "--out", &out_arg(&out)]), EXIT_OK);
    let header = fs::read_to_string(out.join("eoc.csv")).unwrap();
    assert!(header.starts_with("h,e_l2,e_h1,e_h2,eoc_l2,eoc_h1,eoc_h2\n"));
    let rows = csv_rows(&out.join("eoc.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows[0][4].is_empty());
    let eoc_l2: f64 = rows[1][4].parse().unwrap();
    assert!((eoc_l2 - 4.0).abs() < 0.25);
    assert_eq!(manifest_value(&out, "levels"), "4,8");
    assert_eq!(manifest_value(&out, "command"), "convergence");
}

#[test]
fn single_level_has_empty_eoc_and_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(qg(&["convergence", "--levels", "4", "--out", &out_arg(tmp.path())]), EXIT_OK);
    let rows = csv_rows(&tmp.path().join("eoc.csv"));
    assert_eq!(rows.len(), 1);
    assert!(rows[0][4..].iter().all(String::is_empty));
}

#[test]
fn band_violation_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let code = qg(&["convergence", "--levels", "4,8", "--band", "0.001", "--out", &out_arg(tmp.path())]);
    assert_eq!(code, EXIT_BAND);
}

#[test]
fn bad_input_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out_arg(tmp.path());
    assert_eq!(qg(&["convergence", "--levels", "3,8", "--out", &o]), EXIT_USAGE);
    assert_eq!(qg(&["decay", "--nu=-1", "--out", &o]), EXIT_USAGE);
    assert_eq!(qg(&["no-such-command"]), EXIT_USAGE);
    assert_eq!(qg(&["custom", "--forcing", "storm", "--out", &o]), EXIT_USAGE);
}

#[test]
fn newton_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let code = qg(&[
        "custom",
        "--initial",
        "sin-squared",
        "--nx",
        "4",
        "--ny",
        "4",
        "--t-end",
        "0.01",
        "--newton-max-iter",
        "1",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(code, EXIT_SOLVER);
    assert!(tmp.path().join("manifest.txt").exists());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# small run\nnx = 8\nny = 8\nt-end = 0.004\ndt = 0.002\nnu = 0.5\n").unwrap();
    let out = tmp.path().join("o");
    let code = qg(&[
        "custom",
        "--config",
        cfg.to_str().unwrap(),
        "--nx",
        "4",
        "--initial",
        "sin-squared",
        "--out",
        &out_arg(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(manifest_value(&out, "nx"), "4");
    assert_eq!(manifest_value(&out, "ny"), "8");
    assert_eq!(manifest_value(&out, "nu"), "0.5");
    assert_eq!(manifest_value(&out, "t-end"), "0.004");
    assert_eq!(csv_rows(&out.join("energy.csv")).len(), 3);
}

#[test]
fn decay_sweep_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let code = qg(&[
        "decay",
        "--nx",
        "4",
        "--ny",
        "8",
        "--t-end",
        "0.01",
        "--nu-sweep",
        "1,0.1",
        "--mu-sweep",
        "10",
        "--out",
        &out_arg(out),
    ]);
    assert_eq!(code, EXIT_OK);
    let rates = csv_rows(&out.join("decay_rates.csv"));
    assert_eq!(rates.len(), 2);
    let r: Vec<f64> = rates.iter().map(|row| row[2].parse().unwrap()).collect();
    assert!(r[0] < r[1] && r[1] < 0.0, "{r:?}");
    for row in &rates {
        assert_eq!(row[4], "ok");
    }
    for member in ["nu1_mu10", "nu0.1_mu10"] {
        let dir = out.join(member);
        assert!(dir.join("manifest.txt").exists());
        let hist = csv_rows(&dir.join("energy.csv"));
        assert_eq!(hist.len(), 11);
        assert_eq!(hist[0].len(), 3);
    }
}

#[test]
fn attractor_snapshots_start_from_rest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    let code = qg(&[
        "attractor",
        "--nx",
        "4",
        "--ny",
        "8",
        "--nu",
        "1",
        "--dt",
        "0.1",
        "--t-end",
        "2",
        "--out",
        &out_arg(out),
    ]);
    assert_eq!(code, EXIT_OK);
    let dir = out.join("nu1_mu100");
    for t in ["0", "1", "2"] {
        assert!(dir.join(format!("snapshot_t{t}.vtk")).exists());
        assert!(dir.join(format!("snapshot_t{t}.csv")).exists());
    }
    assert!(!dir.join("snapshot_t3.csv").exists());
    let first = csv_rows(&dir.join("snapshot_t0.csv"));
    assert_eq!(first.len(), 5 * 9);
    assert!(first.iter().all(|r| r[2..].iter().all(|v| v.parse::<f64>().unwrap() == 0.0)));
    let later = csv_rows(&dir.join("snapshot_t1.csv"));
    assert!(later.iter().any(|r| r[2].parse::<f64>().unwrap() != 0.0));
    let summary = csv_rows(&out.join("attractor_summary.csv"));
    assert_eq!(summary.len(), 1);
    assert_eq!(summary[0][8], "ok");
}

#[test]
fn attractor_time_step_follows_viscosity_and_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let args = ["attractor", "--nx", "4", "--ny", "8", "--t-end", "0.02", "--nu-sweep", "1,0.001"];
    let a_s = out_arg(&a);
    let mut first = args.to_vec();
    first.extend(["--out", &a_s]);
    assert_eq!(qg(&first), EXIT_OK);
    assert_eq!(manifest_value(&a, "member-dt"), "0.01,0.001");
    assert_eq!(manifest_value(&a.join("nu1_mu100"), "dt"), "0.01");
    assert_eq!(manifest_value(&a.join("nu0.001_mu100"), "dt"), "0.001");
    assert_eq!(csv_rows(&a.join("nu1_mu100/energy.csv")).len(), 3);
    assert_eq!(csv_rows(&a.join("nu0.001_mu100/energy.csv")).len(), 21);

    let b = tmp.path().join("b");
    let manifest = a.join("manifest.txt");
    let code = qg(&["attractor", "--config", manifest.to_str().unwrap(), "--out", &out_arg(&b)]);
    assert_eq!(code, EXIT_OK);
    for f in ["attractor_summary.csv", "nu0.001_mu100/energy.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn manifest_reruns_reproduce_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = ["convergence", "--levels", "4,8", "--t-end", "0.01", "--threads", "1"];
    let mut first: Vec<&str> = args.to_vec();
    let a_s = out_arg(&a);
    first.extend(["--out", &a_s]);
    assert_eq!(qg_process(&first), EXIT_OK);
    let manifest = a.join("manifest.txt");
    let b_s = out_arg(&b);
    assert_eq!(
        qg_process(&["convergence", "--config", manifest.to_str().unwrap(), "--out", &b_s]),
        EXIT_OK
    );
    assert_eq!(fs::read(a.join("eoc.csv")).unwrap(), fs::read(b.join("eoc.csv")).unwrap());
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(threads);
        let o = out_arg(&out);
        let code = qg_process(&[
            "custom",
            "--forcing",
            "wind",
            "--initial",
            "sin-squared",
            "--nx",
            "6",
            "--ny",
            "6",
            "--t-end",
            "0.02",
            "--threads",
            threads,
            "--out",
            &o,
        ]);
        assert_eq!(code, EXIT_OK);
        outputs.push(csv_rows(&out.join("energy.csv")));
    }
    for (r1, r3) in outputs[0].iter().zip(&outputs[1]) {
        for (a, b) in r1.iter().zip(r3) {
            let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300), "{a} vs {b}");
        }
    }
}

#[test]
fn binary_uses_output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_qgfem"))
        .args(["convergence", "--levels", "4", "--t-end", "0.002"])
        .env("QGFEM_OUT", tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    assert!(tmp.path().join("manifest.txt").exists());
    assert!(tmp.path().join("eoc.csv").exists());

    let status = Command::new(env!("CARGO_BIN_EXE_qgfem"))
        .args(["convergence", "--levels", "4", "--band", "x"])
        .env("QGFEM_OUT", tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_USAGE));
}
