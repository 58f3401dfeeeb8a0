//! End-to-end runs of the `photon-povm` binary: exit codes, file headers,
//! and the documented failure paths.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_photon-povm"))
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

const SMALL_GRID: &str = "\
grid.mx_min = -1
grid.mx_max = 1
grid.my_min = -1
grid.my_max = 1
grid.mz_min = -2
grid.mz_max = 2
grid.paraxial_limit = 0.05
pixels.time_bins = 4
";

#[test]
fn povm_check_default_passes_with_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.cfg", SMALL_GRID);
    let out_dir = dir.path().join("out");
    let output = run(&[
        "povm-check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));
    let completeness = fs::read_to_string(out_dir.join("completeness.csv")).unwrap();
    assert!(completeness.starts_with("# photon-povm"));
    assert!(completeness.contains("# config_hash = "));
    let residual: f64 = completeness
        .lines()
        .find(|l| l.starts_with("first_order,"))
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual < 1e-10);
    assert!(out_dir.join("elements.csv").exists());
    // the full matrix export of one element: header naming pixel/window,
    // then (row, col, re, im) rows
    let matrix = fs::read_to_string(out_dir.join("element_00_bin0.csv")).unwrap();
    assert!(matrix.contains("pixel=(0,0)"));
    assert!(matrix.contains("row,col,re,im"));
}

#[test]
fn nonpositive_gamma_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.cfg", "detector.gamma = 0\n");
    let output = run(&["povm-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("must be positive"));
}

#[test]
fn zero_pixel_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.cfg", "pixels.nx = 0\n");
    let output = run(&["povm-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_key_is_a_config_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.cfg", "grid.k0 = 10\ngrid.oops = 1\n");
    let output = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let err = stderr(&output);
    assert!(err.contains("line 2") && err.contains("grid.oops"), "{err}");
}

fn fitted_taus(out_dir: &Path) -> Vec<f64> {
    fs::read_to_string(out_dir.join("kernel_compare.csv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("wk_over_k0"))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn kernel_compare_passes_and_tau_doubles_with_n_index() {
    let dir = tempfile::tempdir().unwrap();
    let base = "detector.gamma = 0.2\nrun.bandwidths = 0.04,0.02,0.01,0.005\n";
    let cfg1 = write_cfg(dir.path(), "n1.cfg", base);
    let cfg2 = write_cfg(
        dir.path(),
        "n2.cfg",
        &format!("{base}detector.n_index = 2\n"),
    );
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    let o1 = run(&[
        "kernel-compare",
        "--config",
        cfg1.to_str().unwrap(),
        "--out",
        out1.to_str().unwrap(),
    ]);
    let o2 = run(&[
        "kernel-compare",
        "--config",
        cfg2.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(o1.status.code(), Some(0), "stderr: {}", stderr(&o1));
    assert_eq!(o2.status.code(), Some(0), "stderr: {}", stderr(&o2));
    let t1 = fitted_taus(&out1);
    let t2 = fitted_taus(&out2);
    assert_eq!(t1.len(), 4);
    for (a, b) in t1.iter().zip(&t2) {
        assert!((b / a - 2.0).abs() < 0.02, "tau {a} vs {b}");
    }
}

#[test]
fn kernel_compare_needs_two_bandwidths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.cfg", "run.bandwidths = 0.01\n");
    let output = run(&["kernel-compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn simulate_emits_histogram_and_passes_tv_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "run.cfg",
        &format!("{SMALL_GRID}pixels.nx = 2\npixels.ny = 2\nrun.trials = 100000\n"),
    );
    let out_dir = dir.path().join("out");
    let output = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));
    assert!(stdout(&output).contains("result: pass"));
    let histogram = fs::read_to_string(out_dir.join("histogram.csv")).unwrap();
    assert!(histogram.contains("pixel_x,pixel_y,time_bin,count,exact_probability"));
    let total: u64 = histogram
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("pixel_x"))
        .map(|l| l.split(',').nth(3).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 100_000);
}

#[test]
fn simulate_zero_trials_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.cfg", "run.trials = 0\n");
    let output = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    // and the flag override is validated the same way
    let cfg2 = write_cfg(dir.path(), "run2.cfg", "");
    let output2 = run(&[
        "simulate",
        "--config",
        cfg2.to_str().unwrap(),
        "--trials",
        "0",
    ]);
    assert_eq!(output2.status.code(), Some(2));
}

const COINCIDENCE_CFG: &str = "\
grid.mx_min = -1
grid.mx_max = 1
grid.my_min = -1
grid.my_max = 1
grid.mz_min = 0
grid.mz_max = 0
grid.paraxial_limit = 0.05
pixels.nx = 2
pixels.ny = 2
pixels.time_bins = 1
pulse.family = correlated
pulse.pump_width = 0.35
pulse.polarization = typeII
run.trials = 20000
run.quad_order = 8
";

#[test]
fn coincidence_concentrates_on_the_diagonal_and_warns_on_double_hits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.cfg", COINCIDENCE_CFG);
    let out_dir = dir.path().join("out");
    let output = run(&[
        "coincidence",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));
    let pairs = fs::read_to_string(out_dir.join("pair_probabilities.csv")).unwrap();
    let mut diagonal = 0.0;
    let mut off = 0.0;
    for line in pairs
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("pixel_x"))
    {
        let f: Vec<&str> = line.split(',').collect();
        let p: f64 = f[4].parse().unwrap();
        if f[0] == f[2] && f[1] == f[3] {
            diagonal += p;
        } else {
            off += p;
        }
    }
    assert!((diagonal + off - 1.0).abs() < 1e-4);
    assert!(diagonal > off, "diagonal {diagonal} vs off {off}");
    // same-pixel probability is large here, so the model warning must fire
    assert!(stdout(&output).contains("warning: same-pixel double-detection"));
    assert!(out_dir.join("coincidence_counts.csv").exists());
}

#[test]
fn coincidence_low_quadrature_order_fails_on_broadband_states() {
    let broadband = "\
grid.mx_min = 0
grid.mx_max = 0
grid.my_min = 0
grid.my_max = 0
grid.mz_min = -4
grid.mz_max = 4
pulse.family = correlated
pulse.pump_width = 0.6
pixels.nx = 1
pixels.ny = 1
pixels.time_bins = 1
run.trials = 10
";
    let dir = tempfile::tempdir().unwrap();
    let cfg_bad = write_cfg(
        dir.path(),
        "bad.cfg",
        &format!("{broadband}run.quad_order = 4\n"),
    );
    let out = run(&[
        "coincidence",
        "--config",
        cfg_bad.to_str().unwrap(),
        "--out",
        dir.path().join("o1").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("quadrature not converged"));

    let cfg_good = write_cfg(
        dir.path(),
        "good.cfg",
        &format!("{broadband}run.quad_order = 32\n"),
    );
    let out2 = run(&[
        "coincidence",
        "--config",
        cfg_good.to_str().unwrap(),
        "--out",
        dir.path().join("o2").to_str().unwrap(),
    ]);
    assert_eq!(out2.status.code(), Some(0), "stderr: {}", stderr(&out2));
}

#[test]
fn wavefunction_dump_has_lattice_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "run.cfg",
        &format!("{SMALL_GRID}run.samples_x = 3\nrun.samples_y = 3\nrun.samples_t = 5\n"),
    );
    let out_dir = dir.path().join("out");
    let output = run(&[
        "wavefunction",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    let csv = fs::read_to_string(out_dir.join("wavefunction.csv")).unwrap();
    let rows = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("x,"))
        .count();
    assert_eq!(rows, 3 * 3 * 5);
}

#[test]
fn reruns_are_byte_identical_and_seed_flag_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "run.cfg",
        &format!("{SMALL_GRID}pixels.nx = 2\npixels.ny = 2\nrun.trials = 100000\n"),
    );
    let run_simulate = |out: &Path, seed: Option<&str>| {
        let out_s = out.to_str().unwrap().to_owned();
        let mut args = vec![
            "simulate".to_owned(),
            "--config".to_owned(),
            cfg.to_str().unwrap().to_owned(),
            "--out".to_owned(),
            out_s,
        ];
        if let Some(s) = seed {
            args.push("--seed".to_owned());
            args.push(s.to_owned());
        }
        let output = bin().args(&args).output().unwrap();
        assert_eq!(output.status.code(), Some(0));
    };
    let (o1, o2, o3) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    run_simulate(&o1, None);
    run_simulate(&o2, None);
    run_simulate(&o3, Some("777"));
    for name in ["detections.csv", "histogram.csv"] {
        let a = fs::read(o1.join(name)).unwrap();
        let b = fs::read(o2.join(name)).unwrap();
        let c = fs::read(o3.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert_ne!(a, c, "{name} should change with the seed");
    }
}

#[test]
fn thread_cap_env_var_is_honored_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "run.cfg", SMALL_GRID);
    let out = bin()
        .args(["povm-check", "--config", cfg.to_str().unwrap()])
        .arg("--out")
        .arg(dir.path().join("out"))
        .env("PHOTON_POVM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let bad = bin()
        .args(["povm-check", "--config", cfg.to_str().unwrap()])
        .env("PHOTON_POVM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn shipped_example_configs_run_clean() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("configs");
    let dir = tempfile::tempdir().unwrap();
    for (name, subcommand) in [
        ("povm_check.cfg", "povm-check"),
        ("kernel_compare.cfg", "kernel-compare"),
        ("simulate.cfg", "simulate"),
        ("coincidence.cfg", "coincidence"),
        ("wavefunction.cfg", "wavefunction"),
    ] {
        let cfg = configs.join(name);
        let out_dir = dir.path().join(name);
        let output = run(&[
            subcommand,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(
            output.status.code(),
            Some(0),
            "{name}: stderr {}",
            stderr(&output)
        );
    }
}
