use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hpfrac::experiments::read_rows;

fn hpfrac(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpfrac"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hpfrac(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(hpfrac(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(hpfrac(dir.path(), &["solve", "--jobs", "many"]).status.code(), Some(2));
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad_s.toml", "s = 1.5\n");
    write(dir.path(), "unknown.toml", "study = \"smooth\"\nlayerz = [2]\n");
    write(dir.path(), "sector.toml", "study = \"singperturb\"\nzeta_re = -1.0\nzeta_im = 0.0\n");
    for name in ["bad_s.toml", "unknown.toml", "sector.toml", "missing.toml"] {
        let out = hpfrac(dir.path(), &["convergence", "--config", name]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = hpfrac(dir.path(), &["solve", "--config", "bad_s.toml"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains('s'));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = hpfrac(dir.path(), &["selftest", "--seed", "11", "--jobs", "2"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.matches("[PASS]").count(), 5, "{text}");
}

#[test]
fn convergence_writes_one_csv_per_method() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "smooth.toml",
        "study = \"smooth\"\nlayers = [2, 3]\nmethods = [\"dg\", \"euler_uniform\"]\neuler_steps = [4, 8]\neuler_layers = 3\neuler_degree = 4\n",
    );
    let out = hpfrac(dir.path(), &["convergence", "--config", "smooth.toml", "--out", "res.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for (file, sweep) in [("res_dg.csv", [2.0, 3.0]), ("res_euler_uniform.csv", [4.0, 8.0])] {
        let rows = read_rows(fs::File::open(dir.path().join(file)).unwrap()).unwrap();
        assert_eq!(rows.iter().map(|r| r.sweep).collect::<Vec<_>>(), sweep);
        assert!(rows.iter().all(|r| r.err_st_l2 > 0.0 && r.err_st_l2.is_finite()));
    }
}

#[test]
fn singperturb_convergence_single_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sp.toml", "study = \"singperturb\"\np_values = [2, 4, 6]\nreference_degree = 12\n");
    let out = hpfrac(dir.path(), &["convergence", "--config", "sp.toml", "--out", "sp.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_rows(fs::File::open(dir.path().join("sp.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1].err_energy < w[0].err_energy));
}

#[test]
fn solve_writes_row_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "one.toml", "study = \"smooth\"\nsolve_layers = 3\nsamples = 5\n");
    let out = hpfrac(dir.path(), &["solve", "--config", "one.toml", "--out", "run.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_rows(fs::File::open(dir.path().join("run.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].err_st_l2 < 0.2);
    let samples = fs::read_to_string(dir.path().join("run_samples.csv")).unwrap();
    let lines: Vec<&str> = samples.lines().collect();
    assert_eq!(lines[0], "t,x,u");
    assert_eq!((lines.len() - 1) % 5, 0);
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert_eq!(last[1], 1.0);
    assert!(last[2].abs() < 1e-12);
}
