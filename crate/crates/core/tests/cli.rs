//! End-to-end tests of the `weakmeter` binary: subcommands, overrides,
//! degree conversion, output redirection, and exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_weakmeter");

const BASE_CONFIG: &str = "\
[geometry]
theta = 1.5707963267948966
gamma = 1.0
phi = 0.7853981633974483

[probe]
delta_P = 1.0
delta_p = 1.0
p_phi = inf

[window]
kind = rectangular
T = 1.0

[coupling]
lambda = 0.01
";

fn write_config(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

#[test]
fn sweep_emits_expected_table() {
    let config = write_config(
        "sweep.ini",
        &format!("{BASE_CONFIG}\n[sweep]\nvariable = gamma\nstart = 0.0\nstop = 3.0\nsteps = 11\n"),
    );
    let out = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "value,exact_avg,approx_avg,re_aw,im_aw,var_exact,var_approx,post_prob,flag"
    );
    assert_eq!(lines.count(), 11);
    let second: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(second[0].parse::<f64>().unwrap(), 0.0);
    // gamma = 0 postselects the preselected state: <A> = cos(theta) ~ 0
    assert!(second[1].parse::<f64>().unwrap().abs() < 1e-9);
}

#[test]
fn set_overrides_config_values() {
    let config = write_config("override.ini", BASE_CONFIG);
    let base = run(&["sweep", "--config", config.to_str().unwrap()]);
    let bumped = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--set",
        "coupling.lambda=0.2",
    ]);
    assert!(base.status.success() && bumped.status.success());
    assert_ne!(stdout(&base), stdout(&bumped));
}

#[test]
fn degrees_flag_converts_angles() {
    let radians = write_config("angles_rad.ini", BASE_CONFIG);
    let degrees = write_config(
        "angles_deg.ini",
        &BASE_CONFIG
            .replace("theta = 1.5707963267948966", "theta = 90")
            .replace("gamma = 1.0", "gamma = 57.29577951308232")
            .replace("phi = 0.7853981633974483", "phi = 45"),
    );
    let a = run(&["sweep", "--config", radians.to_str().unwrap()]);
    let b = run(&["sweep", "--config", degrees.to_str().unwrap(), "--degrees"]);
    assert!(a.status.success() && b.status.success());
    let row_a: Vec<f64> = parse_first_row(&stdout(&a));
    let row_b: Vec<f64> = parse_first_row(&stdout(&b));
    for (x, y) in row_a.iter().zip(&row_b) {
        assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
    }
}

fn parse_first_row(text: &str) -> Vec<f64> {
    text.lines()
        .nth(1)
        .unwrap()
        .split(',')
        .filter_map(|f| f.parse().ok())
        .collect()
}

#[test]
fn compare_appends_error_columns() {
    let config = write_config("compare.ini", BASE_CONFIG);
    let out = run(&["compare", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().ends_with(",abs_err,rel_err"));
    let row = parse_first_row(&text);
    // weak coupling: absolute error far below the average itself
    assert!(row[row.len() - 2] < 1e-3);
}

#[test]
fn distribution_emits_density_table() {
    let config = write_config("dist.ini", BASE_CONFIG);
    let out = run(&["distribution", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "p,density,closed_form");
    let rows = text.lines().count() - 1;
    assert_eq!(rows, 4001);
}

#[test]
fn extrema_reports_four_quantities() {
    let config = write_config("extrema.ini", BASE_CONFIG);
    let out = run(&["extrema", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "quantity,value,gamma_star,phi_star,method");
    let quantities: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        quantities,
        ["average_max", "average_min", "spread_min", "spread_max"]
    );
}

#[test]
fn out_flag_writes_file_and_keeps_stdout_quiet() {
    let config = write_config("outfile.ini", BASE_CONFIG);
    let target = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("table.csv");
    let out = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let written = fs::read_to_string(&target).unwrap();
    assert!(written.starts_with("value,"));
}

#[test]
fn jobs_flag_is_deterministic() {
    let config = write_config(
        "jobs.ini",
        &format!("{BASE_CONFIG}\n[sweep]\nvariable = gamma\nstart = 0.0\nstop = 3.0\nsteps = 16\n"),
    );
    let serial = run(&["sweep", "--config", config.to_str().unwrap(), "--jobs", "1"]);
    let parallel = run(&["sweep", "--config", config.to_str().unwrap(), "--jobs", "4"]);
    assert!(serial.status.success() && parallel.status.success());
    assert_eq!(stdout(&serial), stdout(&parallel));
}

#[test]
fn config_errors_exit_with_code_1() {
    let missing = run(&["sweep", "--config", "/nonexistent/path.ini"]);
    assert_eq!(missing.status.code(), Some(1));

    let unknown_key = write_config(
        "unknown_key.ini",
        &format!("{BASE_CONFIG}\n[probe]\nbogus = 1\n"),
    );
    let out = run(&["sweep", "--config", unknown_key.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("probe") && err.contains("bogus"), "stderr: {err}");

    let bad_grid = write_config(
        "bad_grid.ini",
        &format!("{BASE_CONFIG}\n[grid]\np_min = -5\np_max = 5\nn_points = 200\n"),
    );
    let out = run(&["sweep", "--config", bad_grid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn physics_errors_exit_with_code_2() {
    // theta = 0 makes the extremum over gamma degenerate
    let config = write_config(
        "degenerate.ini",
        &BASE_CONFIG.replace("theta = 1.5707963267948966", "theta = 0.0"),
    );
    let out = run(&["extrema", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
