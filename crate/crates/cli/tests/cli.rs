use std::path::Path;
use std::process::{Command, Output};

fn fractvp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fractvp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn summary_value<'a>(report: &'a str, key: &str) -> &'a str {
    let prefix = format!("{key} = ");
    report
        .lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no '{key}' in report:\n{report}"))
}

fn without_timings(report: &str) -> &str {
    report.split("[timings]").next().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn example_one_newton_report() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let out = fractvp(&["solve", "--builtin", "1", "--mode", "tvp-newton", "--traj", traj.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout(&out);
    assert_eq!(summary_value(&report, "iterations"), "4");
    assert_eq!(summary_value(&report, "converged"), "true");
    let rho: f64 = summary_value(&report, "final_rho").parse().unwrap();
    assert!(rho.abs() <= 1e-13);

    let csv = std::fs::read_to_string(&traj).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,y1,err_est"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[10][0], 1.0);
    assert!((rows[10][1] - 0.25).abs() < 1e-14);
}

#[test]
fn example_two_single_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("report.txt");
    let out = fractvp(&["solve", "--builtin", "2", "--out", report_path.to_str().unwrap()]);
    assert!(out.status.success());
    let report = std::fs::read_to_string(&report_path).unwrap();
    assert_eq!(summary_value(&report, "iterations"), "1");
    let rho: f64 = summary_value(&report, "final_rho").parse().unwrap();
    assert!((rho - 2.8).abs() < 1e-12);
}

#[test]
fn forward_with_zero_field_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "zero.toml",
        r#"
alpha = 0.6
T = 3.0
dim = 2
initial_value = [1.5, -0.25]
rhs = """
0
0*y[2]
"""

[mesh]
kind = "graded"
n = 12
h1 = 1e-4

[solver]
k = 8
s = 6
"#,
    );
    let traj = dir.path().join("traj.csv");
    let out = fractvp(&["solve", "--config", &cfg, "--mode", "ivp-forward", "--traj", traj.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&traj).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,y1,y2"));
    let mut count = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(&v[1..], &[1.5, -0.25]);
        count += 1;
    }
    assert_eq!(count, 13);
}

#[test]
fn iteration_cap_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "capped.toml", "builtin = 1\n[solver]\nmax_iter = 2\n");
    let out = fractvp(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let report = stdout(&out);
    assert_eq!(summary_value(&report, "converged"), "false");
}

#[test]
fn invalid_inputs_exit_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "builtin = 1\nunknown_field = 3\n");
    assert_eq!(fractvp(&["solve", "--config", &cfg]).status.code(), Some(1));

    let out = fractvp(&["solve", "--builtin", "1", "--mode", "tvp-simplified"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("semi-linear"));

    let no_initial = write(dir.path(), "tvp.toml", "alpha = 0.5\nT = 1.0\ndim = 1\nterminal_value = [1.0]\nrhs = \"-y[1]\"\n[mesh]\nkind = \"uniform\"\nn = 4\n");
    let out = fractvp(&["solve", "--config", &no_initial, "--mode", "ivp-forward"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("initial value"));

    let bad_expr = write(dir.path(), "expr.toml", "alpha = 0.5\nT = 1.0\ndim = 1\nterminal_value = [1.0]\nrhs = \"y[2]\"\n[mesh]\nkind = \"uniform\"\nn = 4\n");
    let out = fractvp(&["solve", "--config", &bad_expr]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(fractvp(&["solve", "--builtin", "9"]).status.code(), Some(1));
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let a = fractvp(&["solve", "--builtin", "4"]);
    let b = fractvp(&["solve", "--builtin", "4"]);
    assert!(a.status.success() && b.status.success());
    let (ra, rb) = (stdout(&a), stdout(&b));
    assert_eq!(without_timings(&ra), without_timings(&rb));
    assert!(ra.contains("[timings]"));
}

#[test]
fn table_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("ex4.tables");
    let cache_s = cache.to_str().unwrap();
    let out = fractvp(&["tables", "build", "--builtin", "4", "--out", cache_s]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = fractvp(&["tables", "inspect", cache_s]);
    let text = stdout(&out);
    assert!(text.contains("alpha = 0.5"));
    assert!(text.contains("kernel_rows = 99"));

    let fresh = fractvp(&["solve", "--builtin", "4"]);
    let cached = fractvp(&["solve", "--builtin", "4", "--tables", cache_s, "-v"]);
    assert!(String::from_utf8_lossy(&cached.stderr).contains("loaded tables"));
    assert_eq!(without_timings(&stdout(&fresh)), without_timings(&stdout(&cached)));
}

#[test]
fn simplified_mode_on_semilinear_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "semi.toml",
        r#"
builtin = 6
nu = 2

[solver]
variant = "simplified"
"#,
    );
    let out = fractvp(&["solve", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout(&out);
    assert_eq!(summary_value(&report, "variant"), "simplified");
    assert_eq!(summary_value(&report, "variational_solves"), "0");
    assert_eq!(summary_value(&report, "series_terms"), "40");
}

#[test]
fn reproduce_with_custom_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "good.toml",
        r#"
version = 1

[[case]]
name = "example 4"
builtin = 4
mode = "tvp-newton"
iterations = 1
rho = [2.0, 3.0]
rho_tol = 1e-12
"#,
    );
    let out = fractvp(&["reproduce", "--manifest", &good]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("PASS  example 4"));

    let failing = write(
        dir.path(),
        "bad.toml",
        r#"
version = 1

[[case]]
name = "example 1"
builtin = 1
mode = "tvp-newton"
iterations = 3
"#,
    );
    let out = fractvp(&["reproduce", "--manifest", &failing]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).contains("FAIL  example 1"));
}
