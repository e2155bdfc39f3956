use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rlm_core::io::{parse_config, CSV_HEADER};

fn rlm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn run_in(dir: &Path, cmd: &str, config: &Path, out: &str) -> (Output, PathBuf) {
    let out = dir.join(out);
    let o = rlm(&[
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--workers",
        "1",
    ]);
    (o, out)
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

const SMALL_D1: &str =
    r#"{"problem":"D1","levels":[4,5],"epsilons":[0.2],"orders":[0,1],"vtk":true}"#;

#[test]
fn missing_config_exits_one_with_usage() {
    let o = rlm(&["sweep"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--config"), "{err}");
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn unknown_subcommand_and_help() {
    assert_eq!(rlm(&["frobnicate", "--config", "x"]).status.code(), Some(1));
    assert_eq!(rlm(&[]).status.code(), Some(1));
    let help = rlm(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for cmd in ["solve", "sweep", "infsup", "compare-full", "robin"] {
        assert!(text.contains(cmd), "{text}");
    }
}

#[test]
fn bad_config_exits_one_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"problem":"D1","levels":[4],"epsilons":[-1],"orders":[0]}"#,
    );
    let (o, _) = run_in(dir.path(), "solve", &cfg, "out");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epsilons[0]"));

    let missing = dir.path().join("nope.json");
    let (o, _) = run_in(dir.path(), "solve", &missing, "out");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_writes_results_echo_version_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_D1);
    let (o, out) = run_in(dir.path(), "solve", &cfg, "out");
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = read(&out.join("results.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("D1,reduced,4,0.125,0.2,0,1,0,289,1,"));
    assert!(lines[1].ends_with(','));
    let echo = parse_config(&read(&out.join("config.json"))).unwrap();
    assert_eq!(echo, parse_config(SMALL_D1).unwrap());
    assert!(read(&out.join("VERSION")).starts_with("rlm "));
    let vtk = read(&out.join("u_D1_reduced_l5_e0.2_n1_k0.vtk"));
    assert!(vtk.contains("POINT_DATA 1089\n"));
    assert!(!out.join("failures.txt").exists());
}

#[test]
fn single_worker_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_D1);
    let (a, out_a) = run_in(dir.path(), "solve", &cfg, "a");
    let (b, out_b) = run_in(dir.path(), "solve", &cfg, "b");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let mut names: Vec<_> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        let x = std::fs::read(out_a.join(&name)).unwrap();
        let y = std::fs::read(out_b.join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

#[test]
fn sweep_writes_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"problem":"D1","levels":[3,4,5],"epsilons":[0.2],"orders":[0]}"#,
    );
    let (o, out) = run_in(dir.path(), "sweep", &cfg, "out");
    assert_eq!(o.status.code(), Some(0));
    let rates = read(&out.join("rates.csv"));
    assert!(rates
        .lines()
        .next()
        .unwrap()
        .starts_with("problem,method,axis,quantity"));
    assert!(rates.contains("D1,reduced,h,err_L2,,0.2,0,0,"));
}

#[test]
fn compare_full_adds_gap_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"problem":"D2","levels":[5],"epsilons":[0.2],"orders":[1]}"#,
    );
    let (o, out) = run_in(dir.path(), "compare-full", &cfg, "out");
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = read(&out.join("results.csv"));
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1], "full");
    assert_eq!(rows[0][13], "");
    assert_eq!(rows[1][1], "reduced");
    assert!(rows[1][13].parse::<f64>().unwrap() >= 0.0);
    assert!(rows[1][14].parse::<f64>().unwrap() >= 0.0);
}

#[test]
fn partial_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"problem":"THREE_CYL","levels":[2],"epsilons":[0.1],"orders":[0]}"#,
    );
    let (o, out) = run_in(dir.path(), "compare-full", &cfg, "out");
    assert_eq!(o.status.code(), Some(2));
    let failures = read(&out.join("failures.txt"));
    assert!(
        failures.contains("THREE_CYL level=2 epsilon=0.1"),
        "{failures}"
    );
    assert!(failures.contains("method=full"), "{failures}");
    assert_eq!(read(&out.join("results.csv")).lines().count(), 2);
}

#[test]
fn infsup_and_robin_commands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"problem":"D1","levels":[4],"epsilons":[0.2],"orders":[0,1],"kappas":[1,0.01]}"#,
    );
    let (o, out) = run_in(dir.path(), "infsup", &cfg, "inf");
    assert_eq!(o.status.code(), Some(0));
    let inf = read(&out.join("infsup.csv"));
    assert_eq!(inf.lines().count(), 3);
    let (o, out) = run_in(dir.path(), "robin", &cfg, "rob");
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(read(&out.join("results.csv")).lines().count(), 7);
    assert_eq!(read(&out.join("robin_identity.csv")).lines().count(), 5);

    let cfg = write_config(
        dir.path(),
        r#"{"problem":"D1","levels":[4],"epsilons":[0.2],"orders":[0]}"#,
    );
    let (o, _) = run_in(dir.path(), "robin", &cfg, "rob2");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kappas"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        parse_config(&read(&p)).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 5);
}
