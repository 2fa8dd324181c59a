//! End-to-end checks of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

use lsq_accel::harness::summarize_raw_rows;
use lsq_accel::solvers::read_raw_csv;

fn cli(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsq-accel")).arg("--out-dir").arg(out_dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn corollary_bound_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["bounds", "--theorem", "cor1", "--n", "9", "--gamma", "1", "--norm", "1", "--tau", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().next().unwrap().ends_with("= 0.36"), "{}", stdout(&o));
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = cli(dir.path(), &["generate", "--d", "1", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let o = cli(dir.path(), &["generate", "--spectrum", "source", "--d", "50", "--r", "0.4", "--rotate", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("problem.json").exists());
}

#[test]
fn usage_and_domain_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["bounds", "--theorem", "th9", "--n", "1", "--gamma", "1"]).status.code(), Some(2));
    assert_eq!(cli(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(dir.path(), &["rates", "--r", "1.5"]).status.code(), Some(2));
}

#[test]
fn invalid_configuration_aborts_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["run", "--algo", "avgd", "--gamma", "100", "--n", "10", "--reps", "1"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_writes_csv_that_resummarizes_offline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = cli(dir.path(), &["--workers", "1", "run", "--algo", "avaccgd", "--n", "200", "--reps", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_raw_csv(out.join("raw.csv")).unwrap();
    assert_eq!(rows.len(), 4 * lsq_accel::solvers::log_checkpoints(200, 25).len());
    let offline = summarize_raw_rows(&rows).unwrap();
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let (_, last_rows) = &offline[0];
    let last = last_rows.last().unwrap();
    assert_eq!(last.iter, 200);
    let line = summary.lines().find(|l| l.contains(",200,")).expect("summary has the horizon");
    assert!(line.contains(&last.mean_risk.to_string()), "{line} vs {}", last.mean_risk);
    // Same flags, same bytes.
    let again = dir.path().join("again");
    cli(dir.path(), &["--workers", "1", "run", "--algo", "avaccgd", "--n", "200", "--reps", "4", "--out", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(out.join("raw.csv")).unwrap(), std::fs::read(again.join("raw.csv")).unwrap());
}

#[test]
fn compare_passes_and_negative_control_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let ok = cli(dir.path(), &["compare", "--algo", "avaccgd", "--n", "300", "--reps", "500", "--check"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let bad = cli(dir.path(), &["compare", "--algo", "avaccgd", "--n", "300", "--reps", "500", "--tau-scale", "1.5", "--check"]);
    assert_eq!(bad.status.code(), Some(3), "{}", stdout(&bad));
}

#[test]
fn fig1_check_exit_code_follows_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["fig1", "--check"]);
    let text = stdout(&o);
    let any_fail = text.lines().any(|l| l.starts_with("[FAIL]"));
    assert_eq!(text.lines().filter(|l| l.starts_with('[')).count(), 7, "{text}");
    assert_eq!(o.status.code(), Some(if any_fail { 3 } else { 0 }));
    assert!(dir.path().join("fig1").join("fits.csv").exists());
    assert_eq!(cli(dir.path(), &["fig1"]).status.code(), Some(0));
}

#[test]
fn exact_and_rates_commands_produce_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["exact", "--algo", "avaccgd", "--n", "500"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("exact.csv").exists());
    let o = cli(dir.path(), &["rates", "--predict-only", "--r", "0,0.75"]);
    assert!(stdout(&o).contains("-0.6667"));
    let o = cli(dir.path(), &["rates", "--d", "2000", "--r", "0", "--log2-max", "11", "--tail-fraction", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("rates.csv").exists());
}

#[test]
fn help_lists_units_and_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&cli(dir.path(), &["run", "--help"]));
    for flag in ["--gamma", "--lambda", "--delta", "--n", "--reps", "--seed", "--oracle", "--algo", "--out-dir", "--workers"] {
        assert!(text.contains(flag), "missing {flag}");
    }
    assert!(text.contains("> 0") && text.contains(">= 0") && text.contains("[-1, 1]"));
}
