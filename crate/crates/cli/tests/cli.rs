use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn alertgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alertgame"))
        .args(args)
        .output()
        .expect("binary runs")
}

// small enough to finish in seconds
const QUICK: &[&str] = &[
    "--runs",
    "6",
    "--set",
    "defender_episodes=3000",
    "--set",
    "attacker_episodes=3000",
    "--set",
    "best_response_restarts=1",
    "--set",
    "selection_runs=4",
];

fn run_quick(recipe: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--quiet", "--recipe", recipe, "--out", out.to_str().unwrap()];
    args.extend_from_slice(QUICK);
    args.extend_from_slice(extra);
    alertgame(&args)
}

#[test]
fn lists_every_recipe() {
    let out = alertgame(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.contains("chunk30-attack"));
    assert!(text.contains("theorem1-checks"));
}

#[test]
fn show_reflects_overrides_and_config_files() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("x.conf");
    fs::write(&conf, "# local tweak\nruns = 17\nattacker_budget_scale = 1.2\n").unwrap();
    let out = alertgame(&["show", "--recipe", "chunk30-attack", "--config", conf.to_str().unwrap(), "--seed", "9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("runs = 17\n"));
    assert!(text.contains("seed = 9\n"));
    assert!(text.contains("attacker_chunk_alerts = 30\n"));
    assert!(text.contains("attacker_budget_scale = 1.2\n"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "no_such_key = 1\n").unwrap();
    assert_eq!(alertgame(&["show", "--recipe", "chunk-sweep", "--config", conf.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(alertgame(&["show", "--recipe", "missing"]).status.code(), Some(2));
    assert_eq!(alertgame(&["show", "--recipe", "chunk-sweep", "--set", "runs=0"]).status.code(), Some(2));
    assert_eq!(alertgame(&["show", "--recipe", "chunk-sweep", "--set", "runs"]).status.code(), Some(2));
    let missing = dir.path().join("absent.conf");
    assert_eq!(alertgame(&["show", "--recipe", "chunk-sweep", "--config", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn runs_are_reproducible_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run_quick("equal-budget-daily-bound", out, &["--seed", "4"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["stats.csv", "proportions.csv", "trained/traces.csv", "resolved.conf", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    for f in ["bounds.json", "trained/worst_run.csv", "trained/worst_run.svg", "trained/proportions.svg", "trained/defender.qt", "trained/attacker.qt"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    let traces = fs::read_to_string(a.join("trained/traces.csv")).unwrap();
    assert!(traces.starts_with("run,hour,b_pre,"));
    assert_eq!(traces.lines().count(), 1 + 6 * 48);

    // the resolved settings alone reproduce the run
    let c = dir.path().join("c");
    let mut args = vec!["run", "--quiet", "--recipe", "equal-budget-daily-bound", "--out", c.to_str().unwrap()];
    let conf = a.join("resolved.conf");
    args.extend_from_slice(&["--config", conf.to_str().unwrap()]);
    assert!(alertgame(&args).status.success());
    assert_eq!(fs::read(a.join("stats.csv")).unwrap(), fs::read(c.join("stats.csv")).unwrap());
}

#[test]
fn saved_tables_refuse_a_different_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert!(run_quick("equal-budget-daily-bound", &first, &[]).status.success());
    let table = format!("file:{}", first.join("trained/defender.qt").display());

    let same = run_quick("equal-budget-daily-bound", &dir.path().join("same"), &["--set", &format!("defender={table}")]);
    assert!(same.status.success(), "{}", String::from_utf8_lossy(&same.stderr));

    let other = run_quick(
        "equal-budget-daily-bound",
        &dir.path().join("other"),
        &["--set", &format!("defender={table}"), "--set", "lambda_per_hour=80"],
    );
    assert_eq!(other.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&other.stderr).contains("hash"));

    let gone = run_quick("s1-vs-unbounded", &dir.path().join("gone"), &["--set", "defender=file:/nonexistent.qt"]);
    assert_eq!(gone.status.code(), Some(3));
}

#[test]
fn bound_checks_write_their_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t1");
    let o = alertgame(&[
        "run", "--quiet", "--recipe", "theorem1-checks", "--runs", "20",
        "--set", "busy_cycle_hours=20000", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("bounds.json")).unwrap()).unwrap();
    assert_eq!(report["dump_analysis"]["residual_backlog"], 4210);
    assert_eq!(report["busy_cycles"]["tails"].as_array().unwrap().len(), 49);
    assert!(out.join("dump-vs-s1/worst_run.svg").is_file());
}
