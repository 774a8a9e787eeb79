use std::path::Path;
use std::process::{Command, Output};

fn adapro(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adapro"))
        .args(args)
        .current_dir(dir)
        .env_remove("ADAPRO_STATE_LIMIT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn buggy_model_fails_formula_7_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = adapro(dir.path(), &["check", "--workers", "1", "--variant", "buggy-set-command", "--formulas", "7", "--fair"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let trace = std::fs::read_to_string(dir.path().join("formula-7.trace")).unwrap();
    assert!(!trace.trim().is_empty());
}

#[test]
fn fixed_model_passes_under_fairness() {
    let dir = tempfile::tempdir().unwrap();
    let o = adapro(dir.path(), &["check", "--workers", "1", "--fair"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn tiny_state_limit_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = adapro(dir.path(), &["check", "--formulas", "1", "--fair", "--state-limit", "10"]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["check", "--workers", "0"][..],
        &["check", "--variant", "nope"],
        &["check", "--formulas", "18"],
        &["harness", "no-such-scenario"],
        &["frobnicate"],
    ] {
        assert_eq!(adapro(dir.path(), args).status.code(), Some(64), "{args:?}");
    }
}

#[test]
fn print_formula_expands_quantifiers() {
    let dir = tempfile::tempdir().unwrap();
    let o = adapro(dir.path(), &["check", "--workers", "2", "--print-formula", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("w1") && text.contains("w2"), "{text}");
}

#[test]
fn harness_lists_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let o = adapro(dir.path(), &["harness", "--list"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("premature-destructor-no-join"));
}

#[test]
fn harness_failure_schedule_replays() {
    let dir = tempfile::tempdir().unwrap();
    let o = adapro(dir.path(), &["harness", "premature-destructor-no-join"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let schedule = dir.path().join("premature-destructor-no-join.schedule");
    assert!(schedule.exists());
    let path = schedule.to_str().unwrap();
    let again = adapro(dir.path(), &["harness", "premature-destructor-no-join", "--replay", path]);
    assert_eq!(again.status.code(), Some(2), "{}", stdout(&again));
    let fixed = adapro(dir.path(), &["harness", "premature-destructor-joined"]);
    assert_eq!(fixed.status.code(), Some(0), "{}", stdout(&fixed));
}

#[test]
fn demo_exit_code_is_the_status_byte() {
    let dir = tempfile::tempdir().unwrap();
    let clean = adapro(dir.path(), &["demo"]);
    assert_eq!(clean.status.code(), Some(0));
    assert_eq!(stdout(&clean).trim(), "0x00");

    let aborted = adapro(dir.path(), &["demo", "--inject-abort"]);
    let code = aborted.status.code().unwrap();
    assert_ne!(code & 0x01, 0, "{}", stdout(&aborted));

    let stopped = adapro(dir.path(), &["demo", "--external-stop-after-ms", "30"]);
    let code = stopped.status.code().unwrap();
    assert_ne!(code & 0x08, 0, "{}", stdout(&stopped));
}
