//! Golden fixture maintenance. The committed fixture is a complete run
//! directory recorded from the deterministic oracle; the acceptance suite
//! replays it.
//!
//! Regenerate with:
//! `cargo test -p got-cli --test fixtures regenerate -- --ignored`
//! (run from the crate root; paths are manifest-relative).

use got_cli::commands::cmd_solve;
use got_cli::config::{BackendChoice, RunConfig};
use got_core::tasks::{recurrence, Problem};
use std::path::PathBuf;

pub const GOLDEN_RECURRENCE: &str = "tests/fixtures/golden-recurrence";

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
#[ignore]
fn regenerate_golden_recurrence_run() {
    let dir = manifest_dir().join(GOLDEN_RECURRENCE);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    let config = RunConfig {
        task: "recurrence".into(),
        backend: BackendChoice::Oracle,
        inspectors: 3,
        rounds: 5,
        max_rebuilds: 2,
        seed: 7,
        // Manifest-relative so the committed files carry no machine paths.
        out_dir: Some(PathBuf::from(GOLDEN_RECURRENCE)),
        ..RunConfig::default()
    };
    let problem = Problem::Recurrence(recurrence::flagship_problem());
    let prior = std::env::current_dir().unwrap();
    std::env::set_current_dir(manifest_dir()).unwrap();
    let result = cmd_solve(&config, &problem).unwrap();
    std::env::set_current_dir(prior).unwrap();
    assert!(result.solved);
    assert_eq!(result.rebuilds, 2);
}

#[test]
fn golden_recurrence_fixture_is_present_and_complete() {
    let dir = manifest_dir().join(GOLDEN_RECURRENCE);
    for file in [
        "config.json",
        "problem.json",
        "calls.jsonl",
        "result.json",
        "round-00.json",
        "round-01.json",
        "round-02.json",
        "report-00.json",
        "report-01.json",
        "report-02.json",
    ] {
        assert!(dir.join(file).exists(), "missing fixture file {file}");
    }
}
