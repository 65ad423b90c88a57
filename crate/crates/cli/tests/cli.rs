//! Behavior tests for the command-line binary: exit codes, file outputs,
//! and error messages, all against a reduced-scale corpus so the whole
//! target stays fast.

use std::path::Path;
use std::process::{Command, Output};

fn small_config_json() -> String {
    serde_json::json!({
        "corpus": {
            "members": 50,
            "skills": 10,
            "companies": 6,
            "industries": 3,
            "jobs_docs": 60,
            "content_docs": 60,
            "train_queries": 60,
            "eval_queries": 30,
            "endorsements_per_member": 4,
            "activity_horizon": 50,
            "planted_rank": 3,
            "homophily_weight": 0.5
        }
    })
    .to_string()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedrank"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary spawns")
}

fn expect_ok(dir: &Path, args: &[&str]) -> String {
    let output = run_in(dir, args);
    assert!(
        output.status.success(),
        "{args:?} exited nonzero:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn pipeline_commands_chain_into_search_and_eval() {
    let dir = tempfile::tempdir().expect("tempdir");
    std::fs::write(dir.path().join("config.json"), small_config_json()).expect("write config");
    let cfg = ["--config", "config.json"];

    let stdout = expect_ok(dir.path(), &["gen", "--config", "config.json"]);
    assert!(stdout.contains("50 members"), "gen reports corpus size, got: {stdout}");
    for file in ["members.jsonl", "queries.jsonl"] {
        assert!(dir.path().join("data").join(file).exists(), "gen must write data/{file}");
    }

    // Searching before anything is trained must fail loudly, not panic.
    let premature = run_in(dir.path(), &["search", "--query", "skill0", "--member", "0", "--config", "config.json"]);
    assert!(!premature.status.success(), "search without models must fail");
    assert!(
        String::from_utf8_lossy(&premature.stderr).contains("error"),
        "failure must be reported on stderr"
    );

    for step in ["train-expertise", "train-intent", "collect-labels", "train-ranker", "train-federator"] {
        expect_ok(dir.path(), &[step, &cfg[0], &cfg[1]]);
    }
    for file in ["expertise_model.json", "intent_model.json", "federator.json"] {
        assert!(dir.path().join("models").join(file).exists(), "missing models/{file}");
    }

    let page_out = expect_ok(
        dir.path(),
        &["search", "--query", "skill0 skill0_tool", "--member", "3", "--out", "page.json", "--config", "config.json"],
    );
    assert!(page_out.contains("primary_vertical"), "search prints the blended page");
    let page: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("page.json")).expect("page file"))
            .expect("page is valid json");
    assert!(page["items"].as_array().is_some_and(|items| !items.is_empty()));

    expect_ok(dir.path(), &["eval", "--suite", "homophily", "--config", "config.json"]);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).expect("report file"))
            .expect("report is valid json");
    assert_eq!(report["suite"], "homophily");
    assert!(report["variants"]["text_only"]["ndcg_at_k"]["10"].is_number());
    assert!(report["deltas"]["text_homophily_minus_text_only"]["ndcg@10"].is_number());
}

#[test]
fn invalid_config_is_rejected_with_the_offending_key() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut bad: serde_json::Value = serde_json::from_str(&small_config_json()).unwrap();
    bad["click"] = serde_json::json!({ "examination_decay": 1.7 });
    std::fs::write(dir.path().join("config.json"), bad.to_string()).expect("write config");

    let output = run_in(dir.path(), &["gen", "--config", "config.json"]);
    assert!(!output.status.success(), "out-of-range decay must be rejected");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("examination_decay"),
        "error must name the offending key, got: {stderr}"
    );
}

#[test]
fn missing_corpus_directory_fails_with_context() {
    let dir = tempfile::tempdir().expect("tempdir");
    let output = run_in(dir.path(), &["train-expertise"]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("error"), "stderr must carry the failure, got: {stderr}");
}
