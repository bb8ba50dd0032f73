use std::path::Path;
use std::process::{Command, Output};

fn muse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muse")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn corpus(dir: &Path) -> String {
    let mut text = String::new();
    for i in 0..200 {
        let (topic, other) = if i % 2 == 0 { ("river", "water") } else { ("money", "cash") };
        text.push_str(&format!("the bank near the {topic} and {other} was {topic} {other} again today\n"));
    }
    let path = dir.join("corpus.txt");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn train(dir: &Path, extra: &[&str]) -> String {
    let model = dir.join("model.muse").to_string_lossy().into_owned();
    let corpus = corpus(dir);
    let mut args = vec![
        "train", "--corpus", &corpus, "--out", &model, "--dim", "8", "--senses", "2", "--negatives", "3",
        "--min-count", "1", "--min-sentence-len", "0", "--batch-size", "32", "--progress-every", "500",
    ];
    args.extend_from_slice(extra);
    let o = muse(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    model
}

#[test]
fn help_and_version_exit_zero() {
    assert!(muse(&["--help"]).status.success());
    assert!(muse(&["--version"]).status.success());
    assert!(stdout(&muse(&["train", "--help"])).contains("--corpus"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(muse(&["train"]).status.code(), Some(1));
    assert_eq!(muse(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path());
    let o = muse(&["train", "--corpus", &c, "--out", "x", "--senses", "0"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn missing_files_exit_two() {
    let o = muse(&["knn", "--model", "/nonexistent/model.muse", "--word", "a"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn train_then_query() {
    let dir = tempfile::tempdir().unwrap();
    let export = format!("U={}", dir.path().join("u.txt").display());
    let model = train(dir.path(), &["--export-text", &export]);
    assert!(dir.path().join("u.txt").exists());

    let o = muse(&["knn", "--model", &model, "--word", "bank", "--sense", "1", "--k", "3", "--metric", "cosine"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines[0], "bank#1");
    assert_eq!(lines.len(), 4);
    assert!(stderr(&o).contains("\"dim\":8"));

    let o = muse(&["knn", "--model", &model, "--word", "nope"]);
    assert_eq!(o.status.code(), Some(1));

    let text = dir.path().join("in.txt");
    std::fs::write(&text, "the bank near the river zzz\n").unwrap();
    let o = muse(&["decode", "--model", &model, "--input", &text.to_string_lossy()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let tokens: Vec<&str> = out.split_whitespace().collect();
    assert_eq!(tokens.len(), 6);
    assert!(tokens[1].starts_with("bank#"));
    assert_eq!(tokens[5], "zzz");
}

#[test]
fn training_prints_progress() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.muse");
    let c = corpus(dir.path());
    let o = muse(&[
        "train", "--corpus", &c, "--out", &model.to_string_lossy(), "--dim", "4", "--senses", "2",
        "--min-count", "1", "--min-sentence-len", "0", "--progress-every", "200", "--learner", "policy", "--no-subsample", "--batch-size", "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("\"learner\":\"policy-gradient\""), "{err}");
    assert!(err.lines().any(|l| l.starts_with("samples=")), "{err}");
}

#[test]
fn evaluation_commands() {
    let dir = tempfile::tempdir().unwrap();
    let model = train(dir.path(), &[]);
    let scws = dir.path().join("scws.txt");
    std::fs::write(
        &scws,
        "1\tbank\tn\triver\tn\tthe <b>bank</b> near\tthe <b>river</b> and\t7.0\n\
         2\tbank\tn\tcash\tn\tthe <b>bank</b> was\tand <b>cash</b> was\t8.0\n\
         3\triver\tn\tcash\tn\tthe <b>river</b>\tthe <b>cash</b>\t1.0\n",
    )
    .unwrap();
    let o = muse(&["eval-scws", "--model", &model, "--scws", &scws.to_string_lossy(), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("MaxSimC="));

    let syn = dir.path().join("syn.txt");
    std::fs::write(&syn, "bank | river money cash water | b\n").unwrap();
    let o = muse(&["eval-synonym", "--model", &model, "--data", &syn.to_string_lossy()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("syn"));
}

#[test]
fn pseudoword_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path());
    let out = dir.path().join("merged.txt");
    let o = muse(&["make-pseudoword-corpus", "--corpus", &c, "--out", &out.to_string_lossy(), "--merge", "river,money,rivermoney"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "rivermoney\triver=200\tmoney=200");
    let merged = std::fs::read_to_string(&out).unwrap();
    assert!(!merged.contains(" river "));
    assert!(Path::new(&format!("{}.labels", out.display())).exists());
    let o = muse(&["make-pseudoword-corpus", "--corpus", &c, "--out", "x", "--merge", "river"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn diagnostic_reports_a_flattening_policy() {
    let o = muse(&["diagnose-appendix-a", "--steps", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("step=")).count(), 50);
    let summary: serde_json::Value = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    assert_eq!(summary["non_increasing"], true);
    assert!(summary["final_max"].as_f64().unwrap() < summary["initial_max"].as_f64().unwrap());

    let o = muse(&["diagnose-appendix-a", "--learner", "qlearning", "--steps", "20", "--lr", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = muse(&["diagnose-appendix-a", "--rewards", "1,2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn policy_gradient_rejects_greedy_selection() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path());
    let o = muse(&["train", "--corpus", &c, "--out", "x", "--learner", "policy", "--strategy", "greedy"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}
