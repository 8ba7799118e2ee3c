use std::path::Path;
use std::process::{Command, Output};

fn fofeqa(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fofeqa"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn toy_round_trip_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    stdout(&fofeqa(&["gen-toy", "--seed", "1", "--out", "toy"], dir));

    let kb = stdout(&fofeqa(&["build-kb", "--kb", "toy"], dir));
    assert!(kb.lines().any(|l| l.starts_with("facts\t")));

    let common = ["--kb", "toy", "--train", "toy/train.tsv", "--models", "models"];
    for model in ["mention", "linker", "relation"] {
        let mut args = vec!["train", "--model", model];
        args.extend(common);
        let out = stdout(&fofeqa(&args, dir));
        assert!(out.contains(&format!("{model}.fofenet")), "{out}");
    }

    let mut args = vec!["eval", "--data", "toy/test.tsv", "--report-dir", "report"];
    args.extend(common);
    let table = stdout(&fofeqa(&args, dir));
    assert!(table.contains("pair_accuracy"));
    for f in ["metrics.tsv", "linking.tsv", "relations.tsv", "answers.tsv"] {
        assert!(dir.join("report").join(f).exists(), "{f}");
    }

    let mut args = vec!["answer", "--question", "who was elected president of Philippines ?"];
    args.extend(common);
    let out = stdout(&fofeqa(&args, dir));
    assert!(out.contains("# constraint temporal-past"), "{out}");
}

#[test]
fn errors_are_one_line_on_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let out = fofeqa(&["build-kb", "--kb", "missing"], tmp.path());
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error\t"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn answering_without_models_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    stdout(&fofeqa(&["gen-toy", "--out", "toy"], dir));
    let out = fofeqa(
        &[
            "answer",
            "--kb",
            "toy",
            "--train",
            "toy/train.tsv",
            "--models",
            "none",
            "--question",
            "who directed Chicago ?",
        ],
        dir,
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error\t"));
}
