//! End-to-end runs of the command-line tool.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::data_path;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semparse"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn geo_inputs() -> Vec<String> {
    ["corpus", "cfg", "catlex"]
        .iter()
        .flat_map(|k| [format!("--{k}"), s(&data_path(&format!("geo.{k}"))).to_string()])
        .collect()
}

fn with<'a>(base: &'a [String], extra: &[&'a str]) -> Vec<&'a str> {
    extra
        .iter()
        .take(1)
        .copied()
        .chain(base.iter().map(String::as_str))
        .chain(extra.iter().skip(1).copied())
        .collect()
}

#[test]
fn inverse_prints_the_missing_operand() {
    let dir = tempfile::tempdir().unwrap();
    let (h, g) = (dir.path().join("h"), dir.path().join("g"));
    fs::write(&h, r"\y. y @ loc_2(stateid('arkansas'))").unwrap();
    fs::write(&g, "stateid('arkansas')").unwrap();
    let out = run(&["inverse", "--dir", "left", "--result", s(&h), "--known", s(&g)]);
    assert_eq!(stdout(&out).trim(), r"\x. \y. y @ loc_2(x)");

    fs::write(&g, "riverid('red')").unwrap();
    let out = run(&["inverse", "--dir", "left", "--result", s(&h), "--known", s(&g)]);
    assert_eq!(stdout(&out).trim(), "null");
}

#[test]
fn induce_train_eval_parse() {
    let dir = tempfile::tempdir().unwrap();
    let (lex, model, again) = (
        dir.path().join("lex"),
        dir.path().join("model"),
        dir.path().join("model2"),
    );
    let inputs = geo_inputs();

    stdout(&run(&with(&inputs, &["induce", "-o", s(&lex)])));
    assert!(fs::read_to_string(&lex).unwrap().contains("answer"));

    for target in [&model, &again] {
        stdout(&run(&with(
            &inputs,
            &["train", "--lexicon", s(&lex), "--iters", "3", "-o", s(target)],
        )));
    }
    assert_eq!(fs::read(&model).unwrap(), fs::read(&again).unwrap());

    let report = stdout(&run(&with(&inputs, &["eval", "--model", s(&model), "--mode", "match"])));
    let mut lines = report.lines();
    assert_eq!(
        lines.next(),
        Some("fold\tprecision\trecall\tf\tcorrect\treturned\ttotal")
    );
    let all: Vec<&str> = lines.next().unwrap().split('\t').collect();
    assert_eq!(all[0], "all");
    assert_eq!(all[4], all[6], "every training sentence re-parsed: {report}");

    let parsed = run(&[
        "parse",
        "--model",
        s(&model),
        "--cfg",
        s(&data_path("geo.cfg")),
        "--catlex",
        s(&data_path("geo.catlex")),
        "Name the rivers in Ohio .",
    ]);
    assert_eq!(stdout(&parsed).trim(), "answer(river(loc_2(stateid('ohio'))))");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let inputs = geo_inputs();

    let out = run(&with(&inputs, &["eval", "--model", s(&missing)]));
    assert_eq!(out.status.code(), Some(2));

    let lex = dir.path().join("lex");
    let model = dir.path().join("model");
    stdout(&run(&with(&inputs, &["induce", "-o", s(&lex)])));
    stdout(&run(&with(
        &inputs,
        &["train", "--lexicon", s(&lex), "--iters", "1", "-o", s(&model)],
    )));
    let out = run(&with(&inputs, &["eval", "--model", s(&model), "--k", "1"]));
    assert_eq!(out.status.code(), Some(2));

    let out = run(&with(&inputs, &["induce", "--accuracy", "1.5", "-o", s(&lex)]));
    assert_eq!(out.status.code(), Some(2));
}
