use std::path::Path;
use std::process::{Command, Output};

fn gaitguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaitguard")).args(args).output().expect("spawn gaitguard")
}

fn ok(args: &[&str]) -> String {
    let out = gaitguard(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn generate(dir: &Path) {
    ok(&[
        "generate",
        "--out",
        dir.to_str().unwrap(),
        "--segment-seconds",
        "6",
        "--train-seconds",
        "6",
        "--single-task-seconds",
        "4",
    ]);
}

#[test]
fn generate_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate(a.path());
    generate(b.path());
    for f in ["train.csv", "val.csv", "walk.csv", "jump.csv", "dataset.json"] {
        let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        assert!(!x.is_empty(), "{f}");
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(gaitguard(&["generate"]).status.code(), Some(2));
    assert_eq!(gaitguard(&["replay", "--bogus"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = gaitguard(&["evaluate", "--decisions", missing.to_str().unwrap(), "--log", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = gaitguard(&["report"]);
    assert_eq!(out.status.code(), Some(2));
    generate(dir.path());
    let log = dir.path().join("train.csv");
    let bundle = dir.path().join("b");
    let out = gaitguard(&[
        "train",
        "--log",
        log.to_str().unwrap(),
        "--bundle",
        bundle.to_str().unwrap(),
        "--ensemble-size",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn end_to_end_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    generate(dir.path());
    let text = ok(&[
        "train",
        "--log",
        &p("train.csv"),
        "--bundle",
        &p("bundle"),
        "--ensemble-size",
        "2",
        "--epochs",
        "1",
        "--windows-per-epoch",
        "200",
    ]);
    assert!(text.contains("threshold:"), "{text}");
    let text = ok(&["calibrate", "--bundle", &p("bundle"), "--log", &p("train.csv")]);
    assert!(text.starts_with("threshold "), "{text}");
    let text = ok(&["replay", "--bundle", &p("bundle"), "--log", &p("val.csv"), "--out", &p("val.jsonl"), "--max-speed"]);
    assert!(text.contains("decisions"), "{text}");
    assert!(Path::new(&p("val.jsonl.stats.json")).exists());
    let wrong = gaitguard(&["replay", "--bundle", &p("bundle"), "--log", &p("val.csv"), "--max-speed", "--scorer", "gan"]);
    assert_eq!(wrong.status.code(), Some(2));
    let text = ok(&["evaluate", "--decisions", &p("val.jsonl"), "--log", &p("val.csv"), "--out", &p("eval")]);
    assert!(text.contains("no_transitions"), "{text}");
    let text = ok(&["report", "--bundle", &p("bundle"), "--evaluation", &p("eval/report.json")]);
    assert!(text.contains("scorer: ensemble-phase"), "{text}");
    // records of a different log do not line up with this one
    let bad = gaitguard(&["evaluate", "--decisions", &p("val.jsonl"), "--log", &p("walk.csv")]);
    assert_eq!(bad.status.code(), Some(2));
}
