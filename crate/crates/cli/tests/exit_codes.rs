//! Exit statuses and stdout of the `greenroom` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greenroom")).args(args).output().unwrap()
}

#[test]
fn ideate_prints_the_dog_idea() {
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("dog.kb");
    std::fs::write(&kb, "dog NotCapableOf ride_horse\n").unwrap();
    let out = run(&["ideate", "--kb", kb.to_str().unwrap(), "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l == "What if a dog learned how to ride a horse?"), "{}", stdout);
}

#[test]
fn stochastic_commands_need_a_seed() {
    let plots = data("plots/annotated.json");
    let out = run(&["plot", "--corpus", plots.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    assert_eq!(run(&["plot", "--corpus", plots.to_str().unwrap(), "--seed", "1"]).status.code(), Some(0));
}

#[test]
fn domain_errors_exit_one() {
    let corpus = data("corpora/showtunes");
    let sheet = data("corpora/showtunes/song1.json");
    let out = run(&[
        "flow",
        "--corpus",
        corpus.to_str().unwrap(),
        "--sheet",
        sheet.to_str().unwrap(),
        "--zone",
        "bogus",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert_eq!(run(&["ideate", "--kb", "/nonexistent.kb"]).status.code(), Some(1));
}

#[test]
fn sheet_tools_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let song = data("corpora/showtunes/song3.json");
    let up = dir.path().join("up.json");
    let back = dir.path().join("back.json");
    assert!(run(&[
        "sheet",
        "transpose",
        "--input",
        song.to_str().unwrap(),
        "--semitones",
        "3",
        "--out",
        up.to_str().unwrap()
    ])
    .status
    .success());
    assert!(run(&[
        "sheet",
        "transpose",
        "--input",
        up.to_str().unwrap(),
        "--semitones",
        "-3",
        "--out",
        back.to_str().unwrap()
    ])
    .status
    .success());
    let original = greenroom::sheet::read_leadsheet(&song).unwrap();
    assert_eq!(greenroom::sheet::read_leadsheet(&back).unwrap(), original);
    let midi = dir.path().join("song.mid");
    assert!(run(&["sheet", "export", "--input", song.to_str().unwrap(), "--out", midi.to_str().unwrap()])
        .status
        .success());
    assert_eq!(&std::fs::read(&midi).unwrap()[..4], b"MThd");
}
