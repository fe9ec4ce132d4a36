use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

const ZERO_LOOP: &str = r#"{"states":["q"],"initial":"q","alphabet":["s1"],
    "transitions":[["q","s1","q",0]],"observations":"blind"}"#;

/// Each letter is safe in exactly one of the two states.
const TWO_STATE: &str = r#"{"states":["a","b"],"initial":"a","alphabet":["s1","s2"],
    "transitions":[["a","s1","a",0],["a","s1","b",0],["b","s1","b",-1],
                   ["a","s2","a",-1],["a","s2","b",0],["b","s2","b",0]],
    "observations":[["a"],["b"]]}"#;

const M_HALT: &str = r#"{"states":["qI","q1","qF"],"initial":"qI","final":"qF",
    "delta":[["qI","inc",1,"q1"],["q1","dec",1,"qF"],["q1","0?",1,"qF"]]}"#;

const M_LOOP: &str = r#"{"states":["qI","qF"],"initial":"qI","final":"qF",
    "delta":[["qI","inc",1,"qI"]]}"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: TempDir::new().unwrap(),
        }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn po(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_po-energy")).args(args).output().unwrap()
}

fn po_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_po-energy"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_loop_is_won_without_credit() {
    let w = Workspace::new();
    let g = w.file("zero.json", ZERO_LOOP);
    let o = po(&["solve", s(&g), "--credit", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().next(), Some("Win"));
}

#[test]
fn exit_codes_follow_the_verdict() {
    let w = Workspace::new();
    let blind = TWO_STATE.replace(r#"[["a"],["b"]]"#, r#""blind""#);
    let g = w.file("blind.json", &blind);
    assert_eq!(code(&po(&["solve", s(&g), "--credit", "0"])), 1);
    let m = w.file("halt.json", M_HALT);
    let gm = w.path("gm.json");
    assert_eq!(code(&po(&["gen", "minsky", "--machine", s(&m), "-o", s(&gm)])), 0);
    let o = po(&["solve", s(&gm), "--credit", "0", "--limits-nodes", "5"]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout(&o).lines().next(), Some("ResourceLimit"));
    assert_eq!(code(&po(&["solve", s(&gm), "--credit", "0"])), 0);
}

#[test]
fn fgh_commands() {
    let o = po(&["fgh", "eval", "--i", "2", "--x", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "23");
    assert_eq!(stdout(&po(&["fgh", "phi", "--a", "1,0,0", "--x", "2"])).trim(), "23");
    assert_eq!(code(&po(&["fgh", "eval", "--i", "5", "--x", "5"])), 3);
    let o = po(&["fgh", "rewrite", "--a", "1,0", "--x", "1", "--trace"]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines.last(), Some(&"3"));
    let o = po(&["fgh", "rewrite", "--a", "1,0", "--x", "0", "--rules", "N2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn generated_games_validate() {
    let pump = po(&["gen", "pump", "--m", "1"]);
    assert_eq!(code(&pump), 0);
    let o = po_stdin(&["check", "-"], &pump.stdout);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let w = Workspace::new();
    let m = w.file("halt.json", M_HALT);
    let full = po(&["gen", "full", "--machine", s(&m)]);
    assert_eq!(code(&po_stdin(&["check", "-"], &full.stdout)), 0);
    assert_eq!(code(&po(&["gen", "pump", "--m", "0"])), 2);
}

#[test]
fn strategies_round_trip_through_files() {
    let w = Workspace::new();
    let g = w.file("two.json", TWO_STATE);
    let strat = w.path("s.json");
    let dot = w.path("s.dot");
    let o = po(&["strategy", s(&g), "--credit", "0", "-o", s(&strat), "--dot", s(&dot)]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(&dot).unwrap().starts_with("digraph"));
    for adam in ["random", "greedy", "exhaustive"] {
        let o = po(&[
            "simulate", s(&g), "--credit", "0", "--strategy", s(&strat), "--adam", adam, "--steps", "200",
        ]);
        assert_eq!(code(&o), 0, "{adam}: {}", stdout(&o));
    }
    let blind = w.file("blind.json", &TWO_STATE.replace(r#"[["a"],["b"]]"#, r#""blind""#));
    assert_eq!(code(&po(&["strategy", s(&blind), "--credit", "0"])), 1);
}

#[test]
fn json_output_parses_and_is_reproducible() {
    let w = Workspace::new();
    let g = w.file("two.json", TWO_STATE);
    let strat = w.path("s.json");
    po(&["strategy", s(&g), "--credit", "0", "-o", s(&strat)]);
    let runs: Vec<Vec<&str>> = vec![
        vec!["--format", "json", "solve", s(&g), "--credit", "1"],
        vec!["--format", "json", "oracle", s(&g), "--credit", "0"],
        vec!["--format", "json", "--seed", "9", "simulate", s(&g), "--credit", "0", "--strategy", s(&strat)],
        vec!["--format", "json", "fgh", "rewrite", "--a", "1,0", "--x", "2", "--trace"],
        vec!["--format", "json", "check", s(&g)],
        vec!["strategy", s(&g), "--credit", "0"],
    ];
    for args in runs {
        let a = po(&args);
        let b = po(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
        assert!(v.is_object(), "{args:?}");
    }
    let v: serde_json::Value =
        serde_json::from_slice(&po(&["--format", "json", "oracle", s(&g)]).stdout).unwrap();
    assert_eq!(v["credits"]["a"], 0);
    let v: serde_json::Value =
        serde_json::from_slice(&po(&["--format", "json", "solve", s(&g), "--credit", "0"]).stdout).unwrap();
    assert_eq!(v["verdict"], "Win");
    assert!(v.get("elapsed_ms").is_none());
}

#[test]
fn machines_run_to_their_outcome() {
    let w = Workspace::new();
    let halt = w.file("halt.json", M_HALT);
    let o = po(&["minsky", "run", "--machine", s(&halt), "--bound", "3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().last(), Some("Halted"));
    let lp = w.file("loop.json", M_LOOP);
    let o = po(&["--format", "json", "minsky", "run", "--machine", s(&lp), "--bound", "3"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcome"]["BoundExceeded"]["step"], 4);
}

#[test]
fn bad_input_is_reported() {
    let w = Workspace::new();
    let o = po(&["solve", s(&w.path("missing.json")), "--credit", "0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.json"));
    assert_eq!(code(&po(&["solve"])), 2);
    let broken = w.file("broken.json", r#"{"states":["q"],"initial":"q","alphabet":["s"],
        "transitions":[],"observations":"blind"}"#);
    assert_eq!(code(&po(&["check", s(&broken)])), 1);
    assert_eq!(code(&po(&["solve", s(&broken), "--credit", "0"])), 2);
}
