use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(rel)
}

fn scratch(name: &str, src: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lanq-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    fs::write(&p, src).unwrap();
    p
}

fn lanq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lanq")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_accepts_teleport() {
    let o = lanq(&["check", corpus("teleport.lq").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("ok"));
}

#[test]
fn check_reports_type_rule() {
    let p = scratch("fork.lq", "void main() { qbit q; q = new qbit(); fork H(q); }");
    let o = lanq(&["check", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("T-Fork"), "{}", stderr(&o));
}

#[test]
fn empty_file_is_a_syntax_error() {
    let p = scratch("empty.lq", "");
    assert_eq!(code(&lanq(&["check", p.to_str().unwrap()])), 2);
    assert_eq!(code(&lanq(&["run", p.to_str().unwrap()])), 2);
}

#[test]
fn rng_distribution() {
    let o = lanq(&["run", corpus("rng.lq").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let halves: Vec<&str> = out.lines().filter(|l| l.starts_with("0.500000")).collect();
    assert_eq!(halves.len(), 2, "{out}");
    assert!(halves.iter().any(|l| l.ends_with(" 0")) && halves.iter().any(|l| l.ends_with(" 1")), "{out}");
}

#[test]
fn sampled_run_has_one_leaf() {
    let o = lanq(&["run", "--branch", "sample", "--seed", "3", corpus("rng.lq").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let leaves = stdout(&o).lines().filter(|l| l.starts_with("0.500000")).count();
    assert_eq!(leaves, 1);
}

#[test]
fn runtime_error_exit() {
    let o = lanq(&["run", corpus("rte_a.lq").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
}

#[test]
fn deadlock_exit() {
    let p = scratch(
        "deadlock.lq",
        "void main() { channel[int] ch withends [a, b]; int x; ch = new channel[int](); x = recv(b); }",
    );
    let o = lanq(&["run", p.to_str().unwrap()]);
    assert_eq!(code(&o), 4, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("(deadlock)"));
}

#[test]
fn step_limit_exit() {
    let p = scratch("spin.lq", "int main() { int i; i = 0; while (true) { i = i + 1; } return i; }");
    let o = lanq(&["run", "--max-steps", "50", p.to_str().unwrap()]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
}

#[test]
fn seeded_runs_repeat() {
    let src = corpus("teleport.lq");
    let mut runs = Vec::new();
    for (i, extra) in [&[][..], &["--sequential"][..]].iter().enumerate() {
        let trace = scratch(&format!("trace{i}.jsonl"), "");
        let mut args = vec!["run", "--policy", "random", "--seed", "7", "--trace", trace.to_str().unwrap()];
        args.extend_from_slice(extra);
        args.push(src.to_str().unwrap());
        let o = lanq(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        runs.push((stdout(&o), fs::read(&trace).unwrap()));
    }
    assert_eq!(runs[0].0, runs[1].0);
    assert_eq!(runs[0].1, runs[1].1);
    let first = String::from_utf8(runs[0].1.clone()).unwrap();
    let rec: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert!(rec.get("rule").is_some(), "{rec}");
}
