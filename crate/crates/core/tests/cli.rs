mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;

fn finspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn corpus(name: &str) -> String {
    corpus_path(name).to_str().unwrap().to_string()
}

fn mutated_file(dir: &Path) -> PathBuf {
    let path = dir.join("gcd_mutated.fspec");
    std::fs::write(&path, mutated_gcd_source()).unwrap();
    path
}

#[test]
fn silent_nondeterministic_gcd() {
    let o = finspec(&["check", &corpus("gcd"), "--op", "gcd", "--const", "N=20", "--silent", "--nondet"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(mask_timing(&stdout(&o)), golden("gcd_nondet_silent.txt"));
}

#[test]
fn mutated_gcdp_reports_the_violated_postcondition() {
    let dir = tempfile::tempdir().unwrap();
    let file = mutated_file(dir.path());
    let o = finspec(&["check", file.to_str().unwrap(), "--op", "gcdp", "--const", "N=20"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(mask_timing(&stdout(&o)), golden("gcdp_mutated.txt"));
}

#[test]
fn branch_and_progress_lines() {
    let o = finspec(&[
        "run", &corpus("gcd"), "--op", "gcd", "--const", "N=2", "--nondet", "--progress", "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(mask_timing(&stdout(&o)), golden("gcd_n2_branches.txt"));
}

#[test]
fn run_ignores_silent() {
    let args = ["run", &corpus("gcd"), "--op", "gcd0", "--const", "N=3"];
    let o = finspec(&args);
    assert_eq!(mask_timing(&stdout(&o)), golden("gcd0_n3_runs.txt"));
    let mut silent = args.to_vec();
    silent.push("--silent");
    assert_eq!(mask_timing(&stdout(&finspec(&silent))), golden("gcd0_n3_runs.txt"));
}

#[test]
fn repeated_runs_are_identical() {
    let args = ["run", &corpus("primes"), "--op", "SieveOfEratosthenesSet", "--const", "N=12", "--nondet"];
    let a = mask_timing(&stdout(&finspec(&args)));
    let b = mask_timing(&stdout(&finspec(&args)));
    assert_eq!(a, b);
    assert!(a.contains("Result: {2,3,5,7,11}"));
}

#[test]
fn usage_errors() {
    let gcd = corpus("gcd");
    for args in [
        vec!["check", gcd.as_str(), "--op", "nosuch"],
        vec!["check", gcd.as_str()],
        vec!["check", gcd.as_str(), "--op", "gcd", "--const", "N=-1"],
        vec!["check", gcd.as_str(), "--op", "gcd", "--workers", "0"],
        vec!["frobnicate"],
    ] {
        let o = finspec(&args);
        assert_eq!(o.status.code(), Some(3), "{args:?}");
        assert!(!o.stderr.is_empty());
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn specification_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("lex.fspec", "val N: ℕ;\nfun f(x:ℕ[N]): ℕ[N] = x @ 1;\n"),
        ("parse.fspec", "val N: ℕ;\nfun f(x:ℕ[N]): ℕ[N] = x +;\n"),
        ("type.fspec", "fun f(x:ℕ[3]): ℕ[3] = y;\n"),
        ("measure.fspec", "fun f(x:ℕ[3]): ℕ[3] = if x = 0 then 0 else f(x-1);\n"),
    ];
    for (name, src) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, src).unwrap();
        let o = finspec(&["typecheck", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(name), "{name}: {err}");
    }
    let o = finspec(&["check", &corpus("gcd"), "--op", "gcd", "--const", "K=3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = finspec(&["parse", "/nonexistent/file.fspec"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn false_parameterless_theorem_is_a_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.fspec");
    std::fs::write(&path, "theorem wrong ⇔ ∀x:ℕ[3]. x < 3;\npred p(x:ℕ[3]) ⇔ x > 0;\n").unwrap();
    let o = finspec(&["check", path.to_str().unwrap(), "--op", "p"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn parse_prints_a_reparsable_file() {
    let o = finspec(&["parse", &corpus("closure")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let again = parse(&text, "printed");
    assert_eq!(finspec::frontend::pretty_print(&again), text);
}

#[test]
fn list_ops_shows_signatures() {
    let o = finspec(&["list-ops", &corpus("gcd")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("gcd_list_ops.txt"));
}

#[test]
fn typecheck_reports_constants() {
    let o = finspec(&["typecheck", &corpus("max"), "--const", "N=3", "--default", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("N = 3\n"), "{text}");
    assert!(text.contains("M = 2\n"), "{text}");
}

#[test]
fn scaffold_prints_and_appends() {
    let max = corpus("max");
    let o = finspec(&["scaffold", &max, "--pre", "Pre", "--post", "Post"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("max_scaffold.txt"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("max_suite.fspec");
    let before = std::fs::read_to_string(&max).unwrap();
    let o = finspec(&["scaffold", &max, "--pre", "Pre", "--post", "Post", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&max).unwrap(), before);
    let written = std::fs::read_to_string(&out).unwrap();
    assert!(written.starts_with(&before));

    let o = finspec(&[
        "check", out.to_str().unwrap(), "--op", "Post_postSat", "--const", "N=3", "--const", "M=2", "--silent",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("875 checked, 0 inadmissible"));

    let o = finspec(&["scaffold", &max, "--pre", "Pre", "--post", "Nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trivial_postcondition_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trivial.fspec");
    std::fs::write(&path, "type T = ℕ[2];\npred P(x:T) ⇔ true;\npred Q(x:T, y:T) ⇔ true;\n").unwrap();
    let out = dir.path().join("suite.fspec");
    let o = finspec(&["scaffold", path.to_str().unwrap(), "--pre", "P", "--post", "Q", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = finspec(&["check", out.to_str().unwrap(), "--op", "Q_postNotValid", "--silent"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("ERROR in execution of Q_postNotValid(0)"), "{}", stdout(&o));
}
