//! Acceptance run: one PASS/FAIL line per criterion on standard output.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use finspec::checker::{CheckReport, InputSpace};
use finspec::cli;
use finspec::evaluator::{EvalMode, Evaluator, Outcome, RuntimeErrorKind};
use finspec::frontend::pretty_print;
use finspec::scaffold::{render_suite, SpecSkeleton};
use finspec::semantics::SemType;
use finspec::values::{enumerate_type, Value};

type Verdict = Result<String, String>;

/// Every clean report produced along the way, for the conservation check.
static REPORTS: Mutex<Vec<CheckReport>> = Mutex::new(Vec::new());

fn keep(r: CheckReport) -> CheckReport {
    REPORTS.lock().unwrap().push(r.clone());
    r
}

fn expect_counts(r: &CheckReport, total: u64, checked: u64, inadmissible: u64) -> Result<(), String> {
    let got = (r.total_inputs, r.checked, r.inadmissible, r.is_clean());
    if got != (total, checked, inadmissible, true) {
        return Err(format!(
            "{}: expected {total} total / {checked} checked / {inadmissible} inadmissible, clean; \
             got {} / {} / {} ({:?})",
            r.operation, r.total_inputs, r.checked, r.inadmissible, r.first_error
        ));
    }
    Ok(())
}

fn within(what: &str, start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    if t > limit {
        return Err(format!("{what} took {t:?}, limit {limit:?}"));
    }
    Ok(())
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let spec = load("gcd", GCD);
    let (nd, transcript) = run_check(&spec, "gcd", EvalMode::Nondeterministic, true, 1);
    let nd = keep(nd);
    expect_counts(&nd, 441, 440, 1)?;
    let expected = "Executing gcd(ℤ,ℤ) with all 441 inputs.\n\
        Execution completed for ALL inputs (<ms> ms, 440 checked, 1 inadmissible).\n";
    if mask_timing(&transcript) != expected {
        return Err(format!("unexpected transcript:\n{transcript}"));
    }
    let det = keep(check_silent(&spec, "gcd"));
    expect_counts(&det, 441, 440, 1)?;
    within("gcd", start, Duration::from_secs(10))?;
    Ok("gcd N=20: 440 checked, 1 inadmissible in both modes".into())
}

fn criterion_2() -> Verdict {
    let spec = load("gcd", GCD);
    for (op, total, checked, inadmissible) in [
        ("gcd0", 21, 21, 0),
        ("gcd1", 441, 441, 0),
        ("gcd2", 441, 441, 0),
        ("gcdp", 441, 440, 1),
    ] {
        let start = Instant::now();
        let r = keep(check_silent(&spec, op));
        expect_counts(&r, total, checked, inadmissible)?;
        within(op, start, Duration::from_secs(10))?;
    }
    Ok("gcd0, gcd1, gcd2 and gcdp pass".into())
}

fn criterion_3() -> Verdict {
    let src = mutated_gcd_source();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("gcd_mutated.fspec");
    std::fs::write(&path, &src).map_err(|e| e.to_string())?;

    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(
        ["finspec", "check", path.to_str().unwrap(), "--op", "gcdp", "--const", "N=20"],
        &mut out,
        &mut err,
    );
    if code != 1 {
        return Err(format!("exit code {code}, stderr: {}", String::from_utf8_lossy(&err)));
    }
    let ensures_line = src
        .lines()
        .position(|l| l.trim() == "ensures result = gcd(m,n);")
        .ok_or("ensures clause not found")?
        + 1;
    let expected = format!(
        "Executing gcdp(ℤ,ℤ) with all 441 inputs.\n\
         Ignoring inadmissible inputs...\n\
         ERROR in execution of gcdp(0,1): evaluation of\n  \
         ensures result = gcd(m, n);\n\
         at line {ensures_line} in file gcd_mutated.fspec:\n  \
         postcondition is violated by result 0\n\
         ERROR encountered in execution.\n"
    );
    let out = String::from_utf8(out).unwrap();
    if out != expected {
        return Err(format!("unexpected transcript:\n{out}"));
    }

    let spec = load_source(&src, "gcd_mutated.fspec", GCD);
    let r = check_silent(&spec, "gcdp");
    let failure = r.first_error.ok_or("no error reported")?;
    let want_kind = RuntimeErrorKind::PostconditionViolated {
        op: "gcdp".into(),
        args: "0,1".into(),
        result: "0".into(),
    };
    if failure.args != vec![Value::Int(0), Value::Int(1)]
        || failure.index != 1
        || failure.error.kind != want_kind
        || failure.error.text.as_deref() != Some("ensures result = gcd(m, n);")
    {
        return Err(format!("unexpected failure {failure:?}"));
    }
    Ok("mutated gcdp fails at (0,1) with result 0, exit code 1".into())
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let spec = load("max", MAX);
    let mut expected = vec![
        ("postNotValid", 875, 875, 0),
        ("postSat", 875, 875, 0),
        ("resultUnique", 21875, 21875, 0),
        ("maxFun", 875, 155, 720),
        ("maxProc", 875, 155, 720),
    ];
    for vc in ["VC1", "VC2", "VC3", "VC4", "VC5"] {
        expected.push((vc, 30625, 5425, 25200));
    }
    for (op, total, checked, inadmissible) in expected {
        let r = keep(check_silent(&spec, op));
        expect_counts(&r, total, checked, inadmissible)?;
    }
    within("max corpus", start, Duration::from_secs(60))?;
    Ok("max N=3 M=2: validation theorems, maxFun, maxProc and VC1-VC5 match".into())
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let spec = load("primes", PRIMES);
    for (op, total, checked) in [
        ("leastProperDivisor", 961, 961),
        ("SieveOfEratosthenesSet", 31, 31),
        ("SieveOfEratosthenesArray", 31, 31),
    ] {
        let r = keep(check_silent(&spec, op));
        expect_counts(&r, total, checked, 0)?;
    }
    within("primes corpus", start, Duration::from_secs(30))?;
    Ok("primes N=30: divisor theorem and both sieves pass".into())
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let spec = load("closure", CLOSURE);
    for op in [
        "transitiveClosureExists",
        "transitiveClosureIsUnique",
        "transitiveClosureR",
        "transitiveClosureCorrectness",
        "transitiveClosureP",
    ] {
        let r = keep(check_silent(&spec, op));
        expect_counts(&r, 512, 512, 0)?;
    }
    let input = relation(&[(1, 0), (0, 1), (2, 1), (0, 2)]);
    let idx = spec.op_index("transitiveClosureI").ok_or("no transitiveClosureI")?;
    let got = Evaluator::new(&spec, EvalMode::Deterministic)
        .invoke_operation(idx, &[input])
        .map_err(|e| e.to_string())?;
    let full: BTreeSet<(i64, i64)> = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).collect();
    match got {
        Outcome::Results(vs) if vs.len() == 1 && pairs(&vs[0]) == full => {}
        other => return Err(format!("transitiveClosureI gave {other:?}")),
    }
    within("closure corpus", start, Duration::from_secs(120))?;
    Ok("closure N=2: theorems and all three definitions pass on 512 relations".into())
}

/// (a) The deterministic result is the first nondeterministic branch.
fn property_a() -> Result<u64, String> {
    let mut compared = 0;
    for (name, consts) in corpora() {
        let spec = load(name, consts);
        let mut det = Evaluator::new(&spec, EvalMode::Deterministic);
        let mut nd = Evaluator::new(&spec, EvalMode::Nondeterministic);
        for (i, op) in spec.ops.iter().enumerate() {
            if !op.has_params() {
                continue;
            }
            let space = InputSpace::new(op).map_err(|e| e.to_string())?;
            for k in 0..space.len() {
                let args = space.get(k);
                match (det.invoke_operation(i, &args), nd.invoke_operation(i, &args)) {
                    (Ok(Outcome::Inadmissible), Ok(Outcome::Inadmissible)) => {}
                    (Ok(Outcome::Results(d)), Ok(Outcome::Results(n)))
                        if d.len() == 1 && n.first() == d.first() =>
                    {
                        compared += 1
                    }
                    (Err(a), Err(b)) if a == b => {}
                    (d, n) => {
                        return Err(format!("{}{:?}: deterministic {d:?}, nondeterministic {n:?}", op.name, args))
                    }
                }
            }
        }
    }
    Ok(compared)
}

/// (b) Clean reports account for every input.
fn property_b() -> Result<usize, String> {
    let reports = REPORTS.lock().unwrap();
    for r in reports.iter().filter(|r| r.is_clean()) {
        if r.checked + r.inadmissible != r.total_inputs {
            return Err(format!("{}: {} + {} ≠ {}", r.operation, r.checked, r.inadmissible, r.total_inputs));
        }
    }
    if reports.is_empty() {
        return Err("no reports collected".into());
    }
    Ok(reports.len())
}

/// (c) Reports and transcripts do not depend on the number of workers.
fn property_c() -> Result<(), String> {
    let gcd = load("gcd", GCD);
    let mutated = load_source(&mutated_gcd_source(), "gcd_mutated.fspec", GCD);
    let max = load("max", MAX);
    let closure = load("closure", CLOSURE);
    let primes = load("primes", PRIMES);
    let cases = [
        (&gcd, "gcd", EvalMode::Nondeterministic, false),
        (&gcd, "gcdp", EvalMode::Deterministic, false),
        (&mutated, "gcdp", EvalMode::Deterministic, false),
        (&mutated, "gcdp", EvalMode::Nondeterministic, true),
        (&max, "VC3", EvalMode::Deterministic, true),
        (&primes, "SieveOfEratosthenesSet", EvalMode::Nondeterministic, false),
        (&closure, "transitiveClosureR", EvalMode::Deterministic, false),
    ];
    for (spec, op, mode, silent) in cases {
        let (mut base, base_text) = run_check(spec, op, mode, silent, 1);
        base.elapsed_ms = 0;
        for workers in [2, 4, 8] {
            let (mut r, text) = run_check(spec, op, mode, silent, workers);
            r.elapsed_ms = 0;
            if r != base || mask_timing(&text) != mask_timing(&base_text) {
                return Err(format!("{op} with {workers} workers differs from 1 worker"));
            }
        }
    }
    let (r, _) = run_check(&mutated, "gcdp", EvalMode::Deterministic, true, 8);
    match r.first_error {
        Some(f) if f.index == 1 => Ok(()),
        other => Err(format!("mutated gcdp with 8 workers: {other:?}")),
    }
}

/// (d) The implicit, recursive and procedural closures agree with Warshall.
fn property_d() -> Result<(), String> {
    let spec = load("closure", CLOSURE);
    let ops: Vec<usize> = ["transitiveClosureI", "transitiveClosureR", "transitiveClosureP"]
        .iter()
        .map(|n| spec.op_index(n).unwrap())
        .collect();
    let space = InputSpace::new(&spec.ops[ops[0]]).map_err(|e| e.to_string())?;
    if space.len() != 512 {
        return Err(format!("{} relations instead of 512", space.len()));
    }
    let mut ev = Evaluator::new(&spec, EvalMode::Deterministic);
    for k in 0..space.len() {
        let args = space.get(k);
        let want = warshall(&pairs(&args[0]), 2);
        for &op in &ops {
            match ev.invoke_operation(op, &args) {
                Ok(Outcome::Results(vs)) if vs.len() == 1 && pairs(&vs[0]) == want => {}
                other => return Err(format!("{}({}) gave {other:?}", spec.ops[op].name, args[0])),
            }
        }
    }
    Ok(())
}

fn random_type(rng: &mut StdRng, depth: u32) -> SemType {
    let pick = if depth == 0 { rng.gen_range(0..2) } else { rng.gen_range(0..7) };
    match pick {
        0 => SemType::Bool,
        1 => {
            let lo = rng.gen_range(-3..3);
            SemType::Int { lo, hi: lo + rng.gen_range(0..5) }
        }
        2 => SemType::Set(Box::new(random_type(rng, depth - 1))),
        3 => SemType::Tuple((0..rng.gen_range(1..4)).map(|_| random_type(rng, depth - 1)).collect()),
        4 => SemType::Record(
            (0..rng.gen_range(1..3))
                .map(|i| (format!("f{i}"), random_type(rng, depth - 1)))
                .collect(),
        ),
        5 => SemType::Array(rng.gen_range(0..4), Box::new(random_type(rng, depth - 1))),
        _ => SemType::Map(
            Box::new(random_type(rng, depth - 1)),
            Box::new(random_type(rng, depth - 1)),
        ),
    }
}

/// (e) Cardinality equals the length of the canonical enumeration.
fn property_e() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut tested = 0;
    while tested < 50 {
        let t = random_type(&mut rng, 3);
        let Some(want) = oracle_cardinality(&t) else { continue };
        if want > 100_000 {
            continue;
        }
        let card = t.cardinality().map_err(|e| format!("{t}: {e}"))?;
        let values: Vec<Value> = enumerate_type(&t).iter().collect();
        if card != want || values.len() as u128 != want {
            return Err(format!("{t}: oracle {want}, cardinality {card}, enumerated {}", values.len()));
        }
        if let Some(w) = values.windows(2).find(|w| w[0] >= w[1]) {
            return Err(format!("{t}: {} is not before {}", w[0], w[1]));
        }
        if let Some(v) = values.iter().find(|v| !t.contains(v)) {
            return Err(format!("{t}: enumerated {v} outside the type"));
        }
        tested += 1;
    }
    Ok(())
}

/// (f) Printing and re-parsing every corpus file gives back the same tree.
fn property_f() -> Result<(), String> {
    for (name, _) in corpora() {
        let mut first = parse(&corpus_source(name), name);
        let text = pretty_print(&first);
        let mut second = parse(&text, name);
        if pretty_print(&second) != text {
            return Err(format!("{name}: printing is not stable"));
        }
        first.decls.iter_mut().for_each(|d| d.clear_spans());
        second.decls.iter_mut().for_each(|d| d.clear_spans());
        if first != second {
            return Err(format!("{name}: re-parsed tree differs"));
        }
    }
    Ok(())
}

fn criterion_7() -> Verdict {
    let compared = property_a().map_err(|e| format!("(a) {e}"))?;
    let reports = property_b().map_err(|e| format!("(b) {e}"))?;
    property_c().map_err(|e| format!("(c) {e}"))?;
    property_d().map_err(|e| format!("(d) {e}"))?;
    property_e().map_err(|e| format!("(e) {e}"))?;
    property_f().map_err(|e| format!("(f) {e}"))?;
    Ok(format!(
        "properties a-f hold ({compared} admissible runs compared, {reports} reports conserved)"
    ))
}

fn criterion_8() -> Verdict {
    let src = corpus_source("max");
    let skel = SpecSkeleton::from_spec(&parse(&src, "max.fspec"), "Pre", "Post")
        .map_err(|e| e.to_string())?;
    let extended = format!("{src}\n{}", render_suite(&skel));
    let spec = load_source(&extended, "max_suite.fspec", MAX);
    for (generated, written, total, checked) in [
        ("Post_postNotValid", "postNotValid", 875, 875),
        ("Post_postSat", "postSat", 875, 875),
        ("Post_resultUnique", "resultUnique", 21875, 21875),
    ] {
        let g = keep(check_silent(&spec, generated));
        let w = check_silent(&spec, written);
        expect_counts(&g, total, checked, 0)?;
        if (g.total_inputs, g.checked, g.inadmissible) != (w.total_inputs, w.checked, w.inadmissible) {
            return Err(format!("{generated} differs from {written}"));
        }
    }
    let f = keep(check_silent(&spec, "Post_Fun"));
    expect_counts(&f, 875, 155, 720)?;
    Ok("generated suite for (Pre, Post) reproduces the max counts".into())
}

#[test]
fn acceptance_criteria() {
    let criteria: [(u32, fn() -> Verdict); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (8, criterion_8),
        (7, criterion_7),
    ];
    let mut results = Vec::new();
    for (n, run) in criteria {
        let verdict = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        results.push((n, verdict));
    }
    results.sort_by_key(|(n, _)| *n);
    let mut stdout = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (n, verdict) in &results {
        let line = match verdict {
            Ok(detail) => format!("PASS criterion {n}: {detail}"),
            Err(why) => {
                failed.push(*n);
                format!("FAIL criterion {n}: {why}")
            }
        };
        let _ = writeln!(stdout, "{line}");
    }
    let _ = stdout.flush();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
