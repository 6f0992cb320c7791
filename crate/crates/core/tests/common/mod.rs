#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use finspec::checker::{check_operation, CheckOptions, CheckReport};
use finspec::evaluator::EvalMode;
use finspec::frontend::{ast::Spec, parse_source};
use finspec::semantics::{elaborate, SemType, TypedSpec};
use finspec::values::Value;

pub const MUTATED_RETURN: &str = "return if a = 0 then 0 else a;";
pub const ORIGINAL_RETURN: &str = "return if a = 0 then b else a;";

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(format!("{name}.fspec"))
}

pub fn corpus_source(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).expect("corpus file")
}

/// The gcd corpus with Euclid's return statement broken.
pub fn mutated_gcd_source() -> String {
    let src = corpus_source("gcd");
    assert!(src.contains(ORIGINAL_RETURN));
    src.replace(ORIGINAL_RETURN, MUTATED_RETURN)
}

pub fn parse(src: &str, file: &str) -> Spec {
    parse_source(src, file).unwrap_or_else(|e| panic!("{file}: {e}"))
}

pub fn typed(spec: &Spec, consts: &[(&str, i64)]) -> TypedSpec {
    let overrides: BTreeMap<String, i64> =
        consts.iter().map(|(n, v)| (n.to_string(), *v)).collect();
    elaborate(spec, &overrides, 5).unwrap_or_else(|e| panic!("{e}"))
}

pub fn load(name: &str, consts: &[(&str, i64)]) -> TypedSpec {
    let file = format!("{name}.fspec");
    typed(&parse(&corpus_source(name), &file), consts)
}

pub fn load_source(src: &str, file: &str, consts: &[(&str, i64)]) -> TypedSpec {
    typed(&parse(src, file), consts)
}

pub const GCD: &[(&str, i64)] = &[("N", 20)];
pub const MAX: &[(&str, i64)] = &[("N", 3), ("M", 2)];
pub const PRIMES: &[(&str, i64)] = &[("N", 30)];
pub const CLOSURE: &[(&str, i64)] = &[("N", 2)];

pub fn corpora() -> Vec<(&'static str, &'static [(&'static str, i64)])> {
    vec![("gcd", GCD), ("max", MAX), ("primes", PRIMES), ("closure", CLOSURE)]
}

/// Runs the checker and returns the report with its transcript.
pub fn run_check(
    spec: &TypedSpec,
    op: &str,
    mode: EvalMode,
    silent: bool,
    workers: usize,
) -> (CheckReport, String) {
    let opts = CheckOptions {
        operation_name: op.to_string(),
        mode,
        silent,
        workers,
        progress_every: 0,
    };
    let mut out = Vec::new();
    let report = check_operation(spec, &opts, &mut out).unwrap_or_else(|e| panic!("{e}"));
    (report, String::from_utf8(out).unwrap())
}

pub fn check_silent(spec: &TypedSpec, op: &str) -> CheckReport {
    run_check(spec, op, EvalMode::Deterministic, true, 1).0
}

/// Replaces the millisecond count in completion lines by `<ms>`.
pub fn mask_timing(text: &str) -> String {
    text.lines()
        .map(|line| match (line.find(" inputs ("), line.find(" ms,")) {
            (Some(open), Some(ms)) if open < ms => {
                let start = open + " inputs (".len();
                format!("{}<ms>{}", &line[..start], &line[ms..])
            }
            _ => line.to_string(),
        })
        .map(|l| l + "\n")
        .collect()
}

pub fn pairs(set: &Value) -> BTreeSet<(i64, i64)> {
    set.as_set()
        .expect("a relation")
        .iter()
        .map(|p| match p {
            Value::Tuple(xs) => (xs[0].as_int().unwrap(), xs[1].as_int().unwrap()),
            other => panic!("not a pair: {other}"),
        })
        .collect()
}

pub fn relation(pairs: &[(i64, i64)]) -> Value {
    Value::set_from(
        pairs
            .iter()
            .map(|&(a, b)| Value::tuple(vec![Value::Int(a), Value::Int(b)]))
            .collect(),
    )
}

/// Transitive closure by Warshall's algorithm over `0..=n`.
pub fn warshall(r: &BTreeSet<(i64, i64)>, n: i64) -> BTreeSet<(i64, i64)> {
    let size = (n + 1) as usize;
    let mut m = vec![vec![false; size]; size];
    for &(a, b) in r {
        m[a as usize][b as usize] = true;
    }
    for k in 0..size {
        for i in 0..size {
            for j in 0..size {
                if m[i][k] && m[k][j] {
                    m[i][j] = true;
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for (i, row) in m.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x {
                out.insert((i as i64, j as i64));
            }
        }
    }
    out
}

/// Number of values of a type, computed without the library.
pub fn oracle_cardinality(t: &SemType) -> Option<u128> {
    Some(match t {
        SemType::Bool => 2,
        SemType::Int { lo, hi } => {
            if hi < lo {
                0
            } else {
                (*hi as i128 - *lo as i128 + 1) as u128
            }
        }
        SemType::Set(e) => {
            let c = oracle_cardinality(e)?;
            if c >= 127 {
                return None;
            }
            1u128 << c
        }
        SemType::Tuple(ts) => ts
            .iter()
            .try_fold(1u128, |acc, t| acc.checked_mul(oracle_cardinality(t)?))?,
        SemType::Record(fs) => fs
            .iter()
            .try_fold(1u128, |acc, (_, t)| acc.checked_mul(oracle_cardinality(t)?))?,
        SemType::Array(n, e) => {
            let c = oracle_cardinality(e)?;
            (0..*n).try_fold(1u128, |acc, _| acc.checked_mul(c))?
        }
        SemType::Map(d, c) => {
            let d = oracle_cardinality(d)?;
            let c = oracle_cardinality(c)?;
            if d > 128 {
                return None;
            }
            (0..d).try_fold(1u128, |acc, _| acc.checked_mul(c))?
        }
    })
}
