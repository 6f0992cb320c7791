use std::collections::BTreeMap;

use super::*;
use crate::frontend::{parse_expression, parse_source};
use crate::semantics::{elaborate, typecheck_expr};

fn corpus(name: &str, consts: &[(&str, i64)]) -> TypedSpec {
    let path = format!("{}/../../corpus/{name}.fspec", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(path).unwrap();
    let spec = parse_source(&src, &format!("{name}.fspec")).unwrap();
    let overrides: BTreeMap<String, i64> =
        consts.iter().map(|(n, v)| (n.to_string(), *v)).collect();
    elaborate(&spec, &overrides, 5).unwrap()
}

fn eval_in(spec: &TypedSpec, src: &str) -> std::result::Result<Value, RuntimeError> {
    let e = parse_expression(src, "expr").unwrap();
    let (te, slots) = typecheck_expr(spec, &e).unwrap();
    let mut env = vec![Value::Bool(false); slots];
    Evaluator::new(spec, EvalMode::Deterministic).eval(&te, &mut env)
}

fn int(i: i64) -> Value {
    Value::Int(i)
}

fn run(spec: &TypedSpec, op: &str, args: &[Value], mode: EvalMode) -> Outcome {
    let idx = spec.op_index(op).unwrap();
    Evaluator::new(spec, mode).invoke_operation(idx, args).unwrap()
}

#[test]
fn sum_of_odd_squares() {
    let spec = TypedSpec::default();
    // 1 + 9 + 25
    assert_eq!(eval_in(&spec, "∑ x:ℕ[5] with x%2 ≠ 0. x·x"), Ok(int(35)));
}

#[test]
fn arithmetic_conventions() {
    let spec = TypedSpec::default();
    assert_eq!(eval_in(&spec, "-7 % 3"), Ok(int(2)));
    assert_eq!(eval_in(&spec, "-7 / 3"), Ok(int(-3)));
    assert_eq!(eval_in(&spec, "2^10"), Ok(int(1024)));
    let e = eval_in(&spec, "1 / 0").unwrap_err();
    assert_eq!(e.kind, RuntimeErrorKind::DivisionByZero);
    let e = eval_in(&spec, "2^((7+1)^2)").unwrap_err();
    assert_eq!(e.kind, RuntimeErrorKind::Overflow);
    assert_eq!(eval_in(&spec, "|3..1|"), Ok(int(0)));
}

#[test]
fn choose_without_witness() {
    let spec = TypedSpec::default();
    let e = eval_in(&spec, "choose x:ℕ[3] with x > 5").unwrap_err();
    assert_eq!(e.kind, RuntimeErrorKind::NoChoice);
}

#[test]
fn gcd_choice_matches_brute_force() {
    let spec = corpus("gcd", &[("N", 20)]);
    let (m, n) = (12, 8);
    let expected = (1..=20).filter(|d| m % d == 0 && n % d == 0).max().unwrap();
    assert_eq!(eval_in(&spec, "gcd(12, 8)"), Ok(int(expected)));
    assert_eq!(run(&spec, "gcd", &[int(20), int(20)], EvalMode::Deterministic), Outcome::Results(vec![int(20)]));
    assert_eq!(run(&spec, "gcd", &[int(1), int(0)], EvalMode::Nondeterministic), Outcome::Results(vec![int(1)]));
    assert_eq!(run(&spec, "gcd", &[int(0), int(0)], EvalMode::Deterministic), Outcome::Inadmissible);
}

#[test]
fn transitivity() {
    let spec = corpus("closure", &[("N", 2)]);
    assert_eq!(eval_in(&spec, "isTransitive({⟨0,1⟩,⟨1,2⟩})"), Ok(Value::Bool(false)));
    assert_eq!(eval_in(&spec, "isTransitive({⟨0,1⟩,⟨1,2⟩,⟨0,2⟩})"), Ok(Value::Bool(true)));
}

#[test]
fn euclid_measure_trace() {
    let spec = corpus("gcd", &[("N", 20)]);
    let idx = spec.op_index("gcdp").unwrap();
    let mut ev = Evaluator::new(&spec, EvalMode::Deterministic);
    ev.record_measures();
    let out = ev.invoke_operation(idx, &[int(12), int(8)]).unwrap();
    assert_eq!(out, Outcome::Results(vec![int(4)]));
    assert_eq!(ev.take_measures(), vec![vec![20, 12, 4]]);
}

#[test]
fn broken_invariant_fails_before_first_iteration() {
    let path = format!("{}/../../corpus/gcd.fspec", env!("CARGO_MANIFEST_DIR"));
    let src = std::fs::read_to_string(path)
        .unwrap()
        .replace("invariant gcd(a,b) = gcd(old_a,old_b);", "invariant gcd(a,b) = 0;");
    let spec = parse_source(&src, "gcd.fspec").unwrap();
    let overrides = BTreeMap::from([("N".to_string(), 20)]);
    let spec = elaborate(&spec, &overrides, 5).unwrap();
    let idx = spec.op_index("gcdp").unwrap();
    let err = Evaluator::new(&spec, EvalMode::Deterministic)
        .invoke_operation(idx, &[int(1), int(1)])
        .unwrap_err();
    assert_eq!(err.kind, RuntimeErrorKind::InvariantViolated { iteration: 0 });
    assert_eq!(err.text.as_deref(), Some("invariant gcd(a, b) = 0;"));
}

#[test]
fn set_sieve_on_ten() {
    let spec = corpus("primes", &[("N", 30)]);
    let out = run(&spec, "SieveOfEratosthenesSet", &[int(10)], EvalMode::Deterministic);
    let primes = Value::set_from(vec![int(2), int(3), int(5), int(7)]);
    assert_eq!(out, Outcome::Results(vec![primes]));
}

#[test]
fn closure_of_sample_relation() {
    let spec = corpus("closure", &[("N", 2)]);
    let pair = |a, b| Value::tuple(vec![int(a), int(b)]);
    let r = Value::set_from(vec![pair(1, 0), pair(0, 1), pair(2, 1), pair(0, 2)]);
    let full: Vec<Value> = (0..3).flat_map(|a| (0..3).map(move |b| pair(a, b))).collect();
    let out = run(&spec, "transitiveClosureI", &[r], EvalMode::Deterministic);
    assert_eq!(out, Outcome::Results(vec![Value::set_from(full)]));
}

#[test]
fn print_goes_to_side_channel() {
    let spec = TypedSpec::default();
    let e = parse_expression("print 1 + 2", "expr").unwrap();
    let (te, slots) = typecheck_expr(&spec, &e).unwrap();
    let mut ev = Evaluator::new(&spec, EvalMode::Deterministic);
    let v = ev.eval(&te, &mut vec![Value::Bool(false); slots]).unwrap();
    assert_eq!(v, int(3));
    assert_eq!(ev.take_printed(), vec!["print: 3".to_string()]);
}

#[test]
fn nondeterministic_choice_yields_all_witnesses() {
    let spec = TypedSpec::default();
    let e = parse_expression("(choose x:ℕ[4] with x % 2 = 0) + 1", "expr").unwrap();
    let (te, slots) = typecheck_expr(&spec, &e).unwrap();
    let mut ev = Evaluator::new(&spec, EvalMode::Nondeterministic);
    let seq = ev.eval_expr(&te, &mut vec![Value::Bool(false); slots]).unwrap();
    assert_eq!(seq.to_vec(), vec![int(1), int(3), int(5)]);
}
