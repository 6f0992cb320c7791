mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::*;
use finspec::checker::{enumerate_inputs, InputSpace};
use finspec::evaluator::{EvalMode, Evaluator};
use finspec::frontend::{parse_expression, printer::print_expr};
use finspec::semantics::{typecheck_expr, TypedSpec};
use finspec::values::Value;

fn eval(src: &str) -> Result<Value, String> {
    let spec = TypedSpec::default();
    let e = parse_expression(src, "expr").map_err(|e| e.to_string())?;
    let (te, slots) = typecheck_expr(&spec, &e).map_err(|e| e.to_string())?;
    let mut env = vec![Value::Bool(false); slots];
    let mut ev = Evaluator::new(&spec, EvalMode::Deterministic);
    let values = ev.eval_expr(&te, &mut env).map_err(|e| e.to_string())?;
    Ok(values.iter().next().unwrap())
}

fn set_src(xs: &BTreeSet<i64>) -> String {
    if xs.is_empty() {
        return "∅[ℤ[-9,9]]".to_string();
    }
    let items: Vec<String> = xs.iter().map(|x| format!("({x})")).collect();
    format!("{{{}}}", items.join(", "))
}

fn ints(v: &Value) -> BTreeSet<i64> {
    v.as_set().unwrap().iter().map(|x| x.as_int().unwrap()).collect()
}

/// Source text of small random formulas and terms.
fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0i64..20).prop_map(|n| n.to_string()),
        Just("x".to_string()),
        Just("y".to_string()),
        Just("⊤".to_string()),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "·", "=", "<", "∧", "∨", "⇒", "⇔"]))
                .prop_map(|(a, b, op)| format!("({a} {op} {b})")),
            inner.clone().prop_map(|a| format!("(¬{a})")),
            inner.clone().prop_map(|a| format!("(-{a})")),
            inner.clone().prop_map(|a| format!("(∀x:ℕ[2]. {a})")),
            inner.clone().prop_map(|a| format!("(∃y:ℕ[2] with x < y. {a})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("(if {a} then {b} else {a})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("(let x = {a} in {b})")),
        ]
    })
}

proptest! {
    #[test]
    fn arithmetic_matches_i64(a in -50i64..50, b in -50i64..50, c in 1i64..20) {
        let got = eval(&format!("({a}) + ({b}) · ({c}) - ({a}) / ({c}) + ({b}) % ({c})")).unwrap();
        let want = a + b * c - a.div_euclid(c) + b.rem_euclid(c);
        prop_assert_eq!(got, Value::Int(want));
    }

    #[test]
    fn set_algebra_matches_btreeset(
        xs in prop::collection::btree_set(-9i64..=9, 0..6),
        ys in prop::collection::btree_set(-9i64..=9, 0..6),
    ) {
        let (sx, sy) = (set_src(&xs), set_src(&ys));
        let union = ints(&eval(&format!("{sx} ∪ {sy}")).unwrap());
        prop_assert_eq!(union, xs.union(&ys).copied().collect::<BTreeSet<_>>());
        let inter = ints(&eval(&format!("{sx} ∩ {sy}")).unwrap());
        prop_assert_eq!(inter, xs.intersection(&ys).copied().collect::<BTreeSet<_>>());
        let diff = ints(&eval(&format!("{sx} \\ {sy}")).unwrap());
        prop_assert_eq!(diff, xs.difference(&ys).copied().collect::<BTreeSet<_>>());
        let sub = eval(&format!("{sx} ⊆ {sy}")).unwrap();
        prop_assert_eq!(sub, Value::Bool(xs.is_subset(&ys)));
        let card = eval(&format!("|{sx}|")).unwrap();
        prop_assert_eq!(card, Value::Int(xs.len() as i64));
    }

    #[test]
    fn random_access_matches_enumeration(n in 0i64..4, m in 0i64..3) {
        let src = format!(
            "type A = Array[2, ℕ[{m}]];\n\
             pred p(s:Set[ℕ[{m}]], b:Bool, a:A, k:ℤ[-1,{n}]) ⇔ true;\n"
        );
        let spec = load_source(&src, "p.fspec", &[]);
        let op = spec.op("p").unwrap();
        let space = InputSpace::new(op).unwrap();
        let all: Vec<Vec<Value>> = enumerate_inputs(op).unwrap().iter().collect();
        prop_assert_eq!(all.len() as u64, space.len());
        for (k, args) in all.iter().enumerate() {
            prop_assert_eq!(&space.get(k as u64), args);
        }
        prop_assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn expressions_round_trip(src in expr_source()) {
        let wrapped = format!("∀x:ℕ[2], y:ℕ[2]. {src} = {src}");
        let first = parse_expression(&wrapped, "a").unwrap();
        let printed = print_expr(&first);
        let second = parse_expression(&printed, "b").unwrap();
        prop_assert_eq!(print_expr(&second), printed.clone());
        let (mut a, mut b) = (first, second);
        a.clear_spans();
        b.clear_spans();
        prop_assert_eq!(a, b, "printed as {}", printed);
    }
}
