use std::sync::Arc;

use super::{LazySeq, Value};
use crate::semantics::SemType;

/// Position within the canonical enumeration of a type.
#[derive(Debug, Clone)]
enum State {
    Bool(bool),
    Int(i64),
    /// Tuple, record, array and map components; the last varies fastest.
    Product(Vec<State>),
    /// Ascending indices into the element domain.
    Set(Arc<Vec<Value>>, Vec<usize>),
}

/// A stateful walk over the values of a type in canonical order.
#[derive(Debug, Clone)]
pub struct TypeCursor {
    ty: Arc<SemType>,
    state: Option<State>,
    started: bool,
}

impl TypeCursor {
    pub fn new(ty: &SemType) -> TypeCursor {
        TypeCursor {
            ty: Arc::new(ty.clone()),
            state: None,
            started: false,
        }
    }
}

impl Iterator for TypeCursor {
    type Item = Value;

    fn next(&mut self) -> Option<Value> {
        if !self.started {
            self.started = true;
            self.state = first(&self.ty);
        } else if let Some(s) = self.state.as_mut() {
            if !advance(&self.ty, s) {
                self.state = None;
            }
        }
        self.state.as_ref().map(|s| build(&self.ty, s))
    }
}

fn components(t: &SemType) -> Vec<&SemType> {
    match t {
        SemType::Tuple(ts) => ts.iter().collect(),
        SemType::Record(fs) => fs.iter().map(|(_, t)| t).collect(),
        SemType::Array(n, e) => vec![&**e; *n],
        _ => Vec::new(),
    }
}

fn first(t: &SemType) -> Option<State> {
    match t {
        SemType::Bool => Some(State::Bool(false)),
        SemType::Int { lo, hi } => (lo <= hi).then_some(State::Int(*lo)),
        SemType::Set(e) => Some(State::Set(Arc::new(materialize(e)), Vec::new())),
        SemType::Map(d, c) => {
            let n = materialize(d).len();
            let mut parts = Vec::with_capacity(n);
            for _ in 0..n {
                parts.push(first(c)?);
            }
            Some(State::Product(parts))
        }
        _ => components(t)
            .into_iter()
            .map(first)
            .collect::<Option<Vec<_>>>()
            .map(State::Product),
    }
}

fn advance(t: &SemType, s: &mut State) -> bool {
    match (t, s) {
        (SemType::Bool, State::Bool(b)) => {
            if *b {
                false
            } else {
                *b = true;
                true
            }
        }
        (SemType::Int { hi, .. }, State::Int(i)) => {
            if *i < *hi {
                *i += 1;
                true
            } else {
                false
            }
        }
        (SemType::Set(_), State::Set(elems, idx)) => next_subset(elems.len(), idx),
        (SemType::Map(_, c), State::Product(parts)) => {
            let comps = vec![&**c; parts.len()];
            advance_product(&comps, parts)
        }
        (t, State::Product(parts)) => advance_product(&components(t), parts),
        _ => false,
    }
}

fn advance_product(comps: &[&SemType], parts: &mut [State]) -> bool {
    for k in (0..parts.len()).rev() {
        if advance(comps[k], &mut parts[k]) {
            return true;
        }
        match first(comps[k]) {
            Some(s) => parts[k] = s,
            None => return false,
        }
    }
    false
}

/// Next index combination, by size and then lexicographically.
fn next_subset(n: usize, idx: &mut Vec<usize>) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    if k < n {
        *idx = (0..=k).collect();
        true
    } else {
        false
    }
}

fn build(t: &SemType, s: &State) -> Value {
    match (t, s) {
        (_, State::Bool(b)) => Value::Bool(*b),
        (_, State::Int(i)) => Value::Int(*i),
        (_, State::Set(elems, idx)) => {
            Value::Set(Arc::new(idx.iter().map(|&i| elems[i].clone()).collect()))
        }
        (SemType::Tuple(ts), State::Product(parts)) => {
            Value::tuple(ts.iter().zip(parts).map(|(t, s)| build(t, s)).collect())
        }
        (SemType::Array(_, e), State::Product(parts)) => {
            Value::array(parts.iter().map(|s| build(e, s)).collect())
        }
        (SemType::Record(fs), State::Product(parts)) => Value::Record(Arc::new(
            fs.iter()
                .zip(parts)
                .map(|((n, t), s)| (Arc::from(n.as_str()), build(t, s)))
                .collect(),
        )),
        (SemType::Map(d, c), State::Product(parts)) => Value::Map(Arc::new(
            materialize(d)
                .into_iter()
                .zip(parts)
                .map(|(k, s)| (k, build(c, s)))
                .collect(),
        )),
        _ => unreachable!("enumeration state does not match its type"),
    }
}

/// All values of a type in canonical order, as a lazy sequence.
pub fn enumerate_type(t: &SemType) -> LazySeq<Value> {
    let ty = Arc::new(t.clone());
    let start = first(t).map(|s| (s, build(t, &first(t).unwrap())));
    LazySeq::unfold(start, move |cur: &Option<(State, Value)>| {
        let (state, value) = cur.as_ref()?;
        let mut next = state.clone();
        let following = advance(&ty, &mut next).then(|| {
            let v = build(&ty, &next);
            (next, v)
        });
        Some((value.clone(), following))
    })
}

/// All values of a type in canonical order.
pub fn materialize(t: &SemType) -> Vec<Value> {
    TypeCursor::new(t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::values::format_value;

    fn show(t: &SemType) -> Vec<String> {
        enumerate_type(t).iter().map(|v| format_value(&v)).collect()
    }

    #[test]
    fn small_domains() {
        assert_eq!(show(&SemType::Int { lo: -2, hi: 2 }), ["-2", "-1", "0", "1", "2"]);
        assert_eq!(show(&SemType::Set(Box::new(SemType::nat(1)))), ["{}", "{0}", "{1}", "{0,1}"]);
        assert_eq!(show(&SemType::Bool), ["false", "true"]);
        let pair = SemType::Tuple(vec![SemType::Bool, SemType::nat(1)]);
        assert_eq!(show(&pair), ["[false,0]", "[false,1]", "[true,0]", "[true,1]"]);
        let map = SemType::Map(Box::new(SemType::Bool), Box::new(SemType::nat(1)));
        assert_eq!(
            show(&map),
            ["[false:0,true:0]", "[false:0,true:1]", "[false:1,true:0]", "[false:1,true:1]"]
        );
        assert_eq!(show(&SemType::Array(0, Box::new(SemType::Bool))), ["[]"]);
        assert!(show(&SemType::Int { lo: 1, hi: 0 }).is_empty());
    }

    #[test]
    fn relation_domain() {
        let pair = SemType::Tuple(vec![SemType::nat(2), SemType::nat(2)]);
        let rel = SemType::Set(Box::new(pair));
        let all = materialize(&rel);
        assert_eq!(all.len(), 512);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_type(&rel).iter().count(), 512);
    }

    #[test]
    fn set_values_are_sorted() {
        let t = SemType::Set(Box::new(SemType::nat(3)));
        for v in materialize(&t) {
            let items = v.as_set().unwrap();
            assert!(items.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
