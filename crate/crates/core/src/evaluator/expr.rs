use std::sync::Arc;

use super::{set_slot, Evaluator, Result, RuntimeError, RuntimeErrorKind};
use crate::frontend::ast::{BinOp, Quantifier};
use crate::frontend::SourceSpan;
use crate::semantics::ir::{TBinders, TDomain, TExpr, TExprKind};
use crate::values::{setops, TypeCursor, Value};

pub(super) type BindFn<'f, 'a> =
    dyn FnMut(&mut Evaluator<'a>, &mut Vec<Value>) -> Result<bool> + 'f;

fn overflow(span: &SourceSpan) -> RuntimeError {
    RuntimeError::new(RuntimeErrorKind::Overflow, span)
}

pub(super) fn int(v: &Value) -> i64 {
    v.as_int().expect("integer operand")
}

fn set(v: &Value) -> &[Value] {
    v.as_set().expect("set operand")
}

/// Strict (non-short-circuit) binary operators on values.
pub(super) fn apply_binary(op: BinOp, a: &Value, b: &Value, span: &SourceSpan) -> Result<Value> {
    use BinOp::*;
    Ok(match op {
        Add => Value::Int(int(a).checked_add(int(b)).ok_or_else(|| overflow(span))?),
        Sub => Value::Int(int(a).checked_sub(int(b)).ok_or_else(|| overflow(span))?),
        Mul => Value::Int(int(a).checked_mul(int(b)).ok_or_else(|| overflow(span))?),
        Div | Mod => {
            let (x, y) = (int(a), int(b));
            if y == 0 {
                return Err(RuntimeError::new(RuntimeErrorKind::DivisionByZero, span));
            }
            let r = if op == Div {
                x.checked_div_euclid(y)
            } else {
                x.checked_rem_euclid(y)
            };
            Value::Int(r.ok_or_else(|| overflow(span))?)
        }
        Pow => {
            let (x, y) = (int(a), int(b));
            if y < 0 {
                return Err(RuntimeError::new(
                    RuntimeErrorKind::RangeError {
                        value: y.to_string(),
                        ty: "ℕ".into(),
                    },
                    span,
                ));
            }
            let r = match x {
                0 | 1 => Some(if y == 0 { 1 } else { x }),
                -1 => Some(if y % 2 == 0 { 1 } else { -1 }),
                _ => u32::try_from(y).ok().and_then(|y| x.checked_pow(y)),
            };
            Value::Int(r.ok_or_else(|| overflow(span))?)
        }
        Eq => Value::Bool(a == b),
        Neq => Value::Bool(a != b),
        Lt => Value::Bool(int(a) < int(b)),
        Le => Value::Bool(int(a) <= int(b)),
        Gt => Value::Bool(int(a) > int(b)),
        Ge => Value::Bool(int(a) >= int(b)),
        And => Value::Bool(a.as_bool().unwrap() && b.as_bool().unwrap()),
        Or => Value::Bool(a.as_bool().unwrap() || b.as_bool().unwrap()),
        Implies => Value::Bool(!a.as_bool().unwrap() || b.as_bool().unwrap()),
        Iff => Value::Bool(a == b),
        Union => Value::Set(Arc::new(setops::union(set(a), set(b)))),
        Intersect => Value::Set(Arc::new(setops::intersection(set(a), set(b)))),
        Diff => Value::Set(Arc::new(setops::difference(set(a), set(b)))),
        Subseteq => Value::Bool(setops::is_subset(set(a), set(b))),
        In => Value::Bool(setops::contains(set(b), a)),
    })
}

pub(super) fn project(v: &Value, k: usize) -> Value {
    match v {
        Value::Tuple(items) => items[k].clone(),
        Value::Record(fields) => fields[k].1.clone(),
        _ => panic!("projection on {v}"),
    }
}

pub(super) fn index(a: &Value, i: &Value, span: &SourceSpan) -> Result<Value> {
    match a {
        Value::Array(items) => {
            let k = int(i);
            usize::try_from(k)
                .ok()
                .and_then(|k| items.get(k))
                .cloned()
                .ok_or_else(|| index_error(k, items.len(), span))
        }
        Value::Map(entries) => Ok(entries
            .binary_search_by(|(key, _)| key.cmp(i))
            .map(|p| entries[p].1.clone())
            .map_err(|_| {
                RuntimeError::new(
                    RuntimeErrorKind::RangeError {
                        value: i.to_string(),
                        ty: "map domain".into(),
                    },
                    span,
                )
            })?),
        _ => panic!("indexing {a}"),
    }
}

pub(super) fn index_error(k: i64, len: usize, span: &SourceSpan) -> RuntimeError {
    RuntimeError::new(
        RuntimeErrorKind::RangeError {
            value: k.to_string(),
            ty: format!("ℤ[0,{}]", len as i64 - 1),
        },
        span,
    )
}

pub(super) fn range(a: &Value, b: &Value) -> Value {
    let (lo, hi) = (int(a), int(b));
    if lo > hi {
        Value::empty_set()
    } else {
        Value::Set(Arc::new((lo..=hi).map(Value::Int).collect()))
    }
}

pub(super) fn binder_value(b: &TBinders, env: &[Value]) -> Value {
    match b.vars.as_slice() {
        [one] => env[one.slot].clone(),
        many => Value::tuple(many.iter().map(|v| env[v.slot].clone()).collect()),
    }
}

impl<'a> Evaluator<'a> {
    pub(super) fn eval_bool(&mut self, e: &TExpr, env: &mut Vec<Value>) -> Result<bool> {
        match self.eval(e, env)? {
            Value::Bool(b) => Ok(b),
            v => panic!("formula evaluated to {v}"),
        }
    }

    /// Deterministic evaluation.
    pub fn eval(&mut self, e: &TExpr, env: &mut Vec<Value>) -> Result<Value> {
        match binder_slots(e) {
            None => self.eval_node(e, env),
            Some(slots) => {
                let saved = save_slots(env, &slots);
                let v = self.eval_node(e, env);
                restore_slots(env, &slots, saved);
                v
            }
        }
    }

    fn eval_node(&mut self, e: &TExpr, env: &mut Vec<Value>) -> Result<Value> {
        Ok(match &e.kind {
            TExprKind::Const(v) => v.clone(),
            TExprKind::Var(s) => env[*s].clone(),
            TExprKind::Not(a) => Value::Bool(!self.eval_bool(a, env)?),
            TExprKind::Neg(a) => {
                let x = int(&self.eval(a, env)?);
                Value::Int(x.checked_neg().ok_or_else(|| overflow(&e.span))?)
            }
            TExprKind::Binary(op, a, b) => match op {
                BinOp::And => Value::Bool(self.eval_bool(a, env)? && self.eval_bool(b, env)?),
                BinOp::Or => Value::Bool(self.eval_bool(a, env)? || self.eval_bool(b, env)?),
                BinOp::Implies => {
                    Value::Bool(!self.eval_bool(a, env)? || self.eval_bool(b, env)?)
                }
                _ => {
                    let x = self.eval(a, env)?;
                    let y = self.eval(b, env)?;
                    apply_binary(*op, &x, &y, &e.span)?
                }
            },
            TExprKind::Call { op, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, env)?);
                }
                let mut out = self.call(*op, &vals, &e.span, false, false)?.unwrap();
                out.swap_remove(0)
            }
            TExprKind::Tuple(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for a in items {
                    vals.push(self.eval(a, env)?);
                }
                Value::tuple(vals)
            }
            TExprKind::Record(fields) => {
                let mut vals = Vec::with_capacity(fields.len());
                for (n, a) in fields {
                    vals.push((n.clone(), self.eval(a, env)?));
                }
                Value::Record(Arc::new(vals))
            }
            TExprKind::Proj(a, k) => project(&self.eval(a, env)?, *k),
            TExprKind::Index(a, i) => {
                let a = self.eval(a, env)?;
                let i = self.eval(i, env)?;
                index(&a, &i, &e.span)?
            }
            TExprKind::ArrayInit(n, v) => Value::array(vec![self.eval(v, env)?; *n]),
            TExprKind::MapInit(dom, v) => {
                let v = self.eval(v, env)?;
                let keys = dom.values().expect("map domain is enumerable");
                Value::Map(Arc::new(keys.iter().map(|k| (k.clone(), v.clone())).collect()))
            }
            TExprKind::SetLit(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for a in items {
                    vals.push(self.eval(a, env)?);
                }
                Value::set_from(vals)
            }
            TExprKind::Range(a, b) => {
                let a = self.eval(a, env)?;
                let b = self.eval(b, env)?;
                range(&a, &b)
            }
            TExprKind::Card(a) => Value::Int(set(&self.eval(a, env)?).len() as i64),
            TExprKind::Comprehension(body, b) => {
                let mut out = Vec::new();
                self.each_binding(b, env, &mut |ev, env| {
                    out.push(ev.eval(body, env)?);
                    Ok(false)
                })?;
                Value::set_from(out)
            }
            TExprKind::Quant(q, b, body) => {
                let want = *q == Quantifier::Exists;
                let mut found = false;
                self.each_binding(b, env, &mut |ev, env| {
                    found = ev.eval_bool(body, env)? == want;
                    Ok(found)
                })?;
                Value::Bool(found == want)
            }
            TExprKind::Sum(b, body) => {
                let mut total: i64 = 0;
                let span = &e.span;
                self.each_binding(b, env, &mut |ev, env| {
                    let x = int(&ev.eval(body, env)?);
                    total = total.checked_add(x).ok_or_else(|| overflow(span))?;
                    Ok(false)
                })?;
                Value::Int(total)
            }
            TExprKind::Choose(b) => {
                let mut chosen = None;
                self.each_binding(b, env, &mut |_, env| {
                    chosen = Some(binder_value(b, env));
                    Ok(true)
                })?;
                chosen.ok_or_else(|| RuntimeError::new(RuntimeErrorKind::NoChoice, &e.span))?
            }
            TExprKind::If(c, a, b) => {
                if self.eval_bool(c, env)? {
                    self.eval(a, env)?
                } else {
                    self.eval(b, env)?
                }
            }
            TExprKind::Let(slot, v, body) => {
                let v = self.eval(v, env)?;
                set_slot(env, *slot, v);
                self.eval(body, env)?
            }
            TExprKind::Print(a) => {
                let v = self.eval(a, env)?;
                self.printed.push(format!("print: {v}"));
                v
            }
        })
    }

    /// Runs `f` for every binding of `b` in canonical order that satisfies
    /// the filter, stopping early when `f` returns true. Returns whether it
    /// stopped early.
    pub(super) fn each_binding(
        &mut self,
        b: &TBinders,
        env: &mut Vec<Value>,
        f: &mut BindFn<'_, 'a>,
    ) -> Result<bool> {
        self.bind_from(b, 0, env, f)
    }

    fn bind_from(
        &mut self,
        b: &TBinders,
        k: usize,
        env: &mut Vec<Value>,
        f: &mut BindFn<'_, 'a>,
    ) -> Result<bool> {
        let Some(var) = b.vars.get(k) else {
            if let Some(filter) = &b.filter {
                if !self.eval_bool(filter, env)? {
                    return Ok(false);
                }
            }
            return f(self, env);
        };
        match &var.domain {
            TDomain::Type(d) => match d.values() {
                Some(vals) => {
                    for v in vals.iter() {
                        set_slot(env, var.slot, v.clone());
                        if self.bind_from(b, k + 1, env, f)? {
                            return Ok(true);
                        }
                    }
                }
                None => {
                    for v in TypeCursor::new(&d.ty) {
                        set_slot(env, var.slot, v);
                        if self.bind_from(b, k + 1, env, f)? {
                            return Ok(true);
                        }
                    }
                }
            },
            TDomain::Member(e) => {
                let s = self.eval(e, env)?;
                for v in set(&s).iter() {
                    set_slot(env, var.slot, v.clone());
                    if self.bind_from(b, k + 1, env, f)? {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }
}

/// Variable slots an expression binds for the duration of its evaluation.
pub(super) fn binder_slots(e: &TExpr) -> Option<Vec<usize>> {
    match &e.kind {
        TExprKind::Comprehension(_, b)
        | TExprKind::Quant(_, b, _)
        | TExprKind::Sum(b, _)
        | TExprKind::Choose(b) => Some(b.vars.iter().map(|v| v.slot).collect()),
        TExprKind::Let(slot, _, _) => Some(vec![*slot]),
        _ => None,
    }
}

pub(super) fn save_slots(env: &[Value], slots: &[usize]) -> Vec<Option<Value>> {
    slots.iter().map(|&s| env.get(s).cloned()).collect()
}

pub(super) fn restore_slots(env: &mut [Value], slots: &[usize], saved: Vec<Option<Value>>) {
    for (&s, v) in slots.iter().zip(saved) {
        if let (Some(slot), Some(v)) = (env.get_mut(s), v) {
            *slot = v;
        }
    }
}
