use std::sync::Arc;

use super::expr::{
    apply_binary, binder_slots, binder_value, index, int, project, range, restore_slots, save_slots,
};
use super::{set_slot, Evaluator, Result, RuntimeError, RuntimeErrorKind};
use crate::frontend::ast::{BinOp, Quantifier};
use crate::semantics::ir::{TBinders, TDomain, TExpr, TExprKind};
use crate::values::{TypeCursor, Value};

fn push_new<T: PartialEq>(out: &mut Vec<T>, x: T) {
    if !out.contains(&x) {
        out.push(x);
    }
}

impl<'a> Evaluator<'a> {
    /// Nondeterministic evaluation: every value of `e`, depth-first, with the
    /// most recently opened choice varying fastest.
    ///
    /// Folds (quantifiers, sums, comprehensions) over nondeterministic bodies
    /// yield each distinct outcome once, the deterministic outcome first.
    pub fn eval_multi(&mut self, e: &TExpr, env: &mut Vec<Value>) -> Result<Vec<Value>> {
        if !e.nondet {
            return Ok(vec![self.eval(e, env)?]);
        }
        match binder_slots(e) {
            None => self.eval_multi_node(e, env),
            Some(slots) => {
                let saved = save_slots(env, &slots);
                let vs = self.eval_multi_node(e, env);
                restore_slots(env, &slots, saved);
                vs
            }
        }
    }

    fn eval_multi_node(&mut self, e: &TExpr, env: &mut Vec<Value>) -> Result<Vec<Value>> {
        let span = &e.span;
        Ok(match &e.kind {
            TExprKind::Const(_) | TExprKind::Var(_) => vec![self.eval(e, env)?],
            TExprKind::Not(a) => self
                .eval_multi(a, env)?
                .into_iter()
                .map(|v| Value::Bool(!v.as_bool().unwrap()))
                .collect(),
            TExprKind::Neg(a) => {
                let mut out = Vec::new();
                for v in self.eval_multi(a, env)? {
                    let x = int(&v)
                        .checked_neg()
                        .ok_or_else(|| RuntimeError::new(RuntimeErrorKind::Overflow, span))?;
                    out.push(Value::Int(x));
                }
                out
            }
            TExprKind::Binary(op @ (BinOp::And | BinOp::Or | BinOp::Implies), a, b) => {
                let mut out = Vec::new();
                for x in self.eval_multi(a, env)? {
                    let x = x.as_bool().unwrap();
                    let decided = match op {
                        BinOp::And => (!x).then_some(false),
                        BinOp::Or => x.then_some(true),
                        _ => (!x).then_some(true),
                    };
                    match decided {
                        Some(r) => out.push(Value::Bool(r)),
                        None => out.extend(self.eval_multi(b, env)?),
                    }
                }
                out
            }
            TExprKind::Binary(op, a, b) => {
                let mut out = Vec::new();
                for x in self.eval_multi(a, env)? {
                    for y in self.eval_multi(b, env)? {
                        out.push(apply_binary(*op, &x, &y, span)?);
                    }
                }
                out
            }
            TExprKind::Call { op, args } => {
                let mut out = Vec::new();
                for vals in self.multi_all(args, env)? {
                    out.extend(self.call(*op, &vals, span, false, true)?.unwrap());
                }
                out
            }
            TExprKind::Tuple(items) => self
                .multi_all(items, env)?
                .into_iter()
                .map(Value::tuple)
                .collect(),
            TExprKind::Record(fields) => {
                let exprs: Vec<TExpr> = fields.iter().map(|(_, x)| x.clone()).collect();
                self.multi_all(&exprs, env)?
                    .into_iter()
                    .map(|vals| {
                        Value::Record(Arc::new(
                            fields.iter().map(|(n, _)| n.clone()).zip(vals).collect(),
                        ))
                    })
                    .collect()
            }
            TExprKind::Proj(a, k) => self
                .eval_multi(a, env)?
                .iter()
                .map(|v| project(v, *k))
                .collect(),
            TExprKind::Index(a, i) => {
                let mut out = Vec::new();
                for x in self.eval_multi(a, env)? {
                    for y in self.eval_multi(i, env)? {
                        out.push(index(&x, &y, span)?);
                    }
                }
                out
            }
            TExprKind::ArrayInit(n, v) => self
                .eval_multi(v, env)?
                .into_iter()
                .map(|x| Value::array(vec![x; *n]))
                .collect(),
            TExprKind::MapInit(dom, v) => {
                let keys = dom.values().expect("map domain is enumerable");
                self.eval_multi(v, env)?
                    .into_iter()
                    .map(|x| {
                        Value::Map(Arc::new(keys.iter().map(|k| (k.clone(), x.clone())).collect()))
                    })
                    .collect()
            }
            TExprKind::SetLit(items) => self
                .multi_all(items, env)?
                .into_iter()
                .map(Value::set_from)
                .collect(),
            TExprKind::Range(a, b) => {
                let mut out = Vec::new();
                for x in self.eval_multi(a, env)? {
                    for y in self.eval_multi(b, env)? {
                        out.push(range(&x, &y));
                    }
                }
                out
            }
            TExprKind::Card(a) => self
                .eval_multi(a, env)?
                .iter()
                .map(|s| Value::Int(s.as_set().unwrap().len() as i64))
                .collect(),
            TExprKind::Comprehension(body, b) => {
                let mut frontier = vec![Vec::<Value>::new()];
                for binding in self.bindings_multi(b, env)? {
                    assign(b, &binding, env);
                    let options = self.eval_multi(body, env)?;
                    let mut next = Vec::new();
                    for acc in &frontier {
                        for x in &options {
                            let mut grown = acc.clone();
                            if let Err(p) = grown.binary_search(x) {
                                grown.insert(p, x.clone());
                            }
                            push_new(&mut next, grown);
                        }
                    }
                    frontier = next;
                }
                frontier
                    .into_iter()
                    .map(|items| Value::Set(Arc::new(items)))
                    .collect()
            }
            TExprKind::Quant(q, b, body) => {
                let stop = *q == Quantifier::Exists;
                let mut first_stopped = false;
                let mut can_continue = true;
                let mut can_stop = false;
                for binding in self.bindings_multi(b, env)? {
                    assign(b, &binding, env);
                    let outcomes = self.eval_multi(body, env)?;
                    if !first_stopped && outcomes[0] == Value::Bool(stop) {
                        first_stopped = true;
                    }
                    can_stop |= outcomes.contains(&Value::Bool(stop));
                    if !outcomes.contains(&Value::Bool(!stop)) {
                        can_continue = false;
                        break;
                    }
                }
                let stopped = Value::Bool(stop);
                let finished = Value::Bool(!stop);
                let mut out = Vec::new();
                if first_stopped {
                    out.push(stopped.clone());
                    if can_continue {
                        out.push(finished);
                    }
                } else {
                    out.push(finished);
                    if can_stop {
                        out.push(stopped);
                    }
                }
                out
            }
            TExprKind::Sum(b, body) => {
                let mut frontier = vec![0i64];
                for binding in self.bindings_multi(b, env)? {
                    assign(b, &binding, env);
                    let options = self.eval_multi(body, env)?;
                    let mut next = Vec::new();
                    for acc in &frontier {
                        for x in &options {
                            let s = acc.checked_add(int(x)).ok_or_else(|| {
                                RuntimeError::new(RuntimeErrorKind::Overflow, span)
                            })?;
                            push_new(&mut next, s);
                        }
                    }
                    frontier = next;
                }
                frontier.into_iter().map(Value::Int).collect()
            }
            TExprKind::Choose(b) => {
                let all = self.bindings_multi(b, env)?;
                if all.is_empty() {
                    return Err(RuntimeError::new(RuntimeErrorKind::NoChoice, span));
                }
                all.iter()
                    .map(|binding| {
                        assign(b, binding, env);
                        binder_value(b, env)
                    })
                    .collect()
            }
            TExprKind::If(c, a, b) => {
                let mut out = Vec::new();
                for cv in self.eval_multi(c, env)? {
                    let branch = if cv.as_bool().unwrap() { a } else { b };
                    out.extend(self.eval_multi(branch, env)?);
                }
                out
            }
            TExprKind::Let(slot, v, body) => {
                let mut out = Vec::new();
                for x in self.eval_multi(v, env)? {
                    set_slot(env, *slot, x);
                    out.extend(self.eval_multi(body, env)?);
                }
                out
            }
            TExprKind::Print(a) => {
                let vals = self.eval_multi(a, env)?;
                for v in &vals {
                    self.printed.push(format!("print: {v}"));
                }
                vals
            }
        })
    }

    /// All combinations of branch values, the first expression outermost.
    fn multi_all(&mut self, es: &[TExpr], env: &mut Vec<Value>) -> Result<Vec<Vec<Value>>> {
        let mut combos = vec![Vec::with_capacity(es.len())];
        for e in es {
            let options = self.eval_multi(e, env)?;
            let mut next = Vec::with_capacity(combos.len() * options.len());
            for c in &combos {
                for o in &options {
                    let mut c = c.clone();
                    c.push(o.clone());
                    next.push(c);
                }
            }
            combos = next;
        }
        Ok(combos)
    }

    /// Every binding of `b`, once per branch in which its filter holds.
    pub(super) fn bindings_multi(
        &mut self,
        b: &TBinders,
        env: &mut Vec<Value>,
    ) -> Result<Vec<Vec<Value>>> {
        let mut out = Vec::new();
        if b.nondet() {
            self.bind_multi_from(b, 0, env, &mut out)?;
        } else {
            self.each_binding(b, env, &mut |_, env| {
                out.push(b.vars.iter().map(|v| env[v.slot].clone()).collect());
                Ok(false)
            })?;
        }
        Ok(out)
    }

    fn bind_multi_from(
        &mut self,
        b: &TBinders,
        k: usize,
        env: &mut Vec<Value>,
        out: &mut Vec<Vec<Value>>,
    ) -> Result<()> {
        let Some(var) = b.vars.get(k) else {
            let current: Vec<Value> = b.vars.iter().map(|v| env[v.slot].clone()).collect();
            match &b.filter {
                Some(f) => {
                    for fv in self.eval_multi(f, env)? {
                        if fv == Value::Bool(true) {
                            out.push(current.clone());
                        }
                    }
                }
                None => out.push(current),
            }
            return Ok(());
        };
        let domains: Vec<Value> = match &var.domain {
            TDomain::Type(d) => match d.values() {
                Some(vals) => vals.to_vec(),
                None => TypeCursor::new(&d.ty).collect(),
            },
            TDomain::Member(e) => {
                let mut vals = Vec::new();
                for s in self.eval_multi(e, env)? {
                    vals.extend(s.as_set().unwrap().iter().cloned());
                }
                vals
            }
        };
        for v in domains {
            set_slot(env, var.slot, v);
            self.bind_multi_from(b, k + 1, env, out)?;
        }
        Ok(())
    }
}

pub(super) fn assign(b: &TBinders, values: &[Value], env: &mut Vec<Value>) {
    for (var, v) in b.vars.iter().zip(values) {
        set_slot(env, var.slot, v.clone());
    }
}
