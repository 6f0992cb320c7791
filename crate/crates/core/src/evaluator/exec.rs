use std::collections::HashSet;
use std::sync::Arc;

use super::expr::{index_error, int};
use super::multi::assign;
use super::{set_slot, EvalMode, Evaluator, Result, RuntimeError, RuntimeErrorKind};
use crate::frontend::SourceSpan;
use crate::semantics::ir::{TBinders, TCmd, TCmdKind, TExpr, TLoop};
use crate::semantics::SemType;
use crate::values::{TypeCursor, Value};

type Env = Vec<Value>;

/// Loop state carried between iterations.
#[derive(Debug, Clone, Copy)]
struct Progress {
    iteration: usize,
    measure: Option<i64>,
    trace: Option<usize>,
}

fn range_error(v: &Value, ty: &SemType, span: &SourceSpan) -> RuntimeError {
    RuntimeError::new(
        RuntimeErrorKind::RangeError {
            value: v.to_string(),
            ty: ty.to_string(),
        },
        span,
    )
}

fn check_range(v: &Value, ty: &SemType, span: &SourceSpan) -> Result<()> {
    if ty.contains(v) {
        Ok(())
    } else {
        Err(range_error(v, ty, span))
    }
}

/// Functional update of `target[path] := v`.
fn update_path(target: &mut Value, path: &[Value], v: Value, span: &SourceSpan) -> Result<()> {
    let Some((first, rest)) = path.split_first() else {
        *target = v;
        return Ok(());
    };
    match target {
        Value::Array(items) => {
            let k = int(first);
            let len = items.len();
            let slot = usize::try_from(k)
                .ok()
                .filter(|&i| i < len)
                .ok_or_else(|| index_error(k, len, span))?;
            update_path(&mut Arc::make_mut(items)[slot], rest, v, span)
        }
        Value::Map(entries) => {
            let p = entries
                .binary_search_by(|(key, _)| key.cmp(first))
                .map_err(|_| range_error(first, &SemType::Bool, span))?;
            update_path(&mut Arc::make_mut(entries)[p].1, rest, v, span)
        }
        other => panic!("indexed assignment into {other}"),
    }
}

fn binding_element(values: &[Value]) -> Value {
    match values {
        [one] => one.clone(),
        many => Value::tuple(many.to_vec()),
    }
}

fn add_element(set: &Value, x: Value) -> Value {
    let mut items = set.as_set().unwrap().to_vec();
    if let Err(p) = items.binary_search(&x) {
        items.insert(p, x);
    }
    Value::Set(Arc::new(items))
}

impl<'a> Evaluator<'a> {
    fn multi(&self) -> bool {
        self.mode == EvalMode::Nondeterministic
    }

    // ---- loop annotations ----

    /// Takes `old_` snapshots, checks invariants before the first iteration
    /// and opens a measure trace.
    fn enter_loop(&mut self, lp: &TLoop, env: &mut Env) -> Result<Progress> {
        for &(from, to) in &lp.snapshots {
            let v = env[from].clone();
            set_slot(env, to, v);
        }
        let trace = match (&mut self.trace, &lp.decreases) {
            (Some(t), Some(_)) => {
                t.push(Vec::new());
                Some(t.len() - 1)
            }
            _ => None,
        };
        self.check_invariants(lp, env, 0)?;
        let measure = self.step_measure(lp, env, None, trace)?;
        Ok(Progress {
            iteration: 0,
            measure,
            trace,
        })
    }

    /// Checks invariants and measure after an iteration.
    fn next_iteration(&mut self, lp: &TLoop, env: &mut Env, p: Progress) -> Result<Progress> {
        let iteration = p.iteration + 1;
        self.check_invariants(lp, env, iteration)?;
        let measure = self.step_measure(lp, env, p.measure, p.trace)?;
        Ok(Progress {
            iteration,
            measure,
            trace: p.trace,
        })
    }

    fn check_invariants(&mut self, lp: &TLoop, env: &mut Env, iteration: usize) -> Result<()> {
        let multi = self.multi();
        for inv in &lp.invariants {
            if !self.holds(&inv.expr, env, multi)? {
                return Err(RuntimeError::at(
                    RuntimeErrorKind::InvariantViolated { iteration },
                    inv,
                ));
            }
        }
        Ok(())
    }

    /// Evaluates the measure; it must be non-negative and below the previous
    /// one.
    fn step_measure(
        &mut self,
        lp: &TLoop,
        env: &mut Env,
        prev: Option<i64>,
        trace: Option<usize>,
    ) -> Result<Option<i64>> {
        let Some(m) = &lp.decreases else {
            return Ok(None);
        };
        let v = self.measure(m, env)?;
        if let Some(before) = prev {
            if v >= before {
                return Err(RuntimeError::at(
                    RuntimeErrorKind::MeasureNotDecreased { before, after: v },
                    m,
                ));
            }
        }
        if let (Some(t), Some(i)) = (&mut self.trace, trace) {
            t[i].push(v);
        }
        Ok(Some(v))
    }

    // ---- deterministic execution ----

    pub(super) fn exec(&mut self, c: &TCmd, env: &mut Env) -> Result<()> {
        match &c.kind {
            TCmdKind::Skip => {}
            TCmdKind::VarDecl { slot, ty, init } => {
                let v = match init {
                    Some(e) => {
                        let v = self.eval(e, env)?;
                        check_range(&v, ty, &e.span)?;
                        v
                    }
                    None => first_value(ty),
                };
                set_slot(env, *slot, v);
            }
            TCmdKind::Assign {
                slot,
                indices,
                value,
                ty,
            } => {
                let mut path = Vec::with_capacity(indices.len());
                for i in indices {
                    path.push(self.eval(i, env)?);
                }
                let v = self.eval(value, env)?;
                check_range(&v, ty, &value.span)?;
                update_path(&mut env[*slot], &path, v, &c.span)?;
            }
            TCmdKind::Block(cs) => {
                for c in cs {
                    self.exec(c, env)?;
                }
            }
            TCmdKind::If(cond, a, b) => {
                if self.eval_bool(cond, env)? {
                    self.exec(a, env)?;
                } else if let Some(b) = b {
                    self.exec(b, env)?;
                }
            }
            TCmdKind::While { cond, lp, body } => {
                let mut p = self.enter_loop(lp, env)?;
                while self.eval_bool(cond, env)? {
                    self.exec(body, env)?;
                    p = self.next_iteration(lp, env, p)?;
                }
            }
            TCmdKind::For {
                init,
                cond,
                update,
                lp,
                body,
            } => {
                self.exec(init, env)?;
                let mut p = self.enter_loop(lp, env)?;
                while self.eval_bool(cond, env)? {
                    self.exec(body, env)?;
                    self.exec(update, env)?;
                    p = self.next_iteration(lp, env, p)?;
                }
            }
            TCmdKind::ForIn {
                binders,
                forset,
                lp,
                body,
            } => {
                let mut all = Vec::new();
                self.each_binding(binders, env, &mut |_, env| {
                    all.push(binders.vars.iter().map(|v| env[v.slot].clone()).collect::<Vec<_>>());
                    Ok(false)
                })?;
                if let Some(s) = forset {
                    set_slot(env, *s, Value::empty_set());
                }
                let mut p = self.enter_loop(lp, env)?;
                for binding in &all {
                    assign(binders, binding, env);
                    self.exec(body, env)?;
                    if let Some(s) = forset {
                        let grown = add_element(&env[*s], binding_element(binding));
                        env[*s] = grown;
                    }
                    p = self.next_iteration(lp, env, p)?;
                }
            }
            TCmdKind::Choose(b) => {
                if !self.each_binding(b, env, &mut |_, _| Ok(true))? {
                    return Err(RuntimeError::new(RuntimeErrorKind::NoChoice, &c.span));
                }
            }
            TCmdKind::ChooseElse(b, then, els) => {
                if self.each_binding(b, env, &mut |_, _| Ok(true))? {
                    self.exec(then, env)?;
                } else {
                    self.exec(els, env)?;
                }
            }
            TCmdKind::ChooseDo { binders, lp, body } => {
                let mut p = self.enter_loop(lp, env)?;
                while self.each_binding(binders, env, &mut |_, _| Ok(true))? {
                    self.exec(body, env)?;
                    p = self.next_iteration(lp, env, p)?;
                }
            }
            TCmdKind::Assert(a) => {
                if !self.eval_bool(&a.expr, env)? {
                    return Err(RuntimeError::at(RuntimeErrorKind::AssertionFailed, a));
                }
            }
            TCmdKind::Print(e) => {
                let v = self.eval(e, env)?;
                self.printed.push(format!("print: {v}"));
            }
        }
        Ok(())
    }

    // ---- nondeterministic execution ----

    pub(super) fn exec_block_multi(&mut self, cmds: &[TCmd], env: Env) -> Result<Vec<Env>> {
        let mut states = vec![env];
        for c in cmds {
            let mut next = Vec::new();
            for s in states {
                next.extend(self.exec_multi(c, s)?);
            }
            states = distinct(next);
        }
        Ok(states)
    }

    /// Every distinct reachable final state, depth-first.
    pub(super) fn exec_multi(&mut self, c: &TCmd, env: Env) -> Result<Vec<Env>> {
        Ok(distinct(self.exec_multi_raw(c, env)?))
    }

    fn exec_multi_raw(&mut self, c: &TCmd, mut env: Env) -> Result<Vec<Env>> {
        Ok(match &c.kind {
            TCmdKind::Skip => vec![env],
            TCmdKind::VarDecl { slot, ty, init } => match init {
                Some(e) => {
                    let mut out = Vec::new();
                    for v in self.eval_multi(e, &mut env)? {
                        check_range(&v, ty, &e.span)?;
                        let mut next = env.clone();
                        set_slot(&mut next, *slot, v);
                        out.push(next);
                    }
                    out
                }
                None => {
                    set_slot(&mut env, *slot, first_value(ty));
                    vec![env]
                }
            },
            TCmdKind::Assign {
                slot,
                indices,
                value,
                ty,
            } => {
                let mut paths = vec![Vec::new()];
                for i in indices {
                    let options = self.eval_multi(i, &mut env)?;
                    paths = paths
                        .into_iter()
                        .flat_map(|p| {
                            options.iter().map(move |o| {
                                let mut p = p.clone();
                                p.push(o.clone());
                                p
                            })
                        })
                        .collect();
                }
                let mut out = Vec::new();
                for path in paths {
                    for v in self.eval_multi(value, &mut env)? {
                        check_range(&v, ty, &value.span)?;
                        let mut next = env.clone();
                        update_path(&mut next[*slot], &path, v, &c.span)?;
                        out.push(next);
                    }
                }
                out
            }
            TCmdKind::Block(cs) => {
                let locals: Vec<usize> = cs
                    .iter()
                    .filter_map(|c| match c.kind {
                        TCmdKind::VarDecl { slot, .. } => Some(slot),
                        _ => None,
                    })
                    .collect();
                cleared(self.exec_block_multi(cs, env)?, &locals)
            }
            TCmdKind::If(cond, a, b) => {
                let mut out = Vec::new();
                for cv in self.eval_multi(cond, &mut env)? {
                    if cv.as_bool().unwrap() {
                        out.extend(self.exec_multi(a, env.clone())?);
                    } else if let Some(b) = b {
                        out.extend(self.exec_multi(b, env.clone())?);
                    } else {
                        out.push(env.clone());
                    }
                }
                out
            }
            TCmdKind::While { cond, lp, body } => {
                let p = self.enter_loop(lp, &mut env)?;
                let mut out = Vec::new();
                self.loop_multi(cond, None, lp, body, env, p, &mut HashSet::new(), &mut out)?;
                cleared(out, &loop_locals(lp, None, None))
            }
            TCmdKind::For {
                init,
                cond,
                update,
                lp,
                body,
            } => {
                let mut out = Vec::new();
                let mut seen = HashSet::new();
                for mut start in self.exec_multi(init, env)? {
                    let p = self.enter_loop(lp, &mut start)?;
                    self.loop_multi(cond, Some(update), lp, body, start, p, &mut seen, &mut out)?;
                }
                let mut locals = loop_locals(lp, None, None);
                if let TCmdKind::VarDecl { slot, .. } = init.kind {
                    locals.push(slot);
                }
                cleared(out, &locals)
            }
            TCmdKind::ForIn {
                binders,
                forset,
                lp,
                body,
            } => {
                let all = self.bindings_multi(binders, &mut env)?;
                if let Some(s) = forset {
                    set_slot(&mut env, *s, Value::empty_set());
                }
                let p = self.enter_loop(lp, &mut env)?;
                let mut out = Vec::new();
                let remaining: Vec<usize> = (0..all.len()).collect();
                let mut seen = HashSet::new();
                let run = Permutations {
                    binders,
                    forset: *forset,
                    all: &all,
                    lp,
                    body,
                };
                self.permute_multi(&run, remaining, env, p, &mut seen, &mut out)?;
                cleared(out, &loop_locals(lp, Some(binders), *forset))
            }
            TCmdKind::Choose(b) => {
                let all = self.bindings_multi(b, &mut env)?;
                if all.is_empty() {
                    return Err(RuntimeError::new(RuntimeErrorKind::NoChoice, &c.span));
                }
                all.iter()
                    .map(|binding| {
                        let mut next = env.clone();
                        assign(b, binding, &mut next);
                        next
                    })
                    .collect()
            }
            TCmdKind::ChooseElse(b, then, els) => {
                let all = self.bindings_multi(b, &mut env)?;
                if all.is_empty() {
                    return self.exec_multi(els, env);
                }
                let mut out = Vec::new();
                for binding in &all {
                    let mut next = env.clone();
                    assign(b, binding, &mut next);
                    out.extend(self.exec_multi(then, next)?);
                }
                cleared(out, &loop_locals(&TLoop::default(), Some(b), None))
            }
            TCmdKind::ChooseDo { binders, lp, body } => {
                let p = self.enter_loop(lp, &mut env)?;
                let mut out = Vec::new();
                self.choose_do_multi(binders, lp, body, env, p, &mut HashSet::new(), &mut out)?;
                cleared(out, &loop_locals(lp, Some(binders), None))
            }
            TCmdKind::Assert(a) => {
                if !self.holds(&a.expr, &mut env, true)? {
                    return Err(RuntimeError::at(RuntimeErrorKind::AssertionFailed, a));
                }
                vec![env]
            }
            TCmdKind::Print(e) => {
                for v in self.eval_multi(e, &mut env)? {
                    self.printed.push(format!("print: {v}"));
                }
                vec![env]
            }
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn loop_multi(
        &mut self,
        cond: &TExpr,
        update: Option<&TCmd>,
        lp: &TLoop,
        body: &TCmd,
        mut env: Env,
        p: Progress,
        seen: &mut HashSet<Env>,
        out: &mut Vec<Env>,
    ) -> Result<()> {
        if !seen.insert(env.clone()) {
            return Ok(());
        }
        for cv in self.eval_multi(cond, &mut env)? {
            if !cv.as_bool().unwrap() {
                out.push(env.clone());
                continue;
            }
            let mut after = self.exec_multi(body, env.clone())?;
            if let Some(u) = update {
                let mut updated = Vec::new();
                for s in after {
                    updated.extend(self.exec_multi(u, s)?);
                }
                after = updated;
            }
            for mut s in after {
                let next = self.next_iteration(lp, &mut s, p)?;
                self.loop_multi(cond, update, lp, body, s, next, seen, out)?;
            }
        }
        Ok(())
    }

    fn permute_multi(
        &mut self,
        run: &Permutations<'_>,
        remaining: Vec<usize>,
        env: Env,
        p: Progress,
        seen: &mut HashSet<(Env, Vec<usize>)>,
        out: &mut Vec<Env>,
    ) -> Result<()> {
        let env = cleared_one(env, run.binders.vars.iter().map(|b| b.slot));
        if remaining.is_empty() {
            out.push(env);
            return Ok(());
        }
        if !seen.insert((env.clone(), remaining.clone())) {
            return Ok(());
        }
        for pick in 0..remaining.len() {
            let binding = &run.all[remaining[pick]];
            let mut start = env.clone();
            assign(run.binders, binding, &mut start);
            let mut rest = remaining.clone();
            rest.remove(pick);
            for mut s in self.exec_multi(run.body, start)? {
                if let Some(slot) = run.forset {
                    let grown = add_element(&s[slot], binding_element(binding));
                    s[slot] = grown;
                }
                let next = self.next_iteration(run.lp, &mut s, p)?;
                self.permute_multi(run, rest.clone(), s, next, seen, out)?;
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn choose_do_multi(
        &mut self,
        binders: &TBinders,
        lp: &TLoop,
        body: &TCmd,
        mut env: Env,
        p: Progress,
        seen: &mut HashSet<Env>,
        out: &mut Vec<Env>,
    ) -> Result<()> {
        env = cleared_one(env, binders.vars.iter().map(|b| b.slot));
        if !seen.insert(env.clone()) {
            return Ok(());
        }
        let all = self.bindings_multi(binders, &mut env)?;
        if all.is_empty() {
            out.push(env);
            return Ok(());
        }
        for binding in &all {
            let mut start = env.clone();
            assign(binders, binding, &mut start);
            for mut s in self.exec_multi(body, start)? {
                let next = self.next_iteration(lp, &mut s, p)?;
                self.choose_do_multi(binders, lp, body, s, next, seen, out)?;
            }
        }
        Ok(())
    }
}

/// One `for … ∈ … do` loop explored in every order.
struct Permutations<'r> {
    binders: &'r TBinders,
    forset: Option<usize>,
    all: &'r [Vec<Value>],
    lp: &'r TLoop,
    body: &'r TCmd,
}

/// Slots that go out of scope when a loop ends.
fn loop_locals(lp: &TLoop, binders: Option<&TBinders>, forset: Option<usize>) -> Vec<usize> {
    let mut slots: Vec<usize> = lp.snapshots.iter().map(|&(_, old)| old).collect();
    if let Some(b) = binders {
        slots.extend(b.vars.iter().map(|v| v.slot));
    }
    slots.extend(forset);
    slots
}

fn cleared_one(mut env: Env, slots: impl IntoIterator<Item = usize>) -> Env {
    for slot in slots {
        if let Some(v) = env.get_mut(slot) {
            *v = Value::Bool(false);
        }
    }
    env
}

/// Resets dead slots so that states differing only in them coincide.
fn cleared(states: Vec<Env>, slots: &[usize]) -> Vec<Env> {
    if slots.is_empty() {
        return states;
    }
    states
        .into_iter()
        .map(|env| cleared_one(env, slots.iter().copied()))
        .collect()
}

/// Drops repeated states, keeping the first occurrence of each.
fn distinct(states: Vec<Env>) -> Vec<Env> {
    if states.len() < 2 {
        return states;
    }
    let mut seen = HashSet::with_capacity(states.len());
    states.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

fn first_value(ty: &SemType) -> Value {
    TypeCursor::new(ty).next().expect("types are inhabited")
}
