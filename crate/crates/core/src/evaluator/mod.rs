//! Deterministic and nondeterministic evaluation with runtime checking of
//! every annotation.
//!
//! Deterministic evaluation returns one value per expression, taking the
//! canonically first witness at every choice. Nondeterministic evaluation
//! returns every branch in depth-first order; its first branch is always the
//! deterministic value.

mod exec;
mod expr;
mod multi;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::frontend::printer::print_expr;
use crate::frontend::SourceSpan;
use crate::semantics::ir::{Annot, TBody, TExpr};
use crate::semantics::TypedSpec;
use crate::values::{format_args, LazySeq, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    #[default]
    Deterministic,
    Nondeterministic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuntimeErrorKind {
    PreconditionViolated { callee: String, args: String },
    PostconditionViolated { op: String, args: String, result: String },
    InvariantViolated { iteration: usize },
    MeasureNegative { value: i64 },
    MeasureNotDecreased { before: i64, after: i64 },
    AssertionFailed,
    NoChoice,
    RangeError { value: String, ty: String },
    DivisionByZero,
    Overflow,
    TheoremViolated,
}

/// A failed check or an undefined operation, located at the annotation or
/// operator responsible.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub span: SourceSpan,
    /// Source form of the violated annotation, when there is one.
    pub text: Option<String>,
}

impl RuntimeError {
    pub fn new(kind: RuntimeErrorKind, span: &SourceSpan) -> RuntimeError {
        RuntimeError {
            kind,
            span: span.clone(),
            text: None,
        }
    }

    fn at(kind: RuntimeErrorKind, a: &Annot) -> RuntimeError {
        RuntimeError {
            kind,
            span: a.span.clone(),
            text: Some(a.text.clone()),
        }
    }

    /// One-line explanation, as printed under the error location.
    pub fn reason(&self) -> String {
        use RuntimeErrorKind::*;
        match &self.kind {
            PreconditionViolated { callee, args } => {
                format!("precondition of {callee}({args}) is violated")
            }
            PostconditionViolated { result, .. } => {
                format!("postcondition is violated by result {result}")
            }
            InvariantViolated { iteration: 0 } => {
                "invariant is violated before the first iteration".into()
            }
            InvariantViolated { iteration } => {
                format!("invariant is violated after iteration {iteration}")
            }
            MeasureNegative { value } => format!("termination measure {value} is negative"),
            MeasureNotDecreased { before, after } => {
                format!("termination measure is not decreased ({before} to {after})")
            }
            AssertionFailed => "assertion is violated".into(),
            NoChoice => "no value satisfies the choice condition".into(),
            RangeError { value, ty } => format!("value {value} is not in type {ty}"),
            DivisionByZero => "division by zero".into(),
            Overflow => "integer overflow".into(),
            TheoremViolated => "theorem is not true".into(),
        }
    }
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.reason())
    }
}

type Result<T> = std::result::Result<T, RuntimeError>;

/// Result of running an operation on one input.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// The precondition does not hold; the input is skipped.
    Inadmissible,
    /// All result values, in branch order. Exactly one in deterministic mode.
    Results(Vec<Value>),
}

pub struct Evaluator<'a> {
    spec: &'a TypedSpec,
    mode: EvalMode,
    /// `(operation, measure)` for every active call of a recursive operation.
    measures: Vec<(usize, i64)>,
    printed: Vec<String>,
    trace: Option<Vec<Vec<i64>>>,
    /// All results of nested nondeterministic calls, by operation and arguments.
    memo: HashMap<(usize, Vec<Value>), Vec<Value>>,
}

const MEMO_LIMIT: usize = 1 << 16;

pub(crate) fn set_slot(env: &mut Vec<Value>, slot: usize, v: Value) {
    if slot >= env.len() {
        env.resize(slot + 1, Value::Bool(false));
    }
    env[slot] = v;
}

impl<'a> Evaluator<'a> {
    pub fn new(spec: &'a TypedSpec, mode: EvalMode) -> Evaluator<'a> {
        Evaluator {
            spec,
            mode,
            measures: Vec::new(),
            printed: Vec::new(),
            trace: None,
            memo: HashMap::new(),
        }
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    /// Lines produced by `print` since the last call, each `print: <value>`.
    pub fn take_printed(&mut self) -> Vec<String> {
        std::mem::take(&mut self.printed)
    }

    /// Starts recording the measure sequence of every loop run.
    pub fn record_measures(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_measures(&mut self) -> Vec<Vec<i64>> {
        self.trace.take().unwrap_or_default()
    }

    /// Evaluates `e` in the current mode, yielding its values lazily.
    pub fn eval_expr(&mut self, e: &TExpr, env: &mut Vec<Value>) -> Result<LazySeq<Value>> {
        let values = match self.mode {
            EvalMode::Deterministic => vec![self.eval(e, env)?],
            EvalMode::Nondeterministic => self.eval_multi(e, env)?,
        };
        Ok(LazySeq::from_vec(values))
    }

    /// Runs the operation with index `op` as the checked top-level call.
    pub fn invoke_operation(&mut self, op: usize, args: &[Value]) -> Result<Outcome> {
        let multi = self.mode == EvalMode::Nondeterministic;
        let span = self.spec.ops[op].decl.span.clone();
        Ok(match self.call(op, args, &span, true, multi)? {
            None => Outcome::Inadmissible,
            Some(values) => Outcome::Results(values),
        })
    }

    /// Calls an operation. `None` means the precondition failed on a
    /// top-level call; for nested calls that is an error instead.
    fn call(
        &mut self,
        index: usize,
        args: &[Value],
        span: &SourceSpan,
        top: bool,
        multi: bool,
    ) -> Result<Option<Vec<Value>>> {
        let op = &self.spec.ops[index];
        let multi = multi && op.nondet;
        let memoize = multi && !top && !op.recursive;
        if memoize {
            if let Some(hit) = self.memo.get(&(index, args.to_vec())) {
                return Ok(Some(hit.clone()));
            }
        }
        let printed_before = self.printed.len();
        if !top {
            for (p, a) in op.params.iter().zip(args) {
                if !p.ty.contains(a) {
                    return Err(RuntimeError::new(
                        RuntimeErrorKind::RangeError {
                            value: a.to_string(),
                            ty: p.ty.to_string(),
                        },
                        span,
                    ));
                }
            }
        }
        let mut env = vec![Value::Bool(false); op.frame_size];
        env[..args.len()].clone_from_slice(args);

        for r in &op.requires {
            if !self.holds(&r.expr, &mut env, multi)? {
                if top {
                    return Ok(None);
                }
                return Err(RuntimeError::at(
                    RuntimeErrorKind::PreconditionViolated {
                        callee: op.name.clone(),
                        args: format_args(args),
                    },
                    r,
                ));
            }
        }

        let pushed = match (&op.decreases, op.recursive) {
            (Some(m), true) => {
                let value = self.measure(m, &mut env)?;
                if let Some(&(_, before)) = self.measures.iter().rev().find(|(o, _)| *o == index) {
                    if value >= before {
                        return Err(RuntimeError::at(
                            RuntimeErrorKind::MeasureNotDecreased {
                                before,
                                after: value,
                            },
                            m,
                        ));
                    }
                }
                self.measures.push((index, value));
                true
            }
            _ => false,
        };
        let results = self.run_body(index, &mut env, multi);
        if pushed {
            self.measures.pop();
        }
        let results = results?;

        let op = &self.spec.ops[index];
        for v in &results {
            if !op.result.contains(v) {
                return Err(RuntimeError::new(
                    RuntimeErrorKind::RangeError {
                        value: v.to_string(),
                        ty: op.result.to_string(),
                    },
                    span,
                ));
            }
            if op.kind == crate::frontend::ast::OpKind::Theorem && *v == Value::Bool(false) {
                let text = match &op.decl.body {
                    crate::frontend::ast::OpBody::Expr(e) => print_expr(e),
                    _ => op.name.clone(),
                };
                return Err(RuntimeError {
                    kind: RuntimeErrorKind::TheoremViolated,
                    span: op.decl.span.clone(),
                    text: Some(text),
                });
            }
            set_slot(&mut env, op.result_slot, v.clone());
            for q in &op.ensures {
                if !self.holds(&q.expr, &mut env, multi)? {
                    return Err(RuntimeError::at(
                        RuntimeErrorKind::PostconditionViolated {
                            op: op.name.clone(),
                            args: format_args(args),
                            result: v.to_string(),
                        },
                        q,
                    ));
                }
            }
        }
        if memoize && self.printed.len() == printed_before {
            if self.memo.len() >= MEMO_LIMIT {
                self.memo.clear();
            }
            self.memo.insert((index, args.to_vec()), results.clone());
        }
        Ok(Some(results))
    }

    fn run_body(&mut self, index: usize, env: &mut Vec<Value>, multi: bool) -> Result<Vec<Value>> {
        let op = &self.spec.ops[index];
        match &op.body {
            TBody::Expr(e) => {
                if multi {
                    self.eval_multi(e, env)
                } else {
                    Ok(vec![self.eval(e, env)?])
                }
            }
            TBody::Proc { commands, ret } => {
                if multi {
                    let mut out = Vec::new();
                    for mut end in self.exec_block_multi(commands, env.clone())? {
                        out.extend(self.eval_multi(ret, &mut end)?);
                    }
                    Ok(out)
                } else {
                    for c in commands {
                        self.exec(c, env)?;
                    }
                    Ok(vec![self.eval(ret, env)?])
                }
            }
        }
    }

    /// Whether a formula is true; in multi mode, on every branch.
    fn holds(&mut self, e: &TExpr, env: &mut Vec<Value>, multi: bool) -> Result<bool> {
        if multi && e.nondet {
            Ok(self
                .eval_multi(e, env)?
                .iter()
                .all(|v| *v == Value::Bool(true)))
        } else {
            self.eval_bool(e, env)
        }
    }

    /// Evaluates a termination measure and checks it is non-negative.
    fn measure(&mut self, m: &Annot, env: &mut Vec<Value>) -> Result<i64> {
        let values = if self.mode == EvalMode::Nondeterministic && m.expr.nondet {
            self.eval_multi(&m.expr, env)?
        } else {
            vec![self.eval(&m.expr, env)?]
        };
        let mut worst = i64::MIN;
        for v in values {
            let v = v.as_int().expect("measure is an integer");
            if v < 0 {
                return Err(RuntimeError::at(RuntimeErrorKind::MeasureNegative { value: v }, m));
            }
            worst = worst.max(v);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests;
