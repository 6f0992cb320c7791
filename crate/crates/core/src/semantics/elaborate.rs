use std::collections::{BTreeMap, HashMap};

use super::ir::*;
use super::{shared_name, SemType, SemanticError, TypedSpec};
use crate::evaluator::{EvalMode, Evaluator, RuntimeErrorKind};
use crate::frontend::ast::*;
use crate::frontend::printer::{
    decreases_text, ensures_text, invariant_text, print_expr, requires_text,
};
use crate::frontend::SourceSpan;
use crate::values::Value;

type Result<T> = std::result::Result<T, SemanticError>;

pub(super) fn elaborate(
    spec: &Spec,
    overrides: &BTreeMap<String, i64>,
    default: i64,
) -> Result<TypedSpec> {
    for (name, v) in overrides {
        if *v < 0 {
            return Err(SemanticError::NegativeConstant(name.clone()));
        }
    }
    let mut el = Elab::new(TypedSpec::default());
    for decl in &spec.decls {
        match decl {
            Decl::Val(v) => el.val(v, overrides, default)?,
            Decl::Type(t) => {
                let ty = el.resolve_type(&t.ty)?;
                el.spec.types.insert(t.name.clone(), ty);
            }
            Decl::Op(op) => el.op(op)?,
        }
    }
    if let Some(name) = overrides
        .keys()
        .find(|k| el.spec.consts.natural(k).is_none())
    {
        return Err(SemanticError::UnknownConstant(name.clone()));
    }
    Ok(el.spec)
}

pub(super) fn typecheck_closed(spec: &TypedSpec, e: &Expr) -> Result<(TExpr, usize)> {
    let mut el = Elab::new(spec.clone());
    let mut sc = Scope::default();
    let te = el.expr(&mut sc, e)?;
    Ok((te, sc.next_slot))
}

struct CurrentOp {
    name: String,
    index: usize,
    nondet: bool,
}

#[derive(Default)]
struct LoopCtx {
    snapshots: Vec<(usize, usize)>,
    forset: Option<(usize, SemType)>,
}

#[derive(Default)]
struct Scope {
    vars: Vec<(String, usize, SemType)>,
    next_slot: usize,
    result: Option<(usize, SemType)>,
    current: Option<CurrentOp>,
    loop_ctx: Option<LoopCtx>,
}

impl Scope {
    fn alloc(&mut self) -> usize {
        self.next_slot += 1;
        self.next_slot - 1
    }

    fn bind(&mut self, name: &str, ty: SemType) -> usize {
        let slot = self.alloc();
        self.vars.push((name.to_string(), slot, ty));
        slot
    }

    fn lookup(&self, name: &str) -> Option<(usize, SemType)> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _, _)| n == name)
            .map(|(_, s, t)| (*s, t.clone()))
    }
}

struct Elab {
    spec: TypedSpec,
    domains: HashMap<SemType, TypeDomain>,
}

fn mk(kind: TExprKind, ty: SemType, span: &SourceSpan, nondet: bool) -> TExpr {
    TExpr {
        kind,
        ty,
        span: span.clone(),
        nondet,
    }
}

fn bx(e: TExpr) -> Box<TExpr> {
    Box::new(e)
}

fn nat_type() -> SemType {
    SemType::Int { lo: 0, hi: i64::MAX }
}

impl Elab {
    fn new(spec: TypedSpec) -> Elab {
        Elab {
            spec,
            domains: HashMap::new(),
        }
    }

    fn domain(&mut self, ty: &SemType) -> TypeDomain {
        self.domains
            .entry(ty.clone())
            .or_insert_with(|| TypeDomain::new(ty.clone()))
            .clone()
    }

    // ---- declarations ----

    fn val(&mut self, v: &ValDecl, overrides: &BTreeMap<String, i64>, default: i64) -> Result<()> {
        let unbounded = matches!(v.ty.kind, TypeExprKind::Nat);
        match &v.value {
            None => {
                if !unbounded {
                    return Err(SemanticError::type_error(
                        &v.span,
                        format!("constant {} without a value must have type ℕ", v.name),
                    ));
                }
                let n = overrides.get(&v.name).copied().unwrap_or(default);
                self.spec.consts.naturals.push((v.name.clone(), n));
                self.spec
                    .consts
                    .values
                    .push((v.name.clone(), Value::Int(n), nat_type()));
            }
            Some(e) => {
                let ty = if unbounded {
                    nat_type()
                } else {
                    self.resolve_type(&v.ty)?
                };
                let te = self.closed(e)?;
                self.expect_compatible(&ty, &te.ty, &e.span)?;
                let value = self.eval_closed(&te)?;
                if !ty.contains(&value) {
                    return Err(crate::evaluator::RuntimeError::new(
                        RuntimeErrorKind::RangeError {
                            value: value.to_string(),
                            ty: ty.to_string(),
                        },
                        &e.span,
                    )
                    .into());
                }
                self.spec.consts.values.push((v.name.clone(), value, ty));
            }
        }
        Ok(())
    }

    fn closed(&mut self, e: &Expr) -> Result<TExpr> {
        let mut sc = Scope::default();
        self.expr(&mut sc, e)
    }

    fn eval_closed(&self, te: &TExpr) -> Result<Value> {
        let mut ev = Evaluator::new(&self.spec, EvalMode::Deterministic);
        let mut env = Vec::new();
        Ok(ev.eval(te, &mut env)?)
    }

    fn const_int(&mut self, e: &Expr) -> Result<i64> {
        let te = self.closed(e)?;
        if !te.ty.is_int() {
            return Err(SemanticError::type_error(&e.span, "expected an integer constant"));
        }
        match self.eval_closed(&te)? {
            Value::Int(i) => Ok(i),
            _ => unreachable!(),
        }
    }

    fn resolve_type(&mut self, t: &TypeExpr) -> Result<SemType> {
        let ty = match &t.kind {
            TypeExprKind::Bool => SemType::Bool,
            TypeExprKind::Nat => {
                return Err(SemanticError::type_error(
                    &t.span,
                    "ℕ needs an upper bound here, as in ℕ[N]",
                ))
            }
            TypeExprKind::NatUpTo(n) => {
                let n = self.const_int(n)?;
                if n < 0 {
                    return Err(SemanticError::type_error(&t.span, "empty type ℕ[n] with n < 0"));
                }
                SemType::nat(n)
            }
            TypeExprKind::IntRange(a, b) => {
                let (lo, hi) = (self.const_int(a)?, self.const_int(b)?);
                if lo > hi {
                    return Err(SemanticError::type_error(&t.span, "empty integer range"));
                }
                SemType::Int { lo, hi }
            }
            TypeExprKind::Set(e) => SemType::Set(Box::new(self.resolve_type(e)?)),
            TypeExprKind::Tuple(ts) => SemType::Tuple(
                ts.iter()
                    .map(|t| self.resolve_type(t))
                    .collect::<Result<_>>()?,
            ),
            TypeExprKind::Record(fs) => SemType::Record(
                fs.iter()
                    .map(|(n, t)| Ok((n.clone(), self.resolve_type(t)?)))
                    .collect::<Result<_>>()?,
            ),
            TypeExprKind::Array(n, e) => {
                let len = self.const_int(n)?;
                if len < 0 {
                    return Err(SemanticError::type_error(&t.span, "negative array length"));
                }
                SemType::Array(len as usize, Box::new(self.resolve_type(e)?))
            }
            TypeExprKind::Map(d, c) => {
                SemType::Map(Box::new(self.resolve_type(d)?), Box::new(self.resolve_type(c)?))
            }
            TypeExprKind::Named(name) => match self.spec.types.get(name) {
                Some(ty) => ty.clone(),
                None => {
                    return Err(SemanticError::type_error(&t.span, format!("unknown type {name}")))
                }
            },
        };
        if ty.cardinality().is_err() {
            return Err(SemanticError::Cardinality {
                span: t.span.clone(),
                ty: ty.to_string(),
            });
        }
        Ok(ty)
    }

    fn op(&mut self, d: &OpDecl) -> Result<()> {
        let mut sc = Scope::default();
        let mut params = Vec::new();
        for p in d.params() {
            let ty = self.resolve_type(&p.ty)?;
            sc.bind(&p.name, ty.clone());
            params.push(TParam {
                name: p.name.clone(),
                domain: self.domain(&ty),
                ty,
            });
        }
        let result = match d.kind {
            OpKind::Pred | OpKind::Theorem => SemType::Bool,
            OpKind::Fun | OpKind::Proc => match &d.result {
                Some(t) => self.resolve_type(t)?,
                None => {
                    return Err(SemanticError::type_error(
                        &d.span,
                        format!("{} needs a result type", d.name),
                    ))
                }
            },
        };
        let result_slot = sc.alloc();

        let mut recursive = false;
        let mut nondet = false;
        let mut visit = |e: &Expr| match &e.kind {
            ExprKind::Call(n, _) | ExprKind::Var(n) => {
                if *n == d.name {
                    recursive = true;
                } else if self.spec.op(n).is_some_and(|o| o.nondet) {
                    nondet = true;
                }
            }
            ExprKind::Choose(_) => nondet = true,
            _ => {}
        };
        let mut cmd_choice = false;
        match &d.body {
            OpBody::Expr(e) => visit_expr(e, &mut visit),
            OpBody::Proc { commands, ret } => {
                for c in commands {
                    visit_cmd(c, &mut visit, &mut |c| {
                        if matches!(
                            c.kind,
                            CmdKind::Choose(_)
                                | CmdKind::ChooseElse(..)
                                | CmdKind::ChooseDo { .. }
                                | CmdKind::ForIn { .. }
                        ) {
                            cmd_choice = true;
                        }
                    });
                }
                visit_expr(ret, &mut visit);
            }
        }
        let nondet = nondet || cmd_choice;
        if recursive && d.contract.decreases.is_none() {
            return Err(SemanticError::MissingDecreases {
                span: d.span.clone(),
                name: d.name.clone(),
            });
        }

        let placeholder = OpDef {
            name: d.name.clone(),
            kind: d.kind,
            params,
            result: result.clone(),
            requires: Vec::new(),
            ensures: Vec::new(),
            decreases: None,
            body: TBody::Expr(mk(TExprKind::Const(Value::Bool(true)), SemType::Bool, &d.span, false)),
            result_slot,
            frame_size: 0,
            recursive,
            nondet,
            decl: d.clone(),
        };
        let index = self.spec.push_op(placeholder);
        sc.current = Some(CurrentOp {
            name: d.name.clone(),
            index,
            nondet,
        });
        let built = self.op_parts(&mut sc, d, &result);
        let (requires, decreases, body, ensures) = match built {
            Ok(parts) => parts,
            Err(e) => {
                self.spec.ops.pop();
                self.spec.index.remove(&d.name);
                return Err(e);
            }
        };
        let op = &mut self.spec.ops[index];
        op.requires = requires;
        op.ensures = ensures;
        op.decreases = decreases;
        op.body = body;
        op.frame_size = sc.next_slot;

        if d.kind == OpKind::Theorem && d.params.is_none() {
            let mut ev = Evaluator::new(&self.spec, EvalMode::Deterministic);
            match ev.invoke_operation(index, &[]) {
                Ok(_) => {}
                Err(e) if matches!(e.kind, RuntimeErrorKind::TheoremViolated) => {
                    return Err(SemanticError::TheoremFailed {
                        span: d.span.clone(),
                        name: d.name.clone(),
                    })
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    #[allow(clippy::type_complexity)]
    fn op_parts(
        &mut self,
        sc: &mut Scope,
        d: &OpDecl,
        result: &SemType,
    ) -> Result<(Vec<Annot>, Option<Annot>, TBody, Vec<Annot>)> {
        let mut requires = Vec::new();
        for r in &d.contract.requires {
            let e = self.formula(sc, r)?;
            requires.push(annot(e, requires_text(r), r));
        }
        let decreases = match &d.contract.decreases {
            Some(m) => {
                let e = self.int_expr(sc, m)?;
                Some(annot(e, decreases_text(m), m))
            }
            None => None,
        };
        let body = match &d.body {
            OpBody::Expr(e) => {
                let te = self.expr(sc, e)?;
                self.expect_compatible(result, &te.ty, &e.span)?;
                TBody::Expr(te)
            }
            OpBody::Proc { commands, ret } => {
                let mark = sc.vars.len();
                let cmds = commands
                    .iter()
                    .map(|c| self.cmd(sc, c))
                    .collect::<Result<Vec<_>>>()?;
                let ret_e = self.expr(sc, ret)?;
                self.expect_compatible(result, &ret_e.ty, &ret.span)?;
                sc.vars.truncate(mark);
                TBody::Proc {
                    commands: cmds,
                    ret: ret_e,
                }
            }
        };
        sc.result = Some((
            self.spec.ops[sc.current.as_ref().unwrap().index].result_slot,
            result.clone(),
        ));
        let mut ensures = Vec::new();
        for q in &d.contract.ensures {
            let e = self.formula(sc, q)?;
            ensures.push(annot(e, ensures_text(q), q));
        }
        sc.result = None;
        Ok((requires, decreases, body, ensures))
    }

    // ---- commands ----

    fn scoped(&mut self, sc: &mut Scope, c: &Cmd) -> Result<TCmd> {
        let mark = sc.vars.len();
        let out = self.cmd(sc, c);
        sc.vars.truncate(mark);
        out
    }

    fn loop_annotations(
        &mut self,
        sc: &mut Scope,
        a: &LoopAnnotations,
        forset: Option<(usize, SemType)>,
    ) -> Result<TLoop> {
        let saved = sc.loop_ctx.replace(LoopCtx {
            snapshots: Vec::new(),
            forset,
        });
        let out = (|| -> Result<_> {
            let mut lp = TLoop::default();
            for inv in &a.invariants {
                let e = self.formula(sc, inv)?;
                lp.invariants.push(annot(e, invariant_text(inv), inv));
            }
            if let Some(m) = &a.decreases {
                let e = self.int_expr(sc, m)?;
                lp.decreases = Some(annot(e, decreases_text(m), m));
            }
            Ok(lp)
        })();
        let ctx = std::mem::replace(&mut sc.loop_ctx, saved).unwrap_or_default();
        let mut lp = out?;
        lp.snapshots = ctx.snapshots;
        Ok(lp)
    }

    fn cmd(&mut self, sc: &mut Scope, c: &Cmd) -> Result<TCmd> {
        let kind = match &c.kind {
            CmdKind::Skip => TCmdKind::Skip,
            CmdKind::VarDecl { name, ty, init } => {
                let ty = self.resolve_type(ty)?;
                let init = match init {
                    Some(e) => {
                        let te = self.expr(sc, e)?;
                        self.expect_compatible(&ty, &te.ty, &e.span)?;
                        Some(te)
                    }
                    None => None,
                };
                let slot = sc.bind(name, ty.clone());
                TCmdKind::VarDecl { slot, ty, init }
            }
            CmdKind::Assign(lv, e) => {
                let Some((slot, mut ty)) = sc.lookup(&lv.name) else {
                    return Err(SemanticError::type_error(
                        &lv.span,
                        format!("unknown variable {}", lv.name),
                    ));
                };
                let mut indices = Vec::new();
                for ix in &lv.indices {
                    let te = self.expr(sc, ix)?;
                    ty = self.index_type(&ty, &te, &ix.span)?;
                    indices.push(te);
                }
                let value = self.expr(sc, e)?;
                self.expect_compatible(&ty, &value.ty, &e.span)?;
                TCmdKind::Assign {
                    slot,
                    indices,
                    value,
                    ty,
                }
            }
            CmdKind::Block(cs) => {
                let mark = sc.vars.len();
                let out = cs
                    .iter()
                    .map(|c| self.cmd(sc, c))
                    .collect::<Result<Vec<_>>>();
                sc.vars.truncate(mark);
                TCmdKind::Block(out?)
            }
            CmdKind::If(cond, then, els) => {
                let cond = self.formula(sc, cond)?;
                let then = Box::new(self.scoped(sc, then)?);
                let els = match els {
                    Some(e) => Some(Box::new(self.scoped(sc, e)?)),
                    None => None,
                };
                TCmdKind::If(cond, then, els)
            }
            CmdKind::While {
                cond,
                annotations,
                body,
            } => {
                let cond = self.formula(sc, cond)?;
                let lp = self.loop_annotations(sc, annotations, None)?;
                let body = Box::new(self.scoped(sc, body)?);
                TCmdKind::While { cond, lp, body }
            }
            CmdKind::For {
                name,
                ty,
                init,
                cond,
                update,
                annotations,
                body,
            } => {
                let mark = sc.vars.len();
                let decl = Cmd {
                    kind: CmdKind::VarDecl {
                        name: name.clone(),
                        ty: ty.clone(),
                        init: Some(init.clone()),
                    },
                    span: c.span.clone(),
                };
                let out = (|| -> Result<_> {
                    let init = Box::new(self.cmd(sc, &decl)?);
                    let cond = self.formula(sc, cond)?;
                    let update = Box::new(self.scoped(sc, update)?);
                    let lp = self.loop_annotations(sc, annotations, None)?;
                    let body = Box::new(self.scoped(sc, body)?);
                    Ok(TCmdKind::For {
                        init,
                        cond,
                        update,
                        lp,
                        body,
                    })
                })();
                sc.vars.truncate(mark);
                out?
            }
            CmdKind::ForIn {
                binders,
                annotations,
                body,
            } => {
                let mark = sc.vars.len();
                let out = (|| -> Result<_> {
                    let tb = self.binders(sc, binders, &c.span)?;
                    let forset = match tb.vars.as_slice() {
                        [b] => Some((sc.alloc(), SemType::Set(Box::new(b.ty.clone())))),
                        _ => None,
                    };
                    let bound = sc.vars.split_off(mark);
                    let lp = self.loop_annotations(sc, annotations, forset.clone());
                    sc.vars.extend(bound);
                    let lp = lp?;
                    let body = Box::new(self.scoped(sc, body)?);
                    Ok(TCmdKind::ForIn {
                        binders: tb,
                        forset: forset.map(|(s, _)| s),
                        lp,
                        body,
                    })
                })();
                sc.vars.truncate(mark);
                out?
            }
            CmdKind::Choose(b) => TCmdKind::Choose(self.binders(sc, b, &c.span)?),
            CmdKind::ChooseElse(b, then, els) => {
                let mark = sc.vars.len();
                let out = (|| -> Result<_> {
                    let tb = self.binders(sc, b, &c.span)?;
                    let then = Box::new(self.scoped(sc, then)?);
                    Ok((tb, then))
                })();
                sc.vars.truncate(mark);
                let (tb, then) = out?;
                let els = Box::new(self.scoped(sc, els)?);
                TCmdKind::ChooseElse(tb, then, els)
            }
            CmdKind::ChooseDo {
                binders,
                annotations,
                body,
            } => {
                let mark = sc.vars.len();
                let out = (|| -> Result<_> {
                    let tb = self.binders(sc, binders, &c.span)?;
                    let bound = sc.vars.split_off(mark);
                    let lp = self.loop_annotations(sc, annotations, None);
                    sc.vars.extend(bound);
                    let lp = lp?;
                    let body = Box::new(self.scoped(sc, body)?);
                    Ok(TCmdKind::ChooseDo {
                        binders: tb,
                        lp,
                        body,
                    })
                })();
                sc.vars.truncate(mark);
                out?
            }
            CmdKind::Assert(f) => {
                let e = self.formula(sc, f)?;
                TCmdKind::Assert(annot(e, format!("assert {};", print_expr(f)), f))
            }
            CmdKind::Print(e) => TCmdKind::Print(self.expr(sc, e)?),
        };
        Ok(TCmd {
            kind,
            span: c.span.clone(),
        })
    }

    // ---- expressions ----

    fn expect_compatible(&self, want: &SemType, got: &SemType, span: &SourceSpan) -> Result<()> {
        if want.compatible(got) {
            Ok(())
        } else {
            Err(SemanticError::type_error(
                span,
                format!("expected a value of type {want}, found {got}"),
            ))
        }
    }

    fn formula(&mut self, sc: &mut Scope, e: &Expr) -> Result<TExpr> {
        let te = self.expr(sc, e)?;
        if !te.ty.is_bool() {
            return Err(SemanticError::type_error(
                &e.span,
                format!("expected a formula, found {}", te.ty),
            ));
        }
        Ok(te)
    }

    fn int_expr(&mut self, sc: &mut Scope, e: &Expr) -> Result<TExpr> {
        let te = self.expr(sc, e)?;
        if !te.ty.is_int() {
            return Err(SemanticError::type_error(
                &e.span,
                format!("expected an integer, found {}", te.ty),
            ));
        }
        Ok(te)
    }

    fn set_expr(&mut self, sc: &mut Scope, e: &Expr) -> Result<(TExpr, SemType)> {
        let te = self.expr(sc, e)?;
        match &te.ty {
            SemType::Set(elem) => {
                let elem = (**elem).clone();
                Ok((te, elem))
            }
            other => Err(SemanticError::type_error(
                &e.span,
                format!("expected a set, found {other}"),
            )),
        }
    }

    fn index_type(&self, base: &SemType, index: &TExpr, span: &SourceSpan) -> Result<SemType> {
        match base {
            SemType::Array(_, elem) => {
                if !index.ty.is_int() {
                    return Err(SemanticError::type_error(span, "array index must be an integer"));
                }
                Ok((**elem).clone())
            }
            SemType::Map(dom, cod) => {
                self.expect_compatible(dom, &index.ty, span)?;
                Ok((**cod).clone())
            }
            other => Err(SemanticError::type_error(
                span,
                format!("cannot index a value of type {other}"),
            )),
        }
    }

    fn binders(&mut self, sc: &mut Scope, b: &Binders, span: &SourceSpan) -> Result<TBinders> {
        let mut vars = Vec::new();
        for v in &b.vars {
            let (ty, domain) = match &v.domain {
                BinderDomain::Type(t) => {
                    let ty = self.resolve_type(t)?;
                    let d = self.domain(&ty);
                    (ty, TDomain::Type(d))
                }
                BinderDomain::Member(e) => {
                    let (te, elem) = self.set_expr(sc, e)?;
                    (elem, TDomain::Member(te))
                }
            };
            let slot = sc.bind(&v.name, ty.clone());
            vars.push(TBinder { slot, ty, domain });
        }
        let filter = match &b.filter {
            Some(f) => Some(bx(self.formula(sc, f)?)),
            None => None,
        };
        Ok(TBinders {
            vars,
            filter,
            span: span.clone(),
        })
    }

    fn call(&mut self, sc: &mut Scope, name: &str, args: &[Expr], span: &SourceSpan) -> Result<TExpr> {
        let Some(index) = self.spec.op_index(name) else {
            return Err(SemanticError::type_error(span, format!("unknown operation {name}")));
        };
        let mut targs = Vec::new();
        for a in args {
            targs.push(self.expr(sc, a)?);
        }
        let op = &self.spec.ops[index];
        if op.params.len() != targs.len() {
            return Err(SemanticError::type_error(
                span,
                format!(
                    "{name} expects {} argument(s), found {}",
                    op.params.len(),
                    targs.len()
                ),
            ));
        }
        for (p, a) in op.params.iter().zip(&targs) {
            self.expect_compatible(&p.ty, &a.ty, &a.span)?;
        }
        let callee_nondet = match &sc.current {
            Some(cur) if cur.name == name => cur.nondet,
            _ => op.nondet,
        };
        let nondet = callee_nondet || targs.iter().any(|a| a.nondet);
        Ok(mk(
            TExprKind::Call {
                op: index,
                args: targs,
            },
            op.result.clone(),
            span,
            nondet,
        ))
    }

    fn var(&mut self, sc: &mut Scope, name: &str, span: &SourceSpan) -> Result<TExpr> {
        if let Some((slot, ty)) = sc.lookup(name) {
            return Ok(mk(TExprKind::Var(slot), ty, span, false));
        }
        if name == "result" {
            if let Some((slot, ty)) = sc.result.clone() {
                return Ok(mk(TExprKind::Var(slot), ty, span, false));
            }
        }
        if sc.loop_ctx.is_some() {
            if name == "forSet" {
                if let Some((slot, ty)) = sc.loop_ctx.as_ref().and_then(|l| l.forset.clone()) {
                    return Ok(mk(TExprKind::Var(slot), ty, span, false));
                }
            }
            if let Some((slot, ty)) = name.strip_prefix("old_").and_then(|x| sc.lookup(x)) {
                let existing = sc
                    .loop_ctx
                    .as_ref()
                    .and_then(|l| l.snapshots.iter().find(|(from, _)| *from == slot))
                    .map(|(_, to)| *to);
                let to = match existing {
                    Some(to) => to,
                    None => {
                        let to = sc.alloc();
                        sc.loop_ctx.as_mut().unwrap().snapshots.push((slot, to));
                        to
                    }
                };
                return Ok(mk(TExprKind::Var(to), ty, span, false));
            }
        }
        if let Some((_, v, ty)) = self.spec.consts.values.iter().find(|(n, _, _)| n == name) {
            return Ok(mk(TExprKind::Const(v.clone()), ty.clone(), span, false));
        }
        if self.spec.op(name).is_some_and(|o| !o.has_params()) {
            return self.call(sc, name, &[], span);
        }
        Err(SemanticError::type_error(span, format!("unknown name {name}")))
    }

    fn expr(&mut self, sc: &mut Scope, e: &Expr) -> Result<TExpr> {
        let span = &e.span;
        Ok(match &e.kind {
            ExprKind::Int(i) => mk(
                TExprKind::Const(Value::Int(*i)),
                SemType::Int { lo: *i, hi: *i },
                span,
                false,
            ),
            ExprKind::Bool(b) => mk(TExprKind::Const(Value::Bool(*b)), SemType::Bool, span, false),
            ExprKind::Var(name) => self.var(sc, name, span)?,
            ExprKind::Unary(UnOp::Not, a) => {
                let a = self.formula(sc, a)?;
                let nd = a.nondet;
                mk(TExprKind::Not(bx(a)), SemType::Bool, span, nd)
            }
            ExprKind::Unary(UnOp::Neg, a) => {
                let a = self.int_expr(sc, a)?;
                let nd = a.nondet;
                mk(TExprKind::Neg(bx(a)), SemType::any_int(), span, nd)
            }
            ExprKind::Binary(op, a, b) => self.binary(sc, *op, a, b, span)?,
            ExprKind::Call(name, args) => self.call(sc, name, args, span)?,
            ExprKind::Tuple(items) => {
                let items = items
                    .iter()
                    .map(|x| self.expr(sc, x))
                    .collect::<Result<Vec<_>>>()?;
                let ty = SemType::Tuple(items.iter().map(|x| x.ty.clone()).collect());
                let nd = items.iter().any(|x| x.nondet);
                mk(TExprKind::Tuple(items), ty, span, nd)
            }
            ExprKind::Record(fields) => {
                let mut items = Vec::new();
                let mut tys = Vec::new();
                for (n, x) in fields {
                    let te = self.expr(sc, x)?;
                    tys.push((n.clone(), te.ty.clone()));
                    items.push((shared_name(n), te));
                }
                let nd = items.iter().any(|(_, x)| x.nondet);
                mk(TExprKind::Record(items), SemType::Record(tys), span, nd)
            }
            ExprKind::Proj(a, k) => {
                let a = self.expr(sc, a)?;
                let ty = match &a.ty {
                    SemType::Tuple(ts) if *k >= 1 && *k <= ts.len() => ts[*k - 1].clone(),
                    SemType::Tuple(ts) => {
                        return Err(SemanticError::type_error(
                            span,
                            format!("tuple has {} components, no component {k}", ts.len()),
                        ))
                    }
                    other => {
                        return Err(SemanticError::type_error(
                            span,
                            format!("projection .{k} on non-tuple type {other}"),
                        ))
                    }
                };
                let nd = a.nondet;
                mk(TExprKind::Proj(bx(a), *k - 1), ty, span, nd)
            }
            ExprKind::Field(a, f) => {
                let a = self.expr(sc, a)?;
                let (pos, ty) = match &a.ty {
                    SemType::Record(fs) => match fs.iter().position(|(n, _)| n == f) {
                        Some(p) => (p, fs[p].1.clone()),
                        None => {
                            return Err(SemanticError::type_error(span, format!("no field {f}")))
                        }
                    },
                    other => {
                        return Err(SemanticError::type_error(
                            span,
                            format!("field access .{f} on non-record type {other}"),
                        ))
                    }
                };
                let nd = a.nondet;
                mk(TExprKind::Proj(bx(a), pos), ty, span, nd)
            }
            ExprKind::Index(a, i) => {
                let a = self.expr(sc, a)?;
                let i = self.expr(sc, i)?;
                let ty = self.index_type(&a.ty, &i, span)?;
                let nd = a.nondet || i.nondet;
                mk(TExprKind::Index(bx(a), bx(i)), ty, span, nd)
            }
            ExprKind::Init(t, v) => {
                let ty = self.resolve_type(t)?;
                let v = self.expr(sc, v)?;
                let nd = v.nondet;
                let kind = match &ty {
                    SemType::Array(n, elem) => {
                        self.expect_compatible(elem, &v.ty, span)?;
                        TExprKind::ArrayInit(*n, bx(v))
                    }
                    SemType::Map(dom, cod) => {
                        self.expect_compatible(cod, &v.ty, span)?;
                        TExprKind::MapInit(self.domain(dom), bx(v))
                    }
                    other => {
                        return Err(SemanticError::type_error(
                            span,
                            format!("cannot construct a value of type {other} from one element"),
                        ))
                    }
                };
                mk(kind, ty, span, nd)
            }
            ExprKind::SetLit(items) => {
                let items = items
                    .iter()
                    .map(|x| self.expr(sc, x))
                    .collect::<Result<Vec<_>>>()?;
                let mut elem = items[0].ty.clone();
                for x in &items[1..] {
                    self.expect_compatible(&elem, &x.ty, &x.span)?;
                    elem = elem.join(&x.ty);
                }
                let nd = items.iter().any(|x| x.nondet);
                mk(TExprKind::SetLit(items), SemType::Set(Box::new(elem)), span, nd)
            }
            ExprKind::EmptySet(t) => {
                let elem = self.resolve_type(t)?;
                mk(
                    TExprKind::Const(Value::empty_set()),
                    SemType::Set(Box::new(elem)),
                    span,
                    false,
                )
            }
            ExprKind::Range(a, b) => {
                let a = self.int_expr(sc, a)?;
                let b = self.int_expr(sc, b)?;
                let elem = a.ty.join(&b.ty);
                let nd = a.nondet || b.nondet;
                mk(TExprKind::Range(bx(a), bx(b)), SemType::Set(Box::new(elem)), span, nd)
            }
            ExprKind::Card(a) => {
                let (a, _) = self.set_expr(sc, a)?;
                let nd = a.nondet;
                mk(TExprKind::Card(bx(a)), nat_type(), span, nd)
            }
            ExprKind::Comprehension(body, b) => {
                let mark = sc.vars.len();
                let out = (|| -> Result<_> {
                    let tb = self.binders(sc, b, span)?;
                    let body = self.expr(sc, body)?;
                    Ok((tb, body))
                })();
                sc.vars.truncate(mark);
                let (tb, body) = out?;
                let nd = tb.nondet() || body.nondet;
                let ty = SemType::Set(Box::new(body.ty.clone()));
                mk(TExprKind::Comprehension(bx(body), tb), ty, span, nd)
            }
            ExprKind::Quant(q, b, body) => {
                let mark = sc.vars.len();
                let out = (|| -> Result<_> {
                    let tb = self.binders(sc, b, span)?;
                    let body = self.formula(sc, body)?;
                    Ok((tb, body))
                })();
                sc.vars.truncate(mark);
                let (tb, body) = out?;
                let nd = tb.nondet() || body.nondet;
                mk(TExprKind::Quant(*q, tb, bx(body)), SemType::Bool, span, nd)
            }
            ExprKind::Sum(b, body) => {
                let mark = sc.vars.len();
                let out = (|| -> Result<_> {
                    let tb = self.binders(sc, b, span)?;
                    let body = self.int_expr(sc, body)?;
                    Ok((tb, body))
                })();
                sc.vars.truncate(mark);
                let (tb, body) = out?;
                let nd = tb.nondet() || body.nondet;
                mk(TExprKind::Sum(tb, bx(body)), SemType::any_int(), span, nd)
            }
            ExprKind::Choose(b) => {
                let mark = sc.vars.len();
                let tb = self.binders(sc, b, span);
                sc.vars.truncate(mark);
                let tb = tb?;
                let ty = match tb.vars.as_slice() {
                    [one] => one.ty.clone(),
                    many => SemType::Tuple(many.iter().map(|v| v.ty.clone()).collect()),
                };
                mk(TExprKind::Choose(tb), ty, span, true)
            }
            ExprKind::If(c, a, b) => {
                let c = self.formula(sc, c)?;
                let a = self.expr(sc, a)?;
                let b = self.expr(sc, b)?;
                self.expect_compatible(&a.ty, &b.ty, &b.span)?;
                let ty = a.ty.join(&b.ty);
                let nd = c.nondet || a.nondet || b.nondet;
                mk(TExprKind::If(bx(c), bx(a), bx(b)), ty, span, nd)
            }
            ExprKind::Let(name, v, body) => {
                let v = self.expr(sc, v)?;
                let mark = sc.vars.len();
                let slot = sc.bind(name, v.ty.clone());
                let body = self.expr(sc, body);
                sc.vars.truncate(mark);
                let body = body?;
                let ty = body.ty.clone();
                let nd = v.nondet || body.nondet;
                mk(TExprKind::Let(slot, bx(v), bx(body)), ty, span, nd)
            }
            ExprKind::Print(a) => {
                let a = self.expr(sc, a)?;
                let ty = a.ty.clone();
                let nd = a.nondet;
                mk(TExprKind::Print(bx(a)), ty, span, nd)
            }
        })
    }

    fn binary(
        &mut self,
        sc: &mut Scope,
        op: BinOp,
        a: &Expr,
        b: &Expr,
        span: &SourceSpan,
    ) -> Result<TExpr> {
        use BinOp::*;
        let ta = self.expr(sc, a)?;
        let tb = self.expr(sc, b)?;
        let operand_error = |what: &str| {
            Err(SemanticError::type_error(
                span,
                format!(
                    "operator {} expects {what}, found {} and {}",
                    op.symbol(),
                    ta.ty,
                    tb.ty
                ),
            ))
        };
        let ty = match op {
            Add | Sub | Mul | Div | Mod | Pow => {
                if !(ta.ty.is_int() && tb.ty.is_int()) {
                    return operand_error("integers");
                }
                SemType::any_int()
            }
            Lt | Le | Gt | Ge => {
                if !(ta.ty.is_int() && tb.ty.is_int()) {
                    return operand_error("integers");
                }
                SemType::Bool
            }
            And | Or | Implies | Iff => {
                if !(ta.ty.is_bool() && tb.ty.is_bool()) {
                    return operand_error("formulas");
                }
                SemType::Bool
            }
            Eq | Neq => {
                if !ta.ty.compatible(&tb.ty) {
                    return operand_error("values of the same type");
                }
                SemType::Bool
            }
            Union | Intersect | Diff | Subseteq => {
                let ok = matches!((&ta.ty, &tb.ty), (SemType::Set(_), SemType::Set(_)))
                    && ta.ty.compatible(&tb.ty);
                if !ok {
                    return operand_error("sets of the same element type");
                }
                match op {
                    Subseteq => SemType::Bool,
                    Diff => ta.ty.clone(),
                    _ => ta.ty.join(&tb.ty),
                }
            }
            In => match &tb.ty {
                SemType::Set(elem) if elem.compatible(&ta.ty) => SemType::Bool,
                _ => return operand_error("an element and a set"),
            },
        };
        let nd = ta.nondet || tb.nondet;
        Ok(mk(TExprKind::Binary(op, bx(ta), bx(tb)), ty, span, nd))
    }
}

fn annot(expr: TExpr, text: String, src: &Expr) -> Annot {
    Annot {
        expr,
        text,
        span: src.span.clone(),
    }
}

/// Calls `f` on `e` and every subexpression.
pub(crate) fn visit_expr(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    let binders = |b: &Binders, f: &mut dyn FnMut(&Expr)| {
        for v in &b.vars {
            if let BinderDomain::Member(d) = &v.domain {
                visit_expr(d, f);
            }
        }
        if let Some(x) = &b.filter {
            visit_expr(x, f);
        }
    };
    match &e.kind {
        ExprKind::Int(_)
        | ExprKind::Bool(_)
        | ExprKind::Var(_)
        | ExprKind::EmptySet(_) => {}
        ExprKind::Unary(_, a)
        | ExprKind::Proj(a, _)
        | ExprKind::Field(a, _)
        | ExprKind::Init(_, a)
        | ExprKind::Card(a)
        | ExprKind::Print(a) => visit_expr(a, f),
        ExprKind::Binary(_, a, b)
        | ExprKind::Index(a, b)
        | ExprKind::Range(a, b)
        | ExprKind::Let(_, a, b) => {
            visit_expr(a, f);
            visit_expr(b, f);
        }
        ExprKind::Call(_, xs) | ExprKind::Tuple(xs) | ExprKind::SetLit(xs) => {
            xs.iter().for_each(|x| visit_expr(x, f))
        }
        ExprKind::Record(fs) => fs.iter().for_each(|(_, x)| visit_expr(x, f)),
        ExprKind::Comprehension(body, b) => {
            binders(b, f);
            visit_expr(body, f);
        }
        ExprKind::Quant(_, b, body) | ExprKind::Sum(b, body) => {
            binders(b, f);
            visit_expr(body, f);
        }
        ExprKind::Choose(b) => binders(b, f),
        ExprKind::If(c, a, b) => {
            visit_expr(c, f);
            visit_expr(a, f);
            visit_expr(b, f);
        }
    }
}

/// Calls `fc` on `c` and every nested command, and `fe` on every expression
/// outside loop annotations.
pub(crate) fn visit_cmd(c: &Cmd, fe: &mut dyn FnMut(&Expr), fc: &mut dyn FnMut(&Cmd)) {
    fc(c);
    let binders = |b: &Binders, fe: &mut dyn FnMut(&Expr)| {
        for v in &b.vars {
            if let BinderDomain::Member(d) = &v.domain {
                visit_expr(d, fe);
            }
        }
        if let Some(x) = &b.filter {
            visit_expr(x, fe);
        }
    };
    match &c.kind {
        CmdKind::Skip => {}
        CmdKind::VarDecl { init, .. } => {
            if let Some(e) = init {
                visit_expr(e, fe);
            }
        }
        CmdKind::Assign(lv, e) => {
            lv.indices.iter().for_each(|i| visit_expr(i, fe));
            visit_expr(e, fe);
        }
        CmdKind::Block(cs) => cs.iter().for_each(|c| visit_cmd(c, fe, fc)),
        CmdKind::If(cond, a, b) => {
            visit_expr(cond, fe);
            visit_cmd(a, fe, fc);
            if let Some(b) = b {
                visit_cmd(b, fe, fc);
            }
        }
        CmdKind::While { cond, body, .. } => {
            visit_expr(cond, fe);
            visit_cmd(body, fe, fc);
        }
        CmdKind::For {
            init,
            cond,
            update,
            body,
            ..
        } => {
            visit_expr(init, fe);
            visit_expr(cond, fe);
            visit_cmd(update, fe, fc);
            visit_cmd(body, fe, fc);
        }
        CmdKind::ForIn { binders: b, body, .. } | CmdKind::ChooseDo { binders: b, body, .. } => {
            binders(b, fe);
            visit_cmd(body, fe, fc);
        }
        CmdKind::Choose(b) => binders(b, fe),
        CmdKind::ChooseElse(b, x, y) => {
            binders(b, fe);
            visit_cmd(x, fe, fc);
            visit_cmd(y, fe, fc);
        }
        CmdKind::Assert(e) | CmdKind::Print(e) => visit_expr(e, fe),
    }
}
