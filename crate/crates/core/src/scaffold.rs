//! Generates the standard validation suite for a precondition/postcondition
//! pair: satisfiability of the precondition, non-triviality, satisfiability
//! and uniqueness of the postcondition, and the implicitly defined function.

use thiserror::Error;

use crate::frontend::ast::*;
use crate::frontend::printer::print_decl;
use crate::frontend::SourceSpan;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScaffoldError {
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("{post} must take the parameters of {pre} plus one output parameter")]
    ArityMismatch { pre: String, post: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecSkeleton {
    pub pre_name: String,
    pub post_name: String,
    pub input_params: Vec<(String, TypeExpr)>,
    pub output_param: (String, TypeExpr),
}

fn find_pred<'s>(spec: &'s Spec, name: &str) -> Result<&'s OpDecl, ScaffoldError> {
    spec.decls
        .iter()
        .rev()
        .find_map(|d| match d {
            Decl::Op(op) if op.name == name && op.kind == OpKind::Pred => Some(op),
            _ => None,
        })
        .ok_or_else(|| ScaffoldError::UnknownPredicate(name.to_string()))
}

fn same_type(a: &TypeExpr, b: &TypeExpr) -> bool {
    let (mut a, mut b) = (a.clone(), b.clone());
    a.clear_spans();
    b.clear_spans();
    a == b
}

impl SpecSkeleton {
    /// Reads the parameter lists of the two predicates in `spec`.
    pub fn from_spec(spec: &Spec, pre: &str, post: &str) -> Result<SpecSkeleton, ScaffoldError> {
        let p = find_pred(spec, pre)?;
        let q = find_pred(spec, post)?;
        let mismatch = || ScaffoldError::ArityMismatch {
            pre: pre.to_string(),
            post: post.to_string(),
        };
        let (inputs, outputs) = (p.params(), q.params());
        if outputs.len() != inputs.len() + 1 {
            return Err(mismatch());
        }
        if !inputs
            .iter()
            .zip(outputs)
            .all(|(x, y)| x.name == y.name && same_type(&x.ty, &y.ty))
        {
            return Err(mismatch());
        }
        let out = outputs.last().unwrap();
        Ok(SpecSkeleton {
            pre_name: pre.to_string(),
            post_name: post.to_string(),
            input_params: inputs.iter().map(|x| (x.name.clone(), x.ty.clone())).collect(),
            output_param: (out.name.clone(), out.ty.clone()),
        })
    }
}

fn sp() -> SourceSpan {
    SourceSpan::default()
}

fn e(kind: ExprKind) -> Expr {
    Expr::new(kind, sp())
}

fn var(name: &str) -> Expr {
    e(ExprKind::Var(name.to_string()))
}

fn call(name: &str, args: &[&str]) -> Expr {
    e(ExprKind::Call(name.to_string(), args.iter().map(|a| var(a)).collect()))
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    e(ExprKind::Binary(op, Box::new(a), Box::new(b)))
}

fn not(a: Expr) -> Expr {
    e(ExprKind::Unary(UnOp::Not, Box::new(a)))
}

fn binders(vars: &[(String, TypeExpr)]) -> Binders {
    Binders {
        vars: vars
            .iter()
            .map(|(n, t)| Binder {
                name: n.clone(),
                domain: BinderDomain::Type(t.clone()),
                span: sp(),
            })
            .collect(),
        filter: None,
    }
}

fn quant(q: Quantifier, vars: &[(String, TypeExpr)], body: Expr) -> Expr {
    e(ExprKind::Quant(q, binders(vars), Box::new(body)))
}

fn params(vars: &[(String, TypeExpr)]) -> Vec<Param> {
    vars.iter()
        .map(|(n, t)| Param {
            name: n.clone(),
            ty: t.clone(),
            span: sp(),
        })
        .collect()
}

fn theorem(name: String, ps: Option<Vec<Param>>, body: Expr) -> Decl {
    Decl::Op(OpDecl {
        kind: OpKind::Theorem,
        name,
        params: ps,
        result: None,
        contract: Contract::default(),
        body: OpBody::Expr(body),
        span: sp(),
    })
}

impl SpecSkeleton {
    fn names(&self) -> Vec<&str> {
        self.input_params.iter().map(|(n, _)| n.as_str()).collect()
    }

    fn pre(&self) -> Expr {
        call(&self.pre_name, &self.names())
    }

    fn post(&self, output: &str) -> Expr {
        let mut args = self.names();
        args.push(output);
        call(&self.post_name, &args)
    }

    fn output_as(&self, name: String) -> (String, TypeExpr) {
        (name, self.output_param.1.clone())
    }

    fn name(&self, suffix: &str) -> String {
        format!("{}_{suffix}", self.post_name)
    }

    /// The weaker form of the non-triviality check.
    pub fn weak_post_not_valid(&self) -> Decl {
        let mut vars = self.input_params.clone();
        vars.push(self.output_param.clone());
        let y = &self.output_param.0;
        let body = quant(
            Quantifier::Exists,
            &vars,
            bin(BinOp::And, self.pre(), not(self.post(y))),
        );
        theorem(self.name("postNotValidWeak"), None, body)
    }
}

/// The five validation declarations, in a fixed order.
pub fn generate_validation_theorems(skel: &SpecSkeleton) -> Vec<Decl> {
    let y = skel.output_param.0.as_str();
    let out = [skel.output_param.clone()];
    let ins = Some(params(&skel.input_params));

    let pre_sat = theorem(
        skel.name("preSat"),
        None,
        quant(Quantifier::Exists, &skel.input_params, skel.pre()),
    );
    let post_not_valid = theorem(
        skel.name("postNotValid"),
        ins.clone(),
        bin(
            BinOp::Implies,
            skel.pre(),
            quant(Quantifier::Exists, &out, not(skel.post(y))),
        ),
    );
    let post_sat = theorem(
        skel.name("postSat"),
        ins.clone(),
        bin(
            BinOp::Implies,
            skel.pre(),
            quant(Quantifier::Exists, &out, skel.post(y)),
        ),
    );
    let (y1, y2) = (format!("{y}1"), format!("{y}2"));
    let mut all = skel.input_params.clone();
    all.push(skel.output_as(y1.clone()));
    all.push(skel.output_as(y2.clone()));
    let result_unique = theorem(
        skel.name("resultUnique"),
        Some(params(&all)),
        bin(
            BinOp::Implies,
            bin(
                BinOp::And,
                bin(BinOp::And, skel.pre(), skel.post(&y1)),
                skel.post(&y2),
            ),
            bin(BinOp::Eq, var(&y1), var(&y2)),
        ),
    );
    let fun = Decl::Op(OpDecl {
        kind: OpKind::Fun,
        name: skel.name("Fun"),
        params: ins,
        result: Some(skel.output_param.1.clone()),
        contract: Contract {
            requires: vec![skel.pre()],
            ensures: Vec::new(),
            decreases: None,
        },
        body: OpBody::Expr(e(ExprKind::Choose(Binders {
            vars: binders(&out).vars,
            filter: Some(Box::new(skel.post(y))),
        }))),
        span: sp(),
    });
    vec![pre_sat, post_not_valid, post_sat, result_unique, fun]
}

/// Source text of the suite, with the weak alternative commented out.
pub fn render_suite(skel: &SpecSkeleton) -> String {
    let mut out = String::new();
    for d in generate_validation_theorems(skel) {
        out.push_str(&print_decl(&d));
        out.push('\n');
    }
    for line in print_decl(&skel.weak_post_not_valid()).lines() {
        out.push_str("// ");
        out.push_str(line);
        out.push('\n');
    }
    out
}
