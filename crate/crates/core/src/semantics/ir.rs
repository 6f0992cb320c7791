//! The executable form of a specification: expressions and commands with
//! resolved names, variable slots, and types.

use std::sync::{Arc, OnceLock};

use super::SemType;
use crate::frontend::ast::{BinOp, OpDecl, OpKind, Quantifier};
use crate::frontend::SourceSpan;
use crate::values::{materialize, Value};

/// Domains up to this size are materialized once and shared.
const MATERIALIZE_LIMIT: u128 = 1 << 22;

#[derive(Debug, Clone)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: SemType,
    pub span: SourceSpan,
    /// Whether evaluation can reach a choice point.
    pub nondet: bool,
}

#[derive(Debug, Clone)]
pub enum TExprKind {
    Const(Value),
    Var(usize),
    Not(Box<TExpr>),
    Neg(Box<TExpr>),
    Binary(BinOp, Box<TExpr>, Box<TExpr>),
    Call { op: usize, args: Vec<TExpr> },
    Tuple(Vec<TExpr>),
    Record(Vec<(Arc<str>, TExpr)>),
    /// 0-based component or field position.
    Proj(Box<TExpr>, usize),
    Index(Box<TExpr>, Box<TExpr>),
    ArrayInit(usize, Box<TExpr>),
    MapInit(TypeDomain, Box<TExpr>),
    SetLit(Vec<TExpr>),
    Range(Box<TExpr>, Box<TExpr>),
    Card(Box<TExpr>),
    Comprehension(Box<TExpr>, TBinders),
    Quant(Quantifier, TBinders, Box<TExpr>),
    Sum(TBinders, Box<TExpr>),
    /// Yields the binder value, or a tuple of them for several binders.
    Choose(TBinders),
    If(Box<TExpr>, Box<TExpr>, Box<TExpr>),
    Let(usize, Box<TExpr>, Box<TExpr>),
    Print(Box<TExpr>),
}

/// The values of a type, enumerated at most once.
#[derive(Debug, Clone)]
pub struct TypeDomain {
    pub ty: SemType,
    cache: Arc<OnceLock<Option<Arc<Vec<Value>>>>>,
}

impl TypeDomain {
    pub fn new(ty: SemType) -> TypeDomain {
        TypeDomain {
            ty,
            cache: Arc::new(OnceLock::new()),
        }
    }

    /// The shared list of all values, unless the type is too large to hold.
    pub fn values(&self) -> Option<Arc<Vec<Value>>> {
        self.cache
            .get_or_init(|| match self.ty.cardinality() {
                Ok(n) if n <= MATERIALIZE_LIMIT => Some(Arc::new(materialize(&self.ty))),
                _ => None,
            })
            .clone()
    }
}

#[derive(Debug, Clone)]
pub enum TDomain {
    Type(TypeDomain),
    /// Elements of a set-valued expression.
    Member(TExpr),
}

#[derive(Debug, Clone)]
pub struct TBinder {
    pub slot: usize,
    pub ty: SemType,
    pub domain: TDomain,
}

#[derive(Debug, Clone)]
pub struct TBinders {
    pub vars: Vec<TBinder>,
    pub filter: Option<Box<TExpr>>,
    pub span: SourceSpan,
}

impl TBinders {
    pub fn nondet(&self) -> bool {
        self.vars.iter().any(|b| match &b.domain {
            TDomain::Member(e) => e.nondet,
            TDomain::Type(_) => false,
        }) || self.filter.as_ref().is_some_and(|f| f.nondet)
    }
}

/// A checked annotation with its printed source form.
#[derive(Debug, Clone)]
pub struct Annot {
    pub expr: TExpr,
    pub text: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Default)]
pub struct TLoop {
    pub invariants: Vec<Annot>,
    pub decreases: Option<Annot>,
    /// `(variable, old_variable)` slot pairs copied at loop entry.
    pub snapshots: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct TCmd {
    pub kind: TCmdKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub enum TCmdKind {
    Skip,
    /// `slot[indices] := value`; `ty` is the declared type of the variable.
    Assign {
        slot: usize,
        indices: Vec<TExpr>,
        value: TExpr,
        ty: SemType,
    },
    VarDecl {
        slot: usize,
        ty: SemType,
        init: Option<TExpr>,
    },
    Block(Vec<TCmd>),
    If(TExpr, Box<TCmd>, Option<Box<TCmd>>),
    While {
        cond: TExpr,
        lp: TLoop,
        body: Box<TCmd>,
    },
    For {
        init: Box<TCmd>,
        cond: TExpr,
        update: Box<TCmd>,
        lp: TLoop,
        body: Box<TCmd>,
    },
    ForIn {
        binders: TBinders,
        forset: Option<usize>,
        lp: TLoop,
        body: Box<TCmd>,
    },
    Choose(TBinders),
    ChooseElse(TBinders, Box<TCmd>, Box<TCmd>),
    ChooseDo {
        binders: TBinders,
        lp: TLoop,
        body: Box<TCmd>,
    },
    Assert(Annot),
    Print(TExpr),
}

#[derive(Debug, Clone)]
pub enum TBody {
    Expr(TExpr),
    Proc { commands: Vec<TCmd>, ret: TExpr },
}

#[derive(Debug, Clone)]
pub struct TParam {
    pub name: String,
    pub ty: SemType,
    pub domain: TypeDomain,
}

/// A typed operation. Parameters occupy slots `0..params.len()`.
#[derive(Debug, Clone)]
pub struct OpDef {
    pub name: String,
    pub kind: OpKind,
    pub params: Vec<TParam>,
    pub result: SemType,
    pub requires: Vec<Annot>,
    pub ensures: Vec<Annot>,
    pub decreases: Option<Annot>,
    pub body: TBody,
    /// Slot that holds `result` while ensures clauses are evaluated.
    pub result_slot: usize,
    pub frame_size: usize,
    pub recursive: bool,
    /// Whether the body, or anything it calls, makes a nondeterministic choice.
    pub nondet: bool,
    pub decl: OpDecl,
}

impl OpDef {
    pub fn has_params(&self) -> bool {
        self.decl.params.is_some()
    }

    /// `NAME(SIG)` with bound-free parameter types.
    pub fn signature(&self) -> String {
        let sig: Vec<String> = self.params.iter().map(|p| p.ty.signature()).collect();
        format!("{}({})", self.name, sig.join(","))
    }
}
