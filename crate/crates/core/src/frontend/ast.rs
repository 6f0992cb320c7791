//! Declaration, expression, and command trees produced by the parser.
//!
//! Every node carries a [`SourceSpan`]. Structural comparison that ignores
//! positions goes through [`Spec::without_spans`] and friends.

use super::lexer::SourceSpan;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spec {
    pub decls: Vec<Decl>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Val(ValDecl),
    Type(TypeDecl),
    Op(OpDecl),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Val(d) => &d.name,
            Decl::Type(d) => &d.name,
            Decl::Op(d) => &d.name,
        }
    }

    pub fn span(&self) -> &SourceSpan {
        match self {
            Decl::Val(d) => &d.span,
            Decl::Type(d) => &d.span,
            Decl::Op(d) => &d.span,
        }
    }
}

/// `val N: ℕ;` or `val x: T = e;`
#[derive(Debug, Clone, PartialEq)]
pub struct ValDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub value: Option<Expr>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Fun,
    Pred,
    Theorem,
    Proc,
}

impl OpKind {
    pub fn keyword(self) -> &'static str {
        match self {
            OpKind::Fun => "fun",
            OpKind::Pred => "pred",
            OpKind::Theorem => "theorem",
            OpKind::Proc => "proc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Contract {
    pub requires: Vec<Expr>,
    pub ensures: Vec<Expr>,
    pub decreases: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpBody {
    /// Defining expression or formula of a fun/pred/theorem.
    Expr(Expr),
    /// Procedure commands followed by `return e;`.
    Proc { commands: Vec<Cmd>, ret: Expr },
}

/// Functions, predicates, theorems and procedures share one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct OpDecl {
    pub kind: OpKind,
    pub name: String,
    /// `None` for a parameterless declaration written without parentheses.
    pub params: Option<Vec<Param>>,
    /// Declared result type of fun/proc; pred and theorem are Boolean.
    pub result: Option<TypeExpr>,
    pub contract: Contract,
    pub body: OpBody,
    pub span: SourceSpan,
}

impl OpDecl {
    pub fn params(&self) -> &[Param] {
        self.params.as_deref().unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeExpr {
    pub kind: TypeExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeExprKind {
    Bool,
    /// Bare `ℕ`, only meaningful for unspecified constants.
    Nat,
    /// `ℕ[n]`
    NatUpTo(Box<Expr>),
    /// `ℤ[a,b]`
    IntRange(Box<Expr>, Box<Expr>),
    Set(Box<TypeExpr>),
    Tuple(Vec<TypeExpr>),
    Record(Vec<(String, TypeExpr)>),
    Array(Box<Expr>, Box<TypeExpr>),
    Map(Box<TypeExpr>, Box<TypeExpr>),
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
    Iff,
    Union,
    Intersect,
    Diff,
    Subseteq,
    In,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "·",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Pow => "^",
            BinOp::Eq => "=",
            BinOp::Neq => "≠",
            BinOp::Lt => "<",
            BinOp::Le => "≤",
            BinOp::Gt => ">",
            BinOp::Ge => "≥",
            BinOp::And => "∧",
            BinOp::Or => "∨",
            BinOp::Implies => "⇒",
            BinOp::Iff => "⇔",
            BinOp::Union => "∪",
            BinOp::Intersect => "∩",
            BinOp::Diff => "\\",
            BinOp::Subseteq => "⊆",
            BinOp::In => "∈",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BinderDomain {
    /// `x:T`
    Type(TypeExpr),
    /// `x∈e`
    Member(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binder {
    pub name: String,
    pub domain: BinderDomain,
    pub span: SourceSpan,
}

/// A binder list with an optional `with` filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Binders {
    pub vars: Vec<Binder>,
    pub filter: Option<Box<Expr>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Tuple(Vec<Expr>),
    Record(Vec<(String, Expr)>),
    /// `e.k`, 1-based.
    Proj(Box<Expr>, usize),
    /// `e.field`
    Field(Box<Expr>, String),
    /// `a[i]`
    Index(Box<Expr>, Box<Expr>),
    /// `Array[n,T](e)` and `Map[D,C](e)`; the type is the constructed type.
    Init(TypeExpr, Box<Expr>),
    SetLit(Vec<Expr>),
    /// `∅[T]`, T being the element type.
    EmptySet(TypeExpr),
    Range(Box<Expr>, Box<Expr>),
    Card(Box<Expr>),
    Comprehension(Box<Expr>, Binders),
    Quant(Quantifier, Binders, Box<Expr>),
    Sum(Binders, Box<Expr>),
    Choose(Binders),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Let(String, Box<Expr>, Box<Expr>),
    Print(Box<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Expr {
        Expr { kind, span }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoopAnnotations {
    pub invariants: Vec<Expr>,
    pub decreases: Option<Expr>,
}

/// Assignment target: a variable followed by zero or more index selectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LValue {
    pub name: String,
    pub indices: Vec<Expr>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cmd {
    pub kind: CmdKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CmdKind {
    Skip,
    VarDecl {
        name: String,
        ty: TypeExpr,
        init: Option<Expr>,
    },
    Assign(LValue, Expr),
    Block(Vec<Cmd>),
    If(Expr, Box<Cmd>, Option<Box<Cmd>>),
    While {
        cond: Expr,
        annotations: LoopAnnotations,
        body: Box<Cmd>,
    },
    /// `for var i:T := e; cond; update do body`
    For {
        name: String,
        ty: TypeExpr,
        init: Expr,
        cond: Expr,
        update: Box<Cmd>,
        annotations: LoopAnnotations,
        body: Box<Cmd>,
    },
    /// `for x ∈ e do body`
    ForIn {
        binders: Binders,
        annotations: LoopAnnotations,
        body: Box<Cmd>,
    },
    Choose(Binders),
    ChooseElse(Binders, Box<Cmd>, Box<Cmd>),
    ChooseDo {
        binders: Binders,
        annotations: LoopAnnotations,
        body: Box<Cmd>,
    },
    Assert(Expr),
    Print(Expr),
}

// ---------------------------------------------------------------------------
// Span erasure for structural comparison.

fn blank() -> SourceSpan {
    SourceSpan::default()
}

impl Spec {
    /// Copy of the tree with every span reset, so two parses of differently
    /// laid out text compare equal when their structure is the same.
    pub fn without_spans(&self) -> Spec {
        let mut spec = self.clone();
        for d in &mut spec.decls {
            d.clear_spans();
        }
        spec
    }
}

impl Decl {
    pub fn clear_spans(&mut self) {
        match self {
            Decl::Val(d) => {
                d.span = blank();
                d.ty.clear_spans();
                if let Some(v) = &mut d.value {
                    v.clear_spans();
                }
            }
            Decl::Type(d) => {
                d.span = blank();
                d.ty.clear_spans();
            }
            Decl::Op(d) => {
                d.span = blank();
                if let Some(params) = &mut d.params {
                    for p in params {
                        p.span = blank();
                        p.ty.clear_spans();
                    }
                }
                if let Some(r) = &mut d.result {
                    r.clear_spans();
                }
                for e in d.contract.requires.iter_mut().chain(&mut d.contract.ensures) {
                    e.clear_spans();
                }
                if let Some(e) = &mut d.contract.decreases {
                    e.clear_spans();
                }
                match &mut d.body {
                    OpBody::Expr(e) => e.clear_spans(),
                    OpBody::Proc { commands, ret } => {
                        commands.iter_mut().for_each(Cmd::clear_spans);
                        ret.clear_spans();
                    }
                }
            }
        }
    }
}

impl TypeExpr {
    pub fn clear_spans(&mut self) {
        self.span = blank();
        match &mut self.kind {
            TypeExprKind::Bool | TypeExprKind::Nat | TypeExprKind::Named(_) => {}
            TypeExprKind::NatUpTo(e) => e.clear_spans(),
            TypeExprKind::IntRange(a, b) => {
                a.clear_spans();
                b.clear_spans();
            }
            TypeExprKind::Set(t) => t.clear_spans(),
            TypeExprKind::Tuple(ts) => ts.iter_mut().for_each(TypeExpr::clear_spans),
            TypeExprKind::Record(fs) => fs.iter_mut().for_each(|(_, t)| t.clear_spans()),
            TypeExprKind::Array(n, t) => {
                n.clear_spans();
                t.clear_spans();
            }
            TypeExprKind::Map(d, c) => {
                d.clear_spans();
                c.clear_spans();
            }
        }
    }
}

impl Binders {
    pub fn clear_spans(&mut self) {
        for b in &mut self.vars {
            b.span = blank();
            match &mut b.domain {
                BinderDomain::Type(t) => t.clear_spans(),
                BinderDomain::Member(e) => e.clear_spans(),
            }
        }
        if let Some(f) = &mut self.filter {
            f.clear_spans();
        }
    }
}

impl Expr {
    pub fn clear_spans(&mut self) {
        self.span = blank();
        match &mut self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) => {}
            ExprKind::Unary(_, e)
            | ExprKind::Proj(e, _)
            | ExprKind::Field(e, _)
            | ExprKind::Card(e)
            | ExprKind::Print(e) => e.clear_spans(),
            ExprKind::Binary(_, a, b) | ExprKind::Index(a, b) | ExprKind::Range(a, b) => {
                a.clear_spans();
                b.clear_spans();
            }
            ExprKind::Call(_, args) | ExprKind::Tuple(args) | ExprKind::SetLit(args) => {
                args.iter_mut().for_each(Expr::clear_spans)
            }
            ExprKind::Record(fields) => fields.iter_mut().for_each(|(_, e)| e.clear_spans()),
            ExprKind::Init(t, e) => {
                t.clear_spans();
                e.clear_spans();
            }
            ExprKind::EmptySet(t) => t.clear_spans(),
            ExprKind::Comprehension(e, bs) | ExprKind::Quant(_, bs, e) | ExprKind::Sum(bs, e) => {
                e.clear_spans();
                bs.clear_spans();
            }
            ExprKind::Choose(bs) => bs.clear_spans(),
            ExprKind::If(c, t, e) => {
                c.clear_spans();
                t.clear_spans();
                e.clear_spans();
            }
            ExprKind::Let(_, v, b) => {
                v.clear_spans();
                b.clear_spans();
            }
        }
    }
}

impl LoopAnnotations {
    fn clear_spans(&mut self) {
        self.invariants.iter_mut().for_each(Expr::clear_spans);
        if let Some(d) = &mut self.decreases {
            d.clear_spans();
        }
    }
}

impl Cmd {
    pub fn clear_spans(&mut self) {
        self.span = blank();
        match &mut self.kind {
            CmdKind::Skip => {}
            CmdKind::VarDecl { ty, init, .. } => {
                ty.clear_spans();
                if let Some(e) = init {
                    e.clear_spans();
                }
            }
            CmdKind::Assign(lv, e) => {
                lv.span = blank();
                lv.indices.iter_mut().for_each(Expr::clear_spans);
                e.clear_spans();
            }
            CmdKind::Block(cs) => cs.iter_mut().for_each(Cmd::clear_spans),
            CmdKind::If(c, t, e) => {
                c.clear_spans();
                t.clear_spans();
                if let Some(e) = e {
                    e.clear_spans();
                }
            }
            CmdKind::While {
                cond,
                annotations,
                body,
            } => {
                cond.clear_spans();
                annotations.clear_spans();
                body.clear_spans();
            }
            CmdKind::For {
                ty,
                init,
                cond,
                update,
                annotations,
                body,
                ..
            } => {
                ty.clear_spans();
                init.clear_spans();
                cond.clear_spans();
                update.clear_spans();
                annotations.clear_spans();
                body.clear_spans();
            }
            CmdKind::ForIn {
                binders,
                annotations,
                body,
            }
            | CmdKind::ChooseDo {
                binders,
                annotations,
                body,
            } => {
                binders.clear_spans();
                annotations.clear_spans();
                body.clear_spans();
            }
            CmdKind::Choose(bs) => bs.clear_spans(),
            CmdKind::ChooseElse(bs, t, e) => {
                bs.clear_spans();
                t.clear_spans();
                e.clear_spans();
            }
            CmdKind::Assert(e) | CmdKind::Print(e) => e.clear_spans(),
        }
    }
}
