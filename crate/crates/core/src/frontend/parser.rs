//! Recursive descent parser.
//!
//! Precedence, loosest first: `⇔`; `⇒` (right-assoc); `∨`; `∧`; `¬`;
//! relational (`= ≠ < ≤ > ≥ ∈ ⊆`); `..`; `+ - ∪ \`; `· / % ∩`; `^`
//! (right-assoc); unary `-`; postfix. Quantifiers, `choose`, `let`, `if` and
//! `print` extend as far right as possible.

use thiserror::Error;

use super::ast::*;
use super::lexer::{Keyword, SourceSpan, Token, TokenKind};

#[derive(Debug, Clone, Error)]
#[error("{span}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
}

pub type ParseResult<T> = Result<T, ParseError>;

/// Parses a complete token stream into a [`Spec`].
pub fn parse_spec(tokens: &[Token]) -> ParseResult<Spec> {
    let mut p = Parser::new(tokens);
    let mut decls = Vec::new();
    while !p.at_end() {
        decls.push(p.decl()?);
    }
    Ok(Spec { decls })
}

/// Parses a single expression spanning the whole token stream.
pub fn parse_expr(tokens: &[Token]) -> ParseResult<Expr> {
    let mut p = Parser::new(tokens);
    let e = p.expr()?;
    if !p.at_end() {
        return Err(p.unexpected(&["end of input"]));
    }
    Ok(e)
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    /// Set while parsing a `let` value, where `in` terminates the expression.
    stop_at_in: bool,
}

fn kw(k: Keyword) -> TokenKind {
    TokenKind::Keyword(k)
}

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token]) -> Self {
        Parser {
            tokens,
            pos: 0,
            stop_at_in: false,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    fn check(&self, kind: &TokenKind) -> bool {
        self.peek() == Some(kind)
    }

    fn span(&self) -> SourceSpan {
        match self.tokens.get(self.pos) {
            Some(t) => t.span.clone(),
            None => match self.tokens.last() {
                Some(t) => SourceSpan {
                    offset: t.span.end(),
                    column: t.span.column + t.span.length as u32,
                    length: 0,
                    ..t.span.clone()
                },
                None => SourceSpan::default(),
            },
        }
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos.saturating_sub(1)].span.clone()
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.check(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: match self.peek() {
                Some(k) => k.to_string(),
                None => "end of input".into(),
            },
        }
    }

    fn expect(&mut self, kind: TokenKind) -> ParseResult<SourceSpan> {
        if self.check(&kind) {
            Ok(self.bump().span.clone())
        } else {
            Err(self.unexpected(&[&format!("`{}`", kind.text())]))
        }
    }

    fn ident(&mut self) -> ParseResult<(String, SourceSpan)> {
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                let span = self.bump().span.clone();
                Ok((name, span))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    /// True when the current token starts exactly where the previous one ends.
    fn adjacent(&self) -> bool {
        self.pos > 0
            && self.pos < self.tokens.len()
            && self.tokens[self.pos - 1].span.end() == self.tokens[self.pos].span.offset
    }

    // -- declarations -----------------------------------------------------

    fn decl(&mut self) -> ParseResult<Decl> {
        let start = self.span();
        match self.peek() {
            Some(TokenKind::Keyword(Keyword::Val)) => {
                self.bump();
                let (name, _) = self.ident()?;
                self.expect(TokenKind::Colon)?;
                let ty = self.type_expr()?;
                let value = if self.eat(&TokenKind::Eq) {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(TokenKind::Semi)?;
                Ok(Decl::Val(ValDecl {
                    name,
                    ty,
                    value,
                    span: start.to(&self.prev_span()),
                }))
            }
            Some(TokenKind::Keyword(Keyword::Type)) => {
                self.bump();
                let (name, _) = self.ident()?;
                self.expect(TokenKind::Eq)?;
                let ty = self.type_expr()?;
                self.expect(TokenKind::Semi)?;
                Ok(Decl::Type(TypeDecl {
                    name,
                    ty,
                    span: start.to(&self.prev_span()),
                }))
            }
            Some(TokenKind::Keyword(k @ (Keyword::Fun | Keyword::Pred | Keyword::Theorem | Keyword::Proc))) => {
                let kind = match k {
                    Keyword::Fun => OpKind::Fun,
                    Keyword::Pred => OpKind::Pred,
                    Keyword::Theorem => OpKind::Theorem,
                    _ => OpKind::Proc,
                };
                self.bump();
                self.op_decl(kind, start)
            }
            _ => Err(self.unexpected(&["`val`", "`type`", "`fun`", "`pred`", "`theorem`", "`proc`"])),
        }
    }

    fn op_decl(&mut self, kind: OpKind, start: SourceSpan) -> ParseResult<Decl> {
        let (name, _) = self.ident()?;
        let params = if self.eat(&TokenKind::LParen) {
            let mut params = Vec::new();
            if !self.check(&TokenKind::RParen) {
                loop {
                    let (pname, pspan) = self.ident()?;
                    self.expect(TokenKind::Colon)?;
                    let ty = self.type_expr()?;
                    params.push(Param {
                        name: pname,
                        ty,
                        span: pspan,
                    });
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
            }
            self.expect(TokenKind::RParen)?;
            Some(params)
        } else {
            None
        };
        let result = if matches!(kind, OpKind::Fun | OpKind::Proc) {
            self.expect(TokenKind::Colon)?;
            Some(self.type_expr()?)
        } else {
            None
        };
        let contract = self.contract()?;
        let body = match kind {
            OpKind::Proc => {
                self.expect(TokenKind::LBrace)?;
                let mut commands = Vec::new();
                while !self.check(&kw(Keyword::Return)) {
                    if self.at_end() || self.check(&TokenKind::RBrace) {
                        return Err(self.unexpected(&["command", "`return`"]));
                    }
                    commands.push(self.command()?);
                }
                self.bump();
                let ret = self.expr()?;
                self.expect(TokenKind::Semi)?;
                self.expect(TokenKind::RBrace)?;
                self.eat(&TokenKind::Semi);
                OpBody::Proc { commands, ret }
            }
            OpKind::Fun => {
                self.expect(TokenKind::Eq)?;
                let e = self.expr()?;
                self.expect(TokenKind::Semi)?;
                OpBody::Expr(e)
            }
            OpKind::Pred | OpKind::Theorem => {
                self.expect(TokenKind::Iff)?;
                let e = self.expr()?;
                self.expect(TokenKind::Semi)?;
                OpBody::Expr(e)
            }
        };
        Ok(Decl::Op(OpDecl {
            kind,
            name,
            params,
            result,
            contract,
            body,
            span: start.to(&self.prev_span()),
        }))
    }

    fn contract(&mut self) -> ParseResult<Contract> {
        let mut c = Contract::default();
        loop {
            match self.peek() {
                Some(TokenKind::Keyword(Keyword::Requires)) => {
                    self.bump();
                    c.requires.push(self.expr()?);
                }
                Some(TokenKind::Keyword(Keyword::Ensures)) => {
                    self.bump();
                    c.ensures.push(self.expr()?);
                }
                Some(TokenKind::Keyword(Keyword::Decreases)) if c.decreases.is_none() => {
                    self.bump();
                    c.decreases = Some(self.expr()?);
                }
                _ => return Ok(c),
            }
            self.expect(TokenKind::Semi)?;
        }
    }

    // -- types ------------------------------------------------------------

    fn type_expr(&mut self) -> ParseResult<TypeExpr> {
        let start = self.span();
        let kind = match self.peek() {
            Some(TokenKind::Keyword(Keyword::Bool)) => {
                self.bump();
                TypeExprKind::Bool
            }
            Some(TokenKind::Nat) => {
                self.bump();
                if self.eat(&TokenKind::LBracket) {
                    let e = self.expr()?;
                    self.expect(TokenKind::RBracket)?;
                    TypeExprKind::NatUpTo(Box::new(e))
                } else {
                    TypeExprKind::Nat
                }
            }
            Some(TokenKind::Integer) => {
                self.bump();
                self.expect(TokenKind::LBracket)?;
                let lo = self.expr()?;
                self.expect(TokenKind::Comma)?;
                let hi = self.expr()?;
                self.expect(TokenKind::RBracket)?;
                TypeExprKind::IntRange(Box::new(lo), Box::new(hi))
            }
            Some(TokenKind::Keyword(Keyword::Set)) => {
                self.bump();
                self.expect(TokenKind::LBracket)?;
                let t = self.type_expr()?;
                self.expect(TokenKind::RBracket)?;
                TypeExprKind::Set(Box::new(t))
            }
            Some(TokenKind::Keyword(Keyword::Tuple)) => {
                self.bump();
                self.expect(TokenKind::LBracket)?;
                let mut ts = vec![self.type_expr()?];
                while self.eat(&TokenKind::Comma) {
                    ts.push(self.type_expr()?);
                }
                self.expect(TokenKind::RBracket)?;
                TypeExprKind::Tuple(ts)
            }
            Some(TokenKind::Keyword(Keyword::Record)) => {
                self.bump();
                self.expect(TokenKind::LBracket)?;
                let mut fields = Vec::new();
                loop {
                    let (name, _) = self.ident()?;
                    self.expect(TokenKind::Colon)?;
                    fields.push((name, self.type_expr()?));
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                self.expect(TokenKind::RBracket)?;
                TypeExprKind::Record(fields)
            }
            Some(TokenKind::Keyword(Keyword::Array)) => {
                self.bump();
                let (n, t) = self.array_type_args()?;
                TypeExprKind::Array(Box::new(n), Box::new(t))
            }
            Some(TokenKind::Keyword(Keyword::Map)) => {
                self.bump();
                let (d, c) = self.map_type_args()?;
                TypeExprKind::Map(Box::new(d), Box::new(c))
            }
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                self.bump();
                TypeExprKind::Named(name)
            }
            _ => return Err(self.unexpected(&["type"])),
        };
        Ok(TypeExpr {
            kind,
            span: start.to(&self.prev_span()),
        })
    }

    fn array_type_args(&mut self) -> ParseResult<(Expr, TypeExpr)> {
        self.expect(TokenKind::LBracket)?;
        let n = self.expr()?;
        self.expect(TokenKind::Comma)?;
        let t = self.type_expr()?;
        self.expect(TokenKind::RBracket)?;
        Ok((n, t))
    }

    fn map_type_args(&mut self) -> ParseResult<(TypeExpr, TypeExpr)> {
        self.expect(TokenKind::LBracket)?;
        let d = self.type_expr()?;
        self.expect(TokenKind::Comma)?;
        let c = self.type_expr()?;
        self.expect(TokenKind::RBracket)?;
        Ok((d, c))
    }

    // -- commands ---------------------------------------------------------

    fn command(&mut self) -> ParseResult<Cmd> {
        let start = self.span();
        let kind = match self.peek() {
            Some(TokenKind::Keyword(Keyword::Var)) => {
                self.bump();
                let (name, _) = self.ident()?;
                self.expect(TokenKind::Colon)?;
                let ty = self.type_expr()?;
                let init = if self.eat(&TokenKind::Assign) {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(TokenKind::Semi)?;
                CmdKind::VarDecl { name, ty, init }
            }
            Some(TokenKind::LBrace) => {
                self.bump();
                let mut cmds = Vec::new();
                while !self.check(&TokenKind::RBrace) {
                    if self.at_end() || self.check(&kw(Keyword::Return)) {
                        return Err(self.unexpected(&["command", "`}`"]));
                    }
                    cmds.push(self.command()?);
                }
                self.bump();
                self.eat(&TokenKind::Semi);
                CmdKind::Block(cmds)
            }
            Some(TokenKind::Keyword(Keyword::If)) => {
                self.bump();
                let cond = self.expr()?;
                self.expect(kw(Keyword::Then))?;
                let then = self.command()?;
                let els = if self.eat(&kw(Keyword::Else)) {
                    Some(Box::new(self.command()?))
                } else {
                    None
                };
                CmdKind::If(cond, Box::new(then), els)
            }
            Some(TokenKind::Keyword(Keyword::While)) => {
                self.bump();
                let cond = self.expr()?;
                self.expect(kw(Keyword::Do))?;
                let annotations = self.loop_annotations()?;
                let body = self.command()?;
                CmdKind::While {
                    cond,
                    annotations,
                    body: Box::new(body),
                }
            }
            Some(TokenKind::Keyword(Keyword::For)) => {
                self.bump();
                if self.eat(&kw(Keyword::Var)) {
                    let (name, _) = self.ident()?;
                    self.expect(TokenKind::Colon)?;
                    let ty = self.type_expr()?;
                    self.expect(TokenKind::Assign)?;
                    let init = self.expr()?;
                    self.expect(TokenKind::Semi)?;
                    let cond = self.expr()?;
                    self.expect(TokenKind::Semi)?;
                    let ustart = self.span();
                    let (lv, value) = self.assignment()?;
                    let update = Cmd {
                        kind: CmdKind::Assign(lv, value),
                        span: ustart.to(&self.prev_span()),
                    };
                    self.expect(kw(Keyword::Do))?;
                    let annotations = self.loop_annotations()?;
                    let body = self.command()?;
                    CmdKind::For {
                        name,
                        ty,
                        init,
                        cond,
                        update: Box::new(update),
                        annotations,
                        body: Box::new(body),
                    }
                } else {
                    let binders = self.binders()?;
                    self.expect(kw(Keyword::Do))?;
                    let annotations = self.loop_annotations()?;
                    let body = self.command()?;
                    CmdKind::ForIn {
                        binders,
                        annotations,
                        body: Box::new(body),
                    }
                }
            }
            Some(TokenKind::Keyword(Keyword::Choose)) => {
                self.bump();
                let binders = self.binders()?;
                if self.eat(&kw(Keyword::Then)) {
                    let then = self.command()?;
                    self.expect(kw(Keyword::Else))?;
                    let els = self.command()?;
                    CmdKind::ChooseElse(binders, Box::new(then), Box::new(els))
                } else if self.eat(&kw(Keyword::Do)) {
                    let annotations = self.loop_annotations()?;
                    let body = self.command()?;
                    CmdKind::ChooseDo {
                        binders,
                        annotations,
                        body: Box::new(body),
                    }
                } else {
                    self.expect(TokenKind::Semi)?;
                    CmdKind::Choose(binders)
                }
            }
            Some(TokenKind::Keyword(Keyword::Assert)) => {
                self.bump();
                let e = self.expr()?;
                self.expect(TokenKind::Semi)?;
                CmdKind::Assert(e)
            }
            Some(TokenKind::Keyword(Keyword::Print)) => {
                self.bump();
                let e = self.expr()?;
                self.expect(TokenKind::Semi)?;
                CmdKind::Print(e)
            }
            Some(TokenKind::Semi) => {
                self.bump();
                CmdKind::Skip
            }
            Some(TokenKind::Ident(_)) => {
                let (lv, value) = self.assignment()?;
                self.expect(TokenKind::Semi)?;
                CmdKind::Assign(lv, value)
            }
            _ => return Err(self.unexpected(&["command"])),
        };
        Ok(Cmd {
            kind,
            span: start.to(&self.prev_span()),
        })
    }

    fn assignment(&mut self) -> ParseResult<(LValue, Expr)> {
        let (name, span) = self.ident()?;
        let mut indices = Vec::new();
        while self.eat(&TokenKind::LBracket) {
            indices.push(self.expr()?);
            self.expect(TokenKind::RBracket)?;
        }
        let span = span.to(&self.prev_span());
        self.expect(TokenKind::Assign)?;
        let value = self.expr()?;
        Ok((LValue { name, indices, span }, value))
    }

    fn loop_annotations(&mut self) -> ParseResult<LoopAnnotations> {
        let mut a = LoopAnnotations::default();
        loop {
            match self.peek() {
                Some(TokenKind::Keyword(Keyword::Invariant)) => {
                    self.bump();
                    a.invariants.push(self.expr()?);
                }
                Some(TokenKind::Keyword(Keyword::Decreases)) if a.decreases.is_none() => {
                    self.bump();
                    a.decreases = Some(self.expr()?);
                }
                _ => return Ok(a),
            }
            self.expect(TokenKind::Semi)?;
        }
    }

    // -- binders ----------------------------------------------------------

    fn binders(&mut self) -> ParseResult<Binders> {
        let mut vars = Vec::new();
        loop {
            let (name, span) = self.ident()?;
            let domain = if self.eat(&TokenKind::Colon) {
                BinderDomain::Type(self.type_expr()?)
            } else if self.eat(&TokenKind::In) {
                BinderDomain::Member(self.range_level()?)
            } else {
                return Err(self.unexpected(&["`:`", "`∈`"]));
            };
            vars.push(Binder {
                name,
                domain,
                span: span.to(&self.prev_span()),
            });
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        let filter = if self.eat(&kw(Keyword::With)) {
            Some(Box::new(self.expr()?))
        } else {
            None
        };
        Ok(Binders { vars, filter })
    }

    // -- expressions ------------------------------------------------------

    pub fn expr(&mut self) -> ParseResult<Expr> {
        self.iff_level()
    }

    fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        let span = lhs.span.to(&rhs.span);
        Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span)
    }

    fn iff_level(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.implies_level()?;
        while self.eat(&TokenKind::Iff) {
            let rhs = self.implies_level()?;
            lhs = Self::binary(BinOp::Iff, lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies_level(&mut self) -> ParseResult<Expr> {
        let lhs = self.or_level()?;
        if self.eat(&TokenKind::Implies) {
            let rhs = self.implies_level()?;
            return Ok(Self::binary(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or_level(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.and_level()?;
        while self.eat(&TokenKind::Or) {
            let rhs = self.and_level()?;
            lhs = Self::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_level(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.not_level()?;
        while self.eat(&TokenKind::And) {
            let rhs = self.not_level()?;
            lhs = Self::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_level(&mut self) -> ParseResult<Expr> {
        if self.check(&TokenKind::Not) {
            let start = self.bump().span.clone();
            let operand = self.not_level()?;
            let span = start.to(&operand.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(operand)), span));
        }
        self.relational_level()
    }

    fn relational_level(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.range_level()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Eq) => BinOp::Eq,
                Some(TokenKind::Neq) => BinOp::Neq,
                Some(TokenKind::Lt) => BinOp::Lt,
                Some(TokenKind::Le) => BinOp::Le,
                Some(TokenKind::Gt) => BinOp::Gt,
                Some(TokenKind::Ge) => BinOp::Ge,
                Some(TokenKind::Subseteq) => BinOp::Subseteq,
                Some(TokenKind::In) if !self.stop_at_in => BinOp::In,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.range_level()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn range_level(&mut self) -> ParseResult<Expr> {
        let lhs = self.additive_level()?;
        if self.eat(&TokenKind::DotDot) {
            let rhs = self.additive_level()?;
            let span = lhs.span.to(&rhs.span);
            return Ok(Expr::new(ExprKind::Range(Box::new(lhs), Box::new(rhs)), span));
        }
        Ok(lhs)
    }

    fn additive_level(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.multiplicative_level()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                Some(TokenKind::Union) => BinOp::Union,
                Some(TokenKind::Backslash) => BinOp::Diff,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative_level()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn multiplicative_level(&mut self) -> ParseResult<Expr> {
        let mut lhs = self.power_level()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Times) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                Some(TokenKind::Percent) => BinOp::Mod,
                Some(TokenKind::Intersect) => BinOp::Intersect,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.power_level()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn power_level(&mut self) -> ParseResult<Expr> {
        let lhs = self.unary_level()?;
        if self.eat(&TokenKind::Caret) {
            let rhs = self.power_level()?;
            return Ok(Self::binary(BinOp::Pow, lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary_level(&mut self) -> ParseResult<Expr> {
        if self.check(&TokenKind::Minus) {
            let start = self.bump().span.clone();
            let operand = self.unary_level()?;
            let span = start.to(&operand.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(operand)), span));
        }
        self.postfix_level()
    }

    fn postfix_level(&mut self) -> ParseResult<Expr> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Some(TokenKind::LBracket) => {
                    self.bump();
                    let idx = self.with_in_allowed(|p| p.expr())?;
                    self.expect(TokenKind::RBracket)?;
                    let span = e.span.to(&self.prev_span());
                    e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), span);
                }
                // `x.1` and `x.f` need the dot glued to both sides; a spaced
                // dot ends a binder list.
                Some(TokenKind::Dot) if self.adjacent() => {
                    let after = self.tokens.get(self.pos + 1);
                    let glued = after.is_some_and(|t| t.span.offset == self.tokens[self.pos].span.end());
                    match after.map(|t| &t.kind) {
                        Some(TokenKind::Int(k)) if glued => {
                            let k = *k;
                            self.bump();
                            self.bump();
                            if k < 1 {
                                return Err(ParseError {
                                    span: self.prev_span(),
                                    expected: vec!["positive component index".into()],
                                    found: "0".into(),
                                });
                            }
                            let span = e.span.to(&self.prev_span());
                            e = Expr::new(ExprKind::Proj(Box::new(e), k as usize), span);
                        }
                        Some(TokenKind::Ident(f)) if glued => {
                            let f = f.clone();
                            self.bump();
                            self.bump();
                            let span = e.span.to(&self.prev_span());
                            e = Expr::new(ExprKind::Field(Box::new(e), f), span);
                        }
                        _ => return Ok(e),
                    }
                }
                _ => return Ok(e),
            }
        }
    }

    fn with_in_allowed<T>(&mut self, f: impl FnOnce(&mut Self) -> ParseResult<T>) -> ParseResult<T> {
        let saved = std::mem::replace(&mut self.stop_at_in, false);
        let r = f(self);
        self.stop_at_in = saved;
        r
    }

    fn expr_list(&mut self, close: TokenKind) -> ParseResult<Vec<Expr>> {
        let mut items = Vec::new();
        if !self.check(&close) {
            loop {
                items.push(self.expr()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(close)?;
        Ok(items)
    }

    fn primary(&mut self) -> ParseResult<Expr> {
        let start = self.span();
        let finish = |p: &Self, kind: ExprKind| Expr::new(kind, start.to(&p.prev_span()));
        let Some(kind) = self.peek().cloned() else {
            return Err(self.unexpected(&["expression"]));
        };
        match kind {
            TokenKind::Int(n) => {
                self.bump();
                Ok(finish(self, ExprKind::Int(n)))
            }
            TokenKind::True | TokenKind::False => {
                self.bump();
                Ok(finish(self, ExprKind::Bool(kind == TokenKind::True)))
            }
            TokenKind::Ident(name) => {
                self.bump();
                if self.eat(&TokenKind::LParen) {
                    let args = self.with_in_allowed(|p| p.expr_list(TokenKind::RParen))?;
                    Ok(finish(self, ExprKind::Call(name, args)))
                } else {
                    Ok(finish(self, ExprKind::Var(name)))
                }
            }
            TokenKind::LParen => {
                self.bump();
                let mut items = self.with_in_allowed(|p| p.expr_list(TokenKind::RParen))?;
                match items.len() {
                    0 => Err(ParseError {
                        span: self.prev_span(),
                        expected: vec!["expression".into()],
                        found: "`)`".into(),
                    }),
                    1 => Ok(items.pop().unwrap()),
                    _ => Ok(finish(self, ExprKind::Tuple(items))),
                }
            }
            TokenKind::LAngle => {
                self.bump();
                // `⟨f: e, …⟩` is a record, anything else a tuple.
                if matches!(self.peek(), Some(TokenKind::Ident(_)))
                    && self.peek_at(1) == Some(&TokenKind::Colon)
                {
                    let mut fields = Vec::new();
                    loop {
                        let (f, _) = self.ident()?;
                        self.expect(TokenKind::Colon)?;
                        fields.push((f, self.with_in_allowed(|p| p.expr())?));
                        if !self.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                    self.expect(TokenKind::RAngle)?;
                    return Ok(finish(self, ExprKind::Record(fields)));
                }
                let items = self.with_in_allowed(|p| p.expr_list(TokenKind::RAngle))?;
                if items.is_empty() {
                    return Err(ParseError {
                        span: self.prev_span(),
                        expected: vec!["expression".into()],
                        found: "`⟩`".into(),
                    });
                }
                Ok(finish(self, ExprKind::Tuple(items)))
            }
            TokenKind::LBrace => {
                self.bump();
                if self.eat(&TokenKind::RBrace) {
                    return Err(ParseError {
                        span: self.prev_span(),
                        expected: vec!["expression (write `∅[T]` for an empty set)".into()],
                        found: "`}`".into(),
                    });
                }
                let saved = std::mem::replace(&mut self.stop_at_in, false);
                let first = self.expr();
                let r = first.and_then(|first| {
                    if self.eat(&TokenKind::Bar) {
                        let binders = self.binders()?;
                        self.expect(TokenKind::RBrace)?;
                        Ok(ExprKind::Comprehension(Box::new(first), binders))
                    } else {
                        let mut items = vec![first];
                        while self.eat(&TokenKind::Comma) {
                            items.push(self.expr()?);
                        }
                        self.expect(TokenKind::RBrace)?;
                        Ok(ExprKind::SetLit(items))
                    }
                });
                self.stop_at_in = saved;
                Ok(finish(self, r?))
            }
            TokenKind::EmptySet => {
                self.bump();
                self.expect(TokenKind::LBracket)?;
                let t = self.type_expr()?;
                self.expect(TokenKind::RBracket)?;
                Ok(finish(self, ExprKind::EmptySet(t)))
            }
            TokenKind::Bar => {
                self.bump();
                let e = self.with_in_allowed(|p| p.expr())?;
                self.expect(TokenKind::Bar)?;
                Ok(finish(self, ExprKind::Card(Box::new(e))))
            }
            TokenKind::Forall | TokenKind::Exists => {
                self.bump();
                let binders = self.binders()?;
                self.expect(TokenKind::Dot)?;
                let body = self.expr()?;
                let q = if kind == TokenKind::Forall {
                    Quantifier::Forall
                } else {
                    Quantifier::Exists
                };
                Ok(finish(self, ExprKind::Quant(q, binders, Box::new(body))))
            }
            TokenKind::Sum => {
                self.bump();
                let binders = self.binders()?;
                self.expect(TokenKind::Dot)?;
                let body = self.expr()?;
                Ok(finish(self, ExprKind::Sum(binders, Box::new(body))))
            }
            TokenKind::Keyword(Keyword::Choose) => {
                self.bump();
                let binders = self.binders()?;
                Ok(finish(self, ExprKind::Choose(binders)))
            }
            TokenKind::Keyword(Keyword::If) => {
                self.bump();
                let c = self.with_in_allowed(|p| p.expr())?;
                self.expect(kw(Keyword::Then))?;
                let t = self.with_in_allowed(|p| p.expr())?;
                self.expect(kw(Keyword::Else))?;
                let e = self.expr()?;
                Ok(finish(self, ExprKind::If(Box::new(c), Box::new(t), Box::new(e))))
            }
            TokenKind::Keyword(Keyword::Let) => {
                self.bump();
                let (name, _) = self.ident()?;
                self.expect(TokenKind::Eq)?;
                let saved = std::mem::replace(&mut self.stop_at_in, true);
                let value = self.expr();
                self.stop_at_in = saved;
                let value = value?;
                self.expect(TokenKind::In)?;
                let body = self.expr()?;
                Ok(finish(self, ExprKind::Let(name, Box::new(value), Box::new(body))))
            }
            TokenKind::Keyword(Keyword::Print) => {
                self.bump();
                let e = self.expr()?;
                Ok(finish(self, ExprKind::Print(Box::new(e))))
            }
            TokenKind::Keyword(Keyword::Array) => {
                self.bump();
                let (n, t) = self.array_type_args()?;
                let tspan = start.to(&self.prev_span());
                self.expect(TokenKind::LParen)?;
                let init = self.with_in_allowed(|p| p.expr())?;
                self.expect(TokenKind::RParen)?;
                let ty = TypeExpr {
                    kind: TypeExprKind::Array(Box::new(n), Box::new(t)),
                    span: tspan,
                };
                Ok(finish(self, ExprKind::Init(ty, Box::new(init))))
            }
            TokenKind::Keyword(Keyword::Map) => {
                self.bump();
                let (d, c) = self.map_type_args()?;
                let tspan = start.to(&self.prev_span());
                self.expect(TokenKind::LParen)?;
                let init = self.with_in_allowed(|p| p.expr())?;
                self.expect(TokenKind::RParen)?;
                let ty = TypeExpr {
                    kind: TypeExprKind::Map(Box::new(d), Box::new(c)),
                    span: tspan,
                };
                Ok(finish(self, ExprKind::Init(ty, Box::new(init))))
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }
}
