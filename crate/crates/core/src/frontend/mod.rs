//! Lexing, parsing and pretty-printing of specification source text.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;

use thiserror::Error;

pub use lexer::{tokenize, LexError, SourceSpan, Token, TokenKind};
pub use parser::{parse_spec, ParseError};
pub use printer::pretty_print;

#[derive(Debug, Clone, Error)]
pub enum SyntaxError {
    #[error("lexical error at {0}")]
    Lex(#[from] LexError),
    #[error("syntax error at {0}")]
    Parse(#[from] ParseError),
}

impl SyntaxError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            SyntaxError::Lex(e) => &e.span,
            SyntaxError::Parse(e) => &e.span,
        }
    }
}

/// Tokenizes and parses a whole source file.
pub fn parse_source(source: &str, filename: &str) -> Result<ast::Spec, SyntaxError> {
    let tokens = tokenize(source, filename)?;
    Ok(parse_spec(&tokens)?)
}

/// Parses a standalone expression.
pub fn parse_expression(source: &str, filename: &str) -> Result<ast::Expr, SyntaxError> {
    let tokens = tokenize(source, filename)?;
    Ok(parser::parse_expr(&tokens)?)
}

#[cfg(test)]
mod tests {
    use super::ast::*;
    use super::*;

    fn parse(src: &str) -> Spec {
        parse_source(src, "test").unwrap()
    }

    fn expr(src: &str) -> Expr {
        let mut e = parse_expression(src, "test").unwrap();
        e.clear_spans();
        e
    }

    #[test]
    fn empty_file() {
        assert!(parse("").decls.is_empty());
        assert_eq!(pretty_print(&parse("")), "");
    }

    #[test]
    fn arithmetic_precedence() {
        let spec = parse("theorem t ⇔ 1+2·3 = 7;");
        let Decl::Op(op) = &spec.decls[0] else { panic!() };
        let OpBody::Expr(body) = &op.body else { panic!() };
        assert_eq!(printer::print_expr(body), "1 + 2 · 3 = 7");
        let mut body = body.clone();
        body.clear_spans();
        assert_eq!(body, expr("(1 + (2 · 3)) = 7"));
    }

    #[test]
    fn implication_is_right_associative() {
        assert_eq!(expr("a ⇒ b ⇒ c"), expr("a ⇒ (b ⇒ c)"));
        assert_eq!(expr("a ∧ b ∨ c ⇒ d ⇔ e"), expr("(((a ∧ b) ∨ c) ⇒ d) ⇔ e"));
    }

    #[test]
    fn negation_covers_a_relation() {
        assert_eq!(expr("¬⟨a,b⟩ ∈ r ∧ c"), expr("(¬(⟨a,b⟩ ∈ r)) ∧ c"));
        assert_eq!(expr("-2^2"), expr("(-2)^2"));
        assert_eq!(expr("2^3^2"), expr("2^(3^2)"));
    }

    #[test]
    fn quantifier_body_extends_right() {
        assert_eq!(expr("∀x:nat. x = 0 ∨ x > 0"), expr("∀x:nat. (x = 0 ∨ x > 0)"));
    }

    #[test]
    fn spaced_dot_ends_binders_glued_dot_projects() {
        let e = expr("∀x ∈ r with x.1 > 0. x.2 = 1");
        let ExprKind::Quant(_, b, body) = e.kind else { panic!() };
        assert!(matches!(b.filter.unwrap().kind, ExprKind::Binary(BinOp::Gt, ..)));
        assert!(matches!(body.kind, ExprKind::Binary(BinOp::Eq, ..)));
    }

    #[test]
    fn let_value_stops_at_in() {
        let e = expr("let s = r ∪ {1} in s ⊆ t");
        assert!(matches!(e.kind, ExprKind::Let(..)));
    }

    #[test]
    fn parse_errors_point_at_offending_token() {
        let err = parse_source("val N: ℕ\ntype nat = ℕ[N];", "f").unwrap_err();
        assert_eq!(err.span().line, 2);
        let SyntaxError::Parse(p) = err else { panic!() };
        assert_eq!(p.expected, vec!["`;`".to_string()]);
    }

    #[test]
    fn ascii_file_prints_unicode() {
        let spec = parse("pred p(x:Nat[3]) <=> forall y:Nat[3]. y <= x => x >= y;");
        let text = pretty_print(&spec);
        assert_eq!(text, "pred p(x:ℕ[3]) ⇔ ∀y:ℕ[3]. y ≤ x ⇒ x ≥ y;\n");
    }

    #[test]
    fn commands_round_trip() {
        let src = "proc p(n:ℕ[4]): ℕ[4] {
            var s:ℕ[4] := 0;
            for var i:ℕ[4] := 0; i < n; i := i+1 do invariant s ≤ i; decreases n-i; s := s+1;
            choose x:ℕ[4] with x > 2 then s := x; else s := 0;
            choose y ∈ 0..n do { assert y ≥ 0; }
            while s > 0 do { s := s-1; }
            if s = 0 then print s; else { }
            return s; }";
        let a = parse(src);
        let b = parse(&pretty_print(&a));
        assert_eq!(a.without_spans(), b.without_spans());
    }
}
