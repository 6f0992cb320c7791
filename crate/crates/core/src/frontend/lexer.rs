//! Tokenizer. Unicode operators and their ASCII spellings produce the same
//! [`TokenKind`], so the parser never sees the difference.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A position in a source file. Line and column are 1-based; `offset` is the
/// byte offset of the first character and `length` the byte length.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub line: u32,
    pub column: u32,
    pub offset: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn end(&self) -> usize {
        self.offset + self.length
    }

    /// Smallest span covering `self` and `other` (which must not precede `self`).
    pub fn to(&self, other: &SourceSpan) -> SourceSpan {
        let end = other.end().max(self.end());
        SourceSpan {
            file: self.file.clone(),
            line: self.line,
            column: self.column,
            offset: self.offset,
            length: end - self.offset,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Val,
    Type,
    Pred,
    Fun,
    Proc,
    Theorem,
    Requires,
    Ensures,
    Decreases,
    Invariant,
    Var,
    If,
    Then,
    Else,
    While,
    Do,
    For,
    Choose,
    With,
    Let,
    Return,
    Assert,
    Print,
    Bool,
    Set,
    Tuple,
    Array,
    Map,
    Record,
}

impl Keyword {
    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Val => "val",
            Keyword::Type => "type",
            Keyword::Pred => "pred",
            Keyword::Fun => "fun",
            Keyword::Proc => "proc",
            Keyword::Theorem => "theorem",
            Keyword::Requires => "requires",
            Keyword::Ensures => "ensures",
            Keyword::Decreases => "decreases",
            Keyword::Invariant => "invariant",
            Keyword::Var => "var",
            Keyword::If => "if",
            Keyword::Then => "then",
            Keyword::Else => "else",
            Keyword::While => "while",
            Keyword::Do => "do",
            Keyword::For => "for",
            Keyword::Choose => "choose",
            Keyword::With => "with",
            Keyword::Let => "let",
            Keyword::Return => "return",
            Keyword::Assert => "assert",
            Keyword::Print => "print",
            Keyword::Bool => "Bool",
            Keyword::Set => "Set",
            Keyword::Tuple => "Tuple",
            Keyword::Array => "Array",
            Keyword::Map => "Map",
            Keyword::Record => "Record",
        }
    }

    fn from_word(word: &str) -> Option<Keyword> {
        const ALL: [Keyword; 29] = [
            Keyword::Val,
            Keyword::Type,
            Keyword::Pred,
            Keyword::Fun,
            Keyword::Proc,
            Keyword::Theorem,
            Keyword::Requires,
            Keyword::Ensures,
            Keyword::Decreases,
            Keyword::Invariant,
            Keyword::Var,
            Keyword::If,
            Keyword::Then,
            Keyword::Else,
            Keyword::While,
            Keyword::Do,
            Keyword::For,
            Keyword::Choose,
            Keyword::With,
            Keyword::Let,
            Keyword::Return,
            Keyword::Assert,
            Keyword::Print,
            Keyword::Bool,
            Keyword::Set,
            Keyword::Tuple,
            Keyword::Array,
            Keyword::Map,
            Keyword::Record,
        ];
        ALL.into_iter().find(|k| k.as_str() == word)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Int(i64),
    // logical
    Forall,
    Exists,
    Sum,
    Iff,
    Implies,
    And,
    Or,
    Not,
    True,
    False,
    // relational
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    Subseteq,
    // sets
    Union,
    Intersect,
    Backslash,
    EmptySet,
    // arithmetic
    Plus,
    Minus,
    Times,
    Slash,
    Percent,
    Caret,
    // types
    Nat,
    Integer,
    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    LAngle,
    RAngle,
    Comma,
    Semi,
    Colon,
    Assign,
    Dot,
    DotDot,
    Bar,
}

impl TokenKind {
    /// Canonical (Unicode where one exists) spelling.
    pub fn text(&self) -> String {
        let s = match self {
            TokenKind::Keyword(k) => k.as_str(),
            TokenKind::Ident(name) => return name.clone(),
            TokenKind::Int(n) => return n.to_string(),
            TokenKind::Forall => "∀",
            TokenKind::Exists => "∃",
            TokenKind::Sum => "∑",
            TokenKind::Iff => "⇔",
            TokenKind::Implies => "⇒",
            TokenKind::And => "∧",
            TokenKind::Or => "∨",
            TokenKind::Not => "¬",
            TokenKind::True => "⊤",
            TokenKind::False => "⊥",
            TokenKind::Eq => "=",
            TokenKind::Neq => "≠",
            TokenKind::Lt => "<",
            TokenKind::Le => "≤",
            TokenKind::Gt => ">",
            TokenKind::Ge => "≥",
            TokenKind::In => "∈",
            TokenKind::Subseteq => "⊆",
            TokenKind::Union => "∪",
            TokenKind::Intersect => "∩",
            TokenKind::Backslash => "\\",
            TokenKind::EmptySet => "∅",
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Times => "·",
            TokenKind::Slash => "/",
            TokenKind::Percent => "%",
            TokenKind::Caret => "^",
            TokenKind::Nat => "ℕ",
            TokenKind::Integer => "ℤ",
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBracket => "[",
            TokenKind::RBracket => "]",
            TokenKind::LBrace => "{",
            TokenKind::RBrace => "}",
            TokenKind::LAngle => "⟨",
            TokenKind::RAngle => "⟩",
            TokenKind::Comma => ",",
            TokenKind::Semi => ";",
            TokenKind::Colon => ":",
            TokenKind::Assign => ":=",
            TokenKind::Dot => ".",
            TokenKind::DotDot => "..",
            TokenKind::Bar => "|",
        };
        s.to_string()
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(name) => write!(f, "identifier `{name}`"),
            TokenKind::Int(n) => write!(f, "integer `{n}`"),
            other => write!(f, "`{}`", other.text()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, Error)]
#[error("{span}: {message}")]
pub struct LexError {
    pub span: SourceSpan,
    pub message: String,
}

/// Words that spell an operator or literal.
fn word_alias(word: &str) -> Option<TokenKind> {
    Some(match word {
        "forall" => TokenKind::Forall,
        "exists" => TokenKind::Exists,
        "sum" => TokenKind::Sum,
        "in" => TokenKind::In,
        "subseteq" => TokenKind::Subseteq,
        "union" => TokenKind::Union,
        "intersect" => TokenKind::Intersect,
        "emptyset" => TokenKind::EmptySet,
        "true" => TokenKind::True,
        "false" => TokenKind::False,
        "Nat" => TokenKind::Nat,
        "Int" => TokenKind::Integer,
        _ => return None,
    })
}

/// Single-character Unicode symbols.
fn unicode_symbol(c: char) -> Option<TokenKind> {
    Some(match c {
        '∀' => TokenKind::Forall,
        '∃' => TokenKind::Exists,
        '∑' => TokenKind::Sum,
        '⇔' => TokenKind::Iff,
        '⇒' => TokenKind::Implies,
        '∧' => TokenKind::And,
        '∨' => TokenKind::Or,
        '¬' => TokenKind::Not,
        '⊤' => TokenKind::True,
        '⊥' => TokenKind::False,
        '≠' => TokenKind::Neq,
        '≤' => TokenKind::Le,
        '≥' => TokenKind::Ge,
        '∈' => TokenKind::In,
        '⊆' => TokenKind::Subseteq,
        '∪' => TokenKind::Union,
        '∩' => TokenKind::Intersect,
        '∅' => TokenKind::EmptySet,
        '·' => TokenKind::Times,
        '−' => TokenKind::Minus,
        'ℕ' => TokenKind::Nat,
        'ℤ' => TokenKind::Integer,
        '⟨' => TokenKind::LAngle,
        '⟩' => TokenKind::RAngle,
        _ => return None,
    })
}

/// ASCII operator spellings, longest first.
const ASCII_OPERATORS: &[(&str, TokenKind)] = &[
    ("<=>", TokenKind::Iff),
    ("=>", TokenKind::Implies),
    ("/\\", TokenKind::And),
    ("\\/", TokenKind::Or),
    ("&&", TokenKind::And),
    ("||", TokenKind::Or),
    ("~=", TokenKind::Neq),
    ("<=", TokenKind::Le),
    (">=", TokenKind::Ge),
    (":=", TokenKind::Assign),
    ("..", TokenKind::DotDot),
    ("(|", TokenKind::LAngle),
    ("|)", TokenKind::RAngle),
    ("~", TokenKind::Not),
    ("=", TokenKind::Eq),
    ("<", TokenKind::Lt),
    (">", TokenKind::Gt),
    ("\\", TokenKind::Backslash),
    ("+", TokenKind::Plus),
    ("-", TokenKind::Minus),
    ("*", TokenKind::Times),
    ("/", TokenKind::Slash),
    ("%", TokenKind::Percent),
    ("^", TokenKind::Caret),
    ("(", TokenKind::LParen),
    (")", TokenKind::RParen),
    ("[", TokenKind::LBracket),
    ("]", TokenKind::RBracket),
    ("{", TokenKind::LBrace),
    ("}", TokenKind::RBrace),
    (",", TokenKind::Comma),
    (";", TokenKind::Semi),
    (":", TokenKind::Colon),
    (".", TokenKind::Dot),
    ("|", TokenKind::Bar),
];

struct Cursor<'a> {
    src: &'a str,
    file: Arc<str>,
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn advance(&mut self, bytes: usize) {
        for c in self.src[self.pos..self.pos + bytes].chars() {
            if c == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
        self.pos += bytes;
    }

    fn span_here(&self, length: usize) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            line: self.line,
            column: self.column,
            offset: self.pos,
            length,
        }
    }
}

/// Splits `source` into tokens, skipping whitespace and comments.
pub fn tokenize(source: &str, filename: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor {
        src: source,
        file: Arc::from(filename),
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    // `(|` opened and not yet closed; `|)` only closes a tuple inside one.
    let mut open_angles = 0usize;

    while let Some(c) = cur.rest().chars().next() {
        if c.is_whitespace() {
            cur.advance(c.len_utf8());
            continue;
        }
        let rest = cur.rest();
        if rest.starts_with("//") {
            let len = rest.find('\n').unwrap_or(rest.len());
            cur.advance(len);
            continue;
        }
        if let Some(body) = rest.strip_prefix("/*") {
            match body.find("*/") {
                Some(end) => cur.advance(end + 4),
                None => {
                    return Err(LexError {
                        span: cur.span_here(2),
                        message: "unterminated block comment".into(),
                    })
                }
            }
            continue;
        }

        if c.is_ascii_digit() {
            let len = rest
                .find(|ch: char| !ch.is_ascii_digit())
                .unwrap_or(rest.len());
            let lexeme = &rest[..len];
            let span = cur.span_here(len);
            let value = lexeme.parse::<i64>().map_err(|_| LexError {
                span: span.clone(),
                message: format!("integer literal `{lexeme}` is too large"),
            })?;
            tokens.push(Token {
                kind: TokenKind::Int(value),
                lexeme: lexeme.to_string(),
                span,
            });
            cur.advance(len);
            continue;
        }

        if c.is_alphabetic() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            let word = &rest[..len];
            // ℕ and ℤ are alphabetic; they are type symbols, not identifiers.
            if let Some(kind) = unicode_symbol(c) {
                let clen = c.len_utf8();
                tokens.push(Token {
                    kind,
                    lexeme: rest[..clen].to_string(),
                    span: cur.span_here(clen),
                });
                cur.advance(clen);
                continue;
            }
            let kind = Keyword::from_word(word)
                .map(TokenKind::Keyword)
                .or_else(|| word_alias(word))
                .unwrap_or_else(|| TokenKind::Ident(word.to_string()));
            tokens.push(Token {
                kind,
                lexeme: word.to_string(),
                span: cur.span_here(len),
            });
            cur.advance(len);
            continue;
        }

        if let Some(kind) = unicode_symbol(c) {
            let len = c.len_utf8();
            tokens.push(Token {
                kind,
                lexeme: rest[..len].to_string(),
                span: cur.span_here(len),
            });
            cur.advance(len);
            continue;
        }

        let matched = ASCII_OPERATORS.iter().find(|(text, kind)| {
            rest.starts_with(text) && (*kind != TokenKind::RAngle || open_angles > 0)
        });
        match matched {
            Some((text, kind)) => {
                match kind {
                    TokenKind::LAngle => open_angles += 1,
                    TokenKind::RAngle => open_angles -= 1,
                    _ => {}
                }
                tokens.push(Token {
                    kind: kind.clone(),
                    lexeme: text.to_string(),
                    span: cur.span_here(text.len()),
                });
                cur.advance(text.len());
            }
            None => {
                return Err(LexError {
                    span: cur.span_here(c.len_utf8()),
                    message: format!("illegal character `{c}`"),
                })
            }
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src, "t").unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn unicode_quantifier() {
        assert_eq!(
            kinds("∀x:nat. x ≥ 0"),
            vec![
                TokenKind::Forall,
                TokenKind::Ident("x".into()),
                TokenKind::Colon,
                TokenKind::Ident("nat".into()),
                TokenKind::Dot,
                TokenKind::Ident("x".into()),
                TokenKind::Ge,
                TokenKind::Int(0),
            ]
        );
    }

    #[test]
    fn ascii_aliases_match_unicode() {
        assert_eq!(kinds("forall x:nat. x >= 0"), kinds("∀x:nat. x ≥ 0"));
        assert_eq!(
            kinds("a /\\ b \\/ ~c => d <=> e && f || g ~= h"),
            kinds("a ∧ b ∨ ¬c ⇒ d ⇔ e ∧ f ∨ g ≠ h")
        );
        assert_eq!(
            kinds("x in s union emptyset intersect t subseteq u * 2 (|1,2|) true false Nat Int"),
            kinds("x ∈ s ∪ ∅ ∩ t ⊆ u · 2 ⟨1,2⟩ ⊤ ⊥ ℕ ℤ")
        );
    }

    #[test]
    fn val_declaration() {
        assert_eq!(
            kinds("val N: ℕ;"),
            vec![
                TokenKind::Keyword(Keyword::Val),
                TokenKind::Ident("N".into()),
                TokenKind::Colon,
                TokenKind::Nat,
                TokenKind::Semi,
            ]
        );
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(kinds("1 // two\n/* three\n */ 4"), vec![TokenKind::Int(1), TokenKind::Int(4)]);
    }

    #[test]
    fn cardinality_bars_inside_parens() {
        assert_eq!(
            kinds("(|r|)"),
            vec![
                TokenKind::LAngle,
                TokenKind::Ident("r".into()),
                TokenKind::RAngle,
            ]
        );
        assert_eq!(
            kinds("( |r|)"),
            vec![
                TokenKind::LParen,
                TokenKind::Bar,
                TokenKind::Ident("r".into()),
                TokenKind::Bar,
                TokenKind::RParen,
            ]
        );
    }

    #[test]
    fn spans_are_ordered_and_one_based() {
        let toks = tokenize("val N: ℕ;\n  x", "f").unwrap();
        assert_eq!((toks[0].span.line, toks[0].span.column), (1, 1));
        assert_eq!((toks[3].span.line, toks[3].span.column), (1, 8));
        assert_eq!((toks[5].span.line, toks[5].span.column), (2, 3));
        for w in toks.windows(2) {
            assert!(w[0].span.end() <= w[1].span.offset);
        }
    }

    #[test]
    fn errors() {
        let err = tokenize("a /* open", "f").unwrap_err();
        assert!(err.message.contains("unterminated"));
        let err = tokenize("x $ y", "f").unwrap_err();
        assert_eq!(err.span.column, 3);
    }
}
