//! Canonical Unicode rendering of the AST. Output re-parses to a structurally
//! equal tree; parentheses are inserted only where precedence requires them.

use super::ast::*;

/// Renders a whole specification, one declaration per paragraph.
pub fn pretty_print(spec: &Spec) -> String {
    let mut out = String::new();
    for d in &spec.decls {
        out.push_str(&print_decl(d));
        out.push('\n');
    }
    out
}

pub fn print_decl(decl: &Decl) -> String {
    match decl {
        Decl::Val(v) => match &v.value {
            Some(e) => format!("val {}: {} = {};", v.name, print_type(&v.ty), print_expr(e)),
            None => format!("val {}: {};", v.name, print_type(&v.ty)),
        },
        Decl::Type(t) => format!("type {} = {};", t.name, print_type(&t.ty)),
        Decl::Op(op) => print_op(op),
    }
}

fn print_params(params: &[Param]) -> String {
    params
        .iter()
        .map(|p| format!("{}:{}", p.name, print_type(&p.ty)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn print_op(op: &OpDecl) -> String {
    let mut out = format!("{} {}", op.kind.keyword(), op.name);
    if let Some(params) = &op.params {
        out.push_str(&format!("({})", print_params(params)));
    }
    if let Some(t) = &op.result {
        out.push_str(&format!(": {}", print_type(t)));
    }
    let clauses = contract_lines(&op.contract);
    for c in &clauses {
        out.push_str("\n  ");
        out.push_str(c);
    }
    let sep = if clauses.is_empty() { " " } else { "\n  " };
    match &op.body {
        OpBody::Expr(e) => {
            let def = if op.kind == OpKind::Fun { "=" } else { "⇔" };
            out.push_str(&format!("{sep}{def} {};", print_expr(e)));
        }
        OpBody::Proc { commands, ret } => {
            out.push_str("\n{\n");
            for c in commands {
                print_cmd(c, 1, &mut out);
            }
            out.push_str(&format!("  return {};\n}}", print_expr(ret)));
        }
    }
    out
}

fn contract_lines(c: &Contract) -> Vec<String> {
    let mut lines = Vec::new();
    for r in &c.requires {
        lines.push(requires_text(r));
    }
    for e in &c.ensures {
        lines.push(ensures_text(e));
    }
    if let Some(d) = &c.decreases {
        lines.push(decreases_text(d));
    }
    lines
}

/// Annotation renderings, also used verbatim in checker error reports.
pub fn requires_text(e: &Expr) -> String {
    format!("requires {};", print_expr(e))
}

pub fn ensures_text(e: &Expr) -> String {
    format!("ensures {};", print_expr(e))
}

pub fn decreases_text(e: &Expr) -> String {
    format!("decreases {};", print_expr(e))
}

pub fn invariant_text(e: &Expr) -> String {
    format!("invariant {};", print_expr(e))
}

pub fn print_type(t: &TypeExpr) -> String {
    match &t.kind {
        TypeExprKind::Bool => "Bool".into(),
        TypeExprKind::Nat => "ℕ".into(),
        TypeExprKind::NatUpTo(n) => format!("ℕ[{}]", print_expr(n)),
        TypeExprKind::IntRange(a, b) => format!("ℤ[{},{}]", print_expr(a), print_expr(b)),
        TypeExprKind::Set(e) => format!("Set[{}]", print_type(e)),
        TypeExprKind::Tuple(ts) => format!(
            "Tuple[{}]",
            ts.iter().map(print_type).collect::<Vec<_>>().join(",")
        ),
        TypeExprKind::Record(fs) => format!(
            "Record[{}]",
            fs.iter()
                .map(|(n, t)| format!("{n}:{}", print_type(t)))
                .collect::<Vec<_>>()
                .join(",")
        ),
        TypeExprKind::Array(n, e) => format!("Array[{},{}]", print_expr(n), print_type(e)),
        TypeExprKind::Map(d, c) => format!("Map[{},{}]", print_type(d), print_type(c)),
        TypeExprKind::Named(n) => n.clone(),
    }
}

// Binding strength of each expression form; larger binds tighter.
const OPEN: u8 = 0;
const IFF: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const NOT: u8 = 5;
const REL: u8 = 6;
const RANGE: u8 = 7;
const ADD: u8 = 8;
const MUL: u8 = 9;
const POW: u8 = 10;
const NEG: u8 = 11;
const POSTFIX: u8 = 12;
const ATOM: u8 = 13;

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Iff => IFF,
        BinOp::Implies => IMPLIES,
        BinOp::Or => OR,
        BinOp::And => AND,
        BinOp::Eq
        | BinOp::Neq
        | BinOp::Lt
        | BinOp::Le
        | BinOp::Gt
        | BinOp::Ge
        | BinOp::Subseteq
        | BinOp::In => REL,
        BinOp::Add | BinOp::Sub | BinOp::Union | BinOp::Diff => ADD,
        BinOp::Mul | BinOp::Div | BinOp::Mod | BinOp::Intersect => MUL,
        BinOp::Pow => POW,
    }
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Quant(..)
        | ExprKind::Sum(..)
        | ExprKind::Choose(..)
        | ExprKind::If(..)
        | ExprKind::Let(..)
        | ExprKind::Print(..) => OPEN,
        ExprKind::Binary(op, ..) => binop_prec(*op),
        ExprKind::Unary(UnOp::Not, _) => NOT,
        ExprKind::Unary(UnOp::Neg, _) => NEG,
        ExprKind::Range(..) => RANGE,
        ExprKind::Proj(..) | ExprKind::Field(..) | ExprKind::Index(..) => POSTFIX,
        _ => ATOM,
    }
}

pub fn print_expr(e: &Expr) -> String {
    at_tail(e, OPEN, true)
}

/// Prints `e` in a position that requires binding strength `min`.
fn at(e: &Expr, min: u8) -> String {
    at_tail(e, min, false)
}

/// As [`at`]; `tail` marks positions that nothing follows up to a closing
/// delimiter, where an open-ended form needs no parentheses.
fn at_tail(e: &Expr, min: u8, tail: bool) -> String {
    let s = raw(e, tail);
    let open_at_end = tail && prec(e) == OPEN;
    if prec(e) < min && !open_at_end {
        // `(|` would lex as a tuple bracket.
        if s.starts_with('|') {
            format!("( {s})")
        } else {
            format!("({s})")
        }
    } else {
        s
    }
}

fn list(es: &[Expr]) -> String {
    es.iter().map(print_expr).collect::<Vec<_>>().join(", ")
}

fn print_binders(b: &Binders, filter_tail: bool) -> String {
    let vars = b
        .vars
        .iter()
        .map(|v| match &v.domain {
            BinderDomain::Type(t) => format!("{}:{}", v.name, print_type(t)),
            BinderDomain::Member(e) => format!("{} ∈ {}", v.name, at(e, RANGE)),
        })
        .collect::<Vec<_>>()
        .join(", ");
    match &b.filter {
        Some(f) => format!("{vars} with {}", at_tail(f, OPEN, filter_tail)),
        None => vars,
    }
}

fn raw(e: &Expr, tail: bool) -> String {
    match &e.kind {
        ExprKind::Int(n) => n.to_string(),
        ExprKind::Bool(true) => "⊤".into(),
        ExprKind::Bool(false) => "⊥".into(),
        ExprKind::Var(v) => v.clone(),
        ExprKind::Unary(UnOp::Not, x) => format!("¬{}", at_tail(x, NOT, tail)),
        ExprKind::Unary(UnOp::Neg, x) => format!("-{}", at_tail(x, NEG, tail)),
        ExprKind::Binary(op, l, r) => {
            let p = binop_prec(*op);
            let (lp, rp) = match op {
                BinOp::Implies | BinOp::Pow => (p + 1, p),
                _ => (p, p + 1),
            };
            format!("{} {} {}", at(l, lp), op.symbol(), at_tail(r, rp, tail))
        }
        ExprKind::Call(f, args) => format!("{f}({})", list(args)),
        ExprKind::Tuple(items) => format!("⟨{}⟩", list(items)),
        ExprKind::Record(fields) => format!(
            "⟨{}⟩",
            fields
                .iter()
                .map(|(n, e)| format!("{n}: {}", print_expr(e)))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        ExprKind::Proj(x, k) => format!("{}.{k}", at(x, POSTFIX)),
        ExprKind::Field(x, f) => format!("{}.{f}", at(x, POSTFIX)),
        ExprKind::Index(a, i) => format!("{}[{}]", at(a, POSTFIX), print_expr(i)),
        ExprKind::Init(t, init) => format!("{}({})", print_type(t), print_expr(init)),
        ExprKind::SetLit(items) => format!("{{{}}}", list(items)),
        ExprKind::EmptySet(t) => format!("∅[{}]", print_type(t)),
        ExprKind::Range(a, b) => format!("{}..{}", at(a, ADD), at(b, ADD)),
        ExprKind::Card(x) => format!("|{}|", print_expr(x)),
        ExprKind::Comprehension(x, b) => format!("{{ {} | {} }}", print_expr(x), print_binders(b, true)),
        ExprKind::Quant(q, b, body) => {
            let sym = match q {
                Quantifier::Forall => "∀",
                Quantifier::Exists => "∃",
            };
            format!("{sym}{}. {}", print_binders(b, false), print_expr(body))
        }
        ExprKind::Sum(b, body) => format!("∑{}. {}", print_binders(b, false), print_expr(body)),
        ExprKind::Choose(b) => format!("choose {}", print_binders(b, true)),
        ExprKind::If(c, t, f) => format!(
            "if {} then {} else {}",
            print_expr(c),
            print_expr(t),
            print_expr(f)
        ),
        ExprKind::Let(x, v, body) => {
            // `in` would end the value early if it appeared unparenthesized.
            format!("let {x} = {} in {}", at(v, RANGE), print_expr(body))
        }
        ExprKind::Print(x) => format!("print {}", print_expr(x)),
    }
}

fn indent(level: usize) -> String {
    "  ".repeat(level)
}

fn print_annotations(a: &LoopAnnotations, level: usize, out: &mut String) {
    for inv in &a.invariants {
        out.push_str(&format!("{}{}\n", indent(level), invariant_text(inv)));
    }
    if let Some(d) = &a.decreases {
        out.push_str(&format!("{}{}\n", indent(level), decreases_text(d)));
    }
}

fn print_lvalue(lv: &LValue) -> String {
    let mut s = lv.name.clone();
    for i in &lv.indices {
        s.push_str(&format!("[{}]", print_expr(i)));
    }
    s
}

/// Appends `cmd` to `out` as lines indented at `level`.
pub fn print_cmd(cmd: &Cmd, level: usize, out: &mut String) {
    let pad = indent(level);
    match &cmd.kind {
        CmdKind::Skip => out.push_str(&format!("{pad};\n")),
        CmdKind::VarDecl { name, ty, init } => match init {
            Some(e) => out.push_str(&format!("{pad}var {name}:{} := {};\n", print_type(ty), print_expr(e))),
            None => out.push_str(&format!("{pad}var {name}:{};\n", print_type(ty))),
        },
        CmdKind::Assign(lv, e) => {
            out.push_str(&format!("{pad}{} := {};\n", print_lvalue(lv), print_expr(e)))
        }
        CmdKind::Block(cmds) => {
            out.push_str(&format!("{pad}{{\n"));
            for c in cmds {
                print_cmd(c, level + 1, out);
            }
            out.push_str(&format!("{pad}}}\n"));
        }
        CmdKind::If(c, t, e) => {
            out.push_str(&format!("{pad}if {} then\n", print_expr(c)));
            print_cmd(t, level + 1, out);
            if let Some(e) = e {
                out.push_str(&format!("{pad}else\n"));
                print_cmd(e, level + 1, out);
            }
        }
        CmdKind::While {
            cond,
            annotations,
            body,
        } => {
            out.push_str(&format!("{pad}while {} do\n", print_expr(cond)));
            print_annotations(annotations, level + 1, out);
            print_cmd(body, level + 1, out);
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
            let upd = match &update.kind {
                CmdKind::Assign(lv, e) => format!("{} := {}", print_lvalue(lv), print_expr(e)),
                _ => String::new(),
            };
            out.push_str(&format!(
                "{pad}for var {name}:{} := {}; {}; {upd} do\n",
                print_type(ty),
                print_expr(init),
                print_expr(cond)
            ));
            print_annotations(annotations, level + 1, out);
            print_cmd(body, level + 1, out);
        }
        CmdKind::ForIn {
            binders,
            annotations,
            body,
        } => {
            out.push_str(&format!("{pad}for {} do\n", print_binders(binders, true)));
            print_annotations(annotations, level + 1, out);
            print_cmd(body, level + 1, out);
        }
        CmdKind::Choose(b) => out.push_str(&format!("{pad}choose {};\n", print_binders(b, true))),
        CmdKind::ChooseElse(b, t, e) => {
            out.push_str(&format!("{pad}choose {} then\n", print_binders(b, true)));
            print_cmd(t, level + 1, out);
            out.push_str(&format!("{pad}else\n"));
            print_cmd(e, level + 1, out);
        }
        CmdKind::ChooseDo {
            binders,
            annotations,
            body,
        } => {
            out.push_str(&format!("{pad}choose {} do\n", print_binders(binders, true)));
            print_annotations(annotations, level + 1, out);
            print_cmd(body, level + 1, out);
        }
        CmdKind::Assert(e) => out.push_str(&format!("{pad}assert {};\n", print_expr(e))),
        CmdKind::Print(e) => out.push_str(&format!("{pad}print {};\n", print_expr(e))),
    }
}
