//! Canonical pretty-printer for FlareLang.
//!
//! `parse(unparse(parse(s)))` is structurally identical to `parse(s)`;
//! the round-trip property is exercised in the test suite.

use crate::lang::ast::*;
use std::fmt::Write;

const INDENT: &str = "    ";

/// Render a program in canonical form.
pub fn unparse(program: &Program) -> String {
    let mut out = String::new();
    for item in &program.items {
        match item {
            TopItem::Func(f) => {
                write!(out, "func {}(", f.name.name).unwrap();
                write_params(&mut out, &f.params);
                out.push_str(") ");
                write_block(&mut out, &f.body, 0);
                out.push('\n');
            }
            TopItem::Handler(h) => {
                write!(out, "when {}", h.event.name).unwrap();
                if !h.params.is_empty() {
                    out.push('(');
                    write_params(&mut out, &h.params);
                    out.push(')');
                }
                out.push(' ');
                write_block(&mut out, &h.body, 0);
                out.push('\n');
            }
            TopItem::Stmt(s) => {
                write_stmt(&mut out, s, 0);
            }
        }
    }
    out
}

/// Render a single expression in canonical form (used for condition
/// labels in reports).
pub fn unparse_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, 0);
    out
}

fn write_params(out: &mut String, params: &[Ident]) {
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&p.name);
    }
}

fn write_block(out: &mut String, block: &Block, depth: usize) {
    if block.stmts.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for s in &block.stmts {
        write_stmt(out, s, depth + 1);
    }
    for _ in 0..depth {
        out.push_str(INDENT);
    }
    out.push('}');
}

fn write_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
    match &stmt.kind {
        StmtKind::VarDecl { name, value } => {
            write!(out, "var {} = ", name.name).unwrap();
            write_expr(out, value, 0);
            out.push(';');
        }
        StmtKind::GlobalDecl { name, value } => {
            write!(out, "global {} = ", name.name).unwrap();
            write_expr(out, value, 0);
            out.push(';');
        }
        StmtKind::Assign { name, value } => {
            write!(out, "{} = ", name.name).unwrap();
            write_expr(out, value, 0);
            out.push(';');
        }
        StmtKind::If { cond, then_block, else_block } => {
            out.push_str("if ");
            write_expr(out, cond, 0);
            out.push(' ');
            write_block(out, then_block, depth);
            if let Some(e) = else_block {
                out.push_str(" else ");
                write_block(out, e, depth);
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str("while ");
            write_expr(out, cond, 0);
            out.push(' ');
            write_block(out, body, depth);
        }
        StmtKind::Repeat { count, body } => {
            out.push_str("repeat ");
            write_expr(out, count, 0);
            out.push(' ');
            write_block(out, body, depth);
        }
        StmtKind::After { delay, body } => {
            out.push_str("after ");
            write_expr(out, delay, 0);
            out.push(' ');
            write_block(out, body, depth);
        }
        StmtKind::Print { value } => {
            out.push_str("print(");
            write_expr(out, value, 0);
            out.push_str(");");
        }
        StmtKind::Emit { event, args } => {
            write!(out, "emit {}", event.name).unwrap();
            if !args.is_empty() {
                out.push('(');
                write_args(out, args);
                out.push(')');
            }
            out.push(';');
        }
        StmtKind::Return { value } => {
            out.push_str("return");
            if let Some(v) = value {
                out.push(' ');
                write_expr(out, v, 0);
            }
            out.push(';');
        }
        StmtKind::Call { name, args } => {
            write!(out, "{}(", name.name).unwrap();
            write_args(out, args);
            out.push_str(");");
        }
        StmtKind::HwWrite { device, value } => {
            write!(out, "hw.write({}, ", quote(&device.name)).unwrap();
            write_expr(out, value, 0);
            out.push_str(");");
        }
    }
    out.push('\n');
}

fn write_args(out: &mut String, args: &[Expr]) {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a, 0);
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

/// `min_prec` is the loosest precedence printable without parentheses.
fn write_expr(out: &mut String, expr: &Expr, min_prec: u8) {
    match &expr.kind {
        ExprKind::Int(v) => write!(out, "{v}").unwrap(),
        ExprKind::Str(s) => out.push_str(&quote(s)),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Name(n) => out.push_str(&n.name),
        ExprKind::HwRead { device } => {
            write!(out, "hw.read({})", quote(&device.name)).unwrap();
        }
        ExprKind::Call { name, args } => {
            write!(out, "{}(", name.name).unwrap();
            write_args(out, args);
            out.push(')');
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let parens = prec < min_prec;
            if parens {
                out.push('(');
            }
            write_expr(out, lhs, prec);
            write!(out, " {} ", op.symbol()).unwrap();
            // Operators are left-associative: the right operand needs one
            // level tighter to survive re-parsing.
            write_expr(out, rhs, prec + 1);
            if parens {
                out.push(')');
            }
        }
        ExprKind::Unary { op, operand } => {
            const UNARY_PREC: u8 = 7;
            let parens = UNARY_PREC < min_prec;
            if parens {
                out.push('(');
            }
            match op {
                UnaryOp::Neg => out.push('-'),
                UnaryOp::Not => out.push_str("not "),
            }
            write_expr(out, operand, UNARY_PREC);
            if parens {
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse;

    fn roundtrip(src: &str) {
        let first = parse("t.flare", src).unwrap();
        let printed = unparse(&first);
        let second = parse("t.flare", &printed).unwrap();
        assert_eq!(printed, unparse(&second), "unstable unparse for {src:?}");
    }

    #[test]
    fn roundtrip_core_constructs() {
        roundtrip("var x = 1 + 2 * 3;");
        roundtrip("var x = (1 + 2) * 3;");
        roundtrip("var x = -(1 + 2);");
        roundtrip("var b = not (true or false) and true;");
        roundtrip("if 1 < 2 { print(\"a\"); } else { print(\"b\"); }");
        roundtrip("func f(a, b) { return a + b; } f(1, 2);");
        roundtrip("when go(n) { print(n); } emit go(7);");
        roundtrip("after 10 { hw.write(\"led\", hw.read(\"light\")); }");
        roundtrip("while true {}");
        roundtrip("var s = \"a\\\"b\\\\c\\n\";");
    }

    #[test]
    fn parens_preserved_only_when_needed() {
        let p = parse("t.flare", "var x = (1 + 2) * 3;").unwrap();
        let printed = unparse(&p);
        assert!(printed.contains("(1 + 2) * 3"));
        let p = parse("t.flare", "var x = 1 + (2 * 3);").unwrap();
        assert!(unparse(&p).contains("1 + 2 * 3"));
    }
}
