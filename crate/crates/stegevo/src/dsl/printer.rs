//! Canonical pretty-printer.
//!
//! The canonical form fixes whitespace, indentation, and parenthesization,
//! so byte-identical canonical text means structurally identical programs.
//! Program length (the `l_k` used by reference sampling) is the character
//! count of this form.

use super::ast::{BinOp, Expr, ExprKind, Function};

/// Canonical text of a function.
pub fn print_function(f: &Function) -> String {
    let mut out = String::new();
    out.push_str(&format!("fn {}({}) {{\n", f.name, f.param));
    for binding in &f.lets {
        out.push_str(&format!(
            "    let {} = {};\n",
            binding.name,
            print_expr(&binding.value, 0)
        ));
    }
    out.push_str(&format!(
        "    return ({}, {});\n}}\n",
        print_expr(&f.ret.0, 0),
        print_expr(&f.ret.1, 0)
    ));
    out
}

/// Number formatting: integers print bare, everything else uses the
/// shortest representation that round-trips through the lexer.
pub fn fmt_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

fn precedence(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Binary { op, .. } => match op {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        },
        ExprKind::Neg(_) => 3,
        // a bare negative literal prints with a leading minus
        ExprKind::Number(v) if *v < 0.0 => 3,
        _ => 4,
    }
}

fn print_expr(expr: &Expr, parent_prec: u8) -> String {
    let prec = precedence(&expr.kind);
    let text = match &expr.kind {
        ExprKind::Number(v) => fmt_number(*v),
        ExprKind::Var(name) => name.clone(),
        ExprKind::Matrix(rows) => {
            let body = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|v| fmt_number(*v))
                        .collect::<Vec<_>>()
                        .join(", ")
                })
                .collect::<Vec<_>>()
                .join("; ");
            format!("[{body}]")
        }
        ExprKind::Call { name, args } => {
            let body = args
                .iter()
                .map(|a| print_expr(a, 0))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{name}({body})")
        }
        ExprKind::Neg(inner) => format!("-{}", print_expr(inner, prec)),
        ExprKind::Binary { op, lhs, rhs } => {
            // left-associative: the right operand of a same-precedence chain
            // needs parens to reparse identically
            let l = print_expr(lhs, prec);
            let r = print_expr(rhs, prec + 1);
            format!("{l} {} {r}", op.symbol())
        }
    };
    if prec < parent_prec {
        format!("({text})")
    } else {
        text
    }
}
