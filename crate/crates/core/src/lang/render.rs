use std::fmt::Write;

use super::ast::{Expr, GateStmt, Program, Stmt, DEFAULT_PROGRAM_NAME};

const INDENT: &str = "  ";

/// Canonical source text for `p`.
pub fn render(p: &Program) -> String {
    let mut out = String::new();
    if p.name != DEFAULT_PROGRAM_NAME {
        writeln!(out, "program {}", p.name).unwrap();
    }
    writeln!(out, "qubits {}", p.qubit_count).unwrap();
    render_block(&p.body, 0, &mut out);
    out
}

fn render_block(block: &[Stmt], depth: usize, out: &mut String) {
    for s in block {
        let pad = INDENT.repeat(depth);
        match s {
            Stmt::Assign { var, expr } => writeln!(out, "{pad}{var} = {}", render_expr(expr)).unwrap(),
            Stmt::Gate(g) => writeln!(out, "{pad}{}", render_gate(g)).unwrap(),
            Stmt::If { cond, body } | Stmt::While { cond, body } => {
                let kw = if matches!(s, Stmt::If { .. }) { "if" } else { "while" };
                writeln!(out, "{pad}{kw} {} {{", render_expr(cond)).unwrap();
                render_block(body, depth + 1, out);
                writeln!(out, "{pad}}}").unwrap();
            }
        }
    }
}

pub fn render_gate(g: &GateStmt) -> String {
    let mut s = g.gate.name().to_string();
    if let Some(a) = g.angle {
        write!(s, "({a})").unwrap();
    }
    let ops: Vec<String> = g.qubits.iter().map(|q| format!("q[{q}]")).collect();
    write!(s, " {}", ops.join(", ")).unwrap();
    s
}

/// Precedence of the expression's top node (4 for atoms).
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(op, ..) => op.precedence(),
        _ => 4,
    }
}

pub fn render_expr(e: &Expr) -> String {
    match e {
        Expr::Lit(v) => v.to_string(),
        Expr::Var(v) => v.clone(),
        Expr::Neg(inner) => {
            // `-5` would re-parse as a literal, so literal operands keep parens
            let needs_parens = matches!(**inner, Expr::Bin(..) | Expr::Lit(_));
            if needs_parens {
                format!("-({})", render_expr(inner))
            } else {
                format!("-{}", render_expr(inner))
            }
        }
        Expr::Bin(op, l, r) => {
            let p = op.precedence();
            let ls = if prec(l) < p { format!("({})", render_expr(l)) } else { render_expr(l) };
            let rs = if prec(r) <= p { format!("({})", render_expr(r)) } else { render_expr(r) };
            format!("{ls} {} {rs}", op.symbol())
        }
    }
}
