//! Pretty-printer producing canonical `.ssir` text.

use std::fmt::Write;

use super::{BaseType, Binder, Expr, Param, Program, SessionType, Stmt, StmtKind, TypeItem, UnOp};

pub fn print(prog: &Program) -> String {
    let mut out = String::new();
    for c in &prog.choices {
        writeln!(out, "choice {} {{", c.name).unwrap();
        for a in &c.arms {
            writeln!(out, "  {} {};", session_type(&a.ty), a.label).unwrap();
        }
        out.push_str("};\n");
    }
    for t in &prog.typedefs {
        writeln!(out, "typedef {} {};", session_type(&t.ty), t.name).unwrap();
    }
    for p in &prog.procs {
        out.push('\n');
        let params: Vec<String> = p
            .params
            .iter()
            .map(|param| match param {
                Param::Val { ty, name } => format!("{ty} {name}"),
                Param::Chan { ty, name } => format!("{ty} ${name}"),
            })
            .collect();
        writeln!(
            out,
            "{} ${} {}({}) {{",
            p.offered_ty,
            p.offered,
            p.name,
            params.join(", ")
        )
        .unwrap();
        block(&mut out, &p.body, 1);
        out.push_str("}\n");
    }
    out
}

pub fn session_type(ty: &SessionType) -> String {
    let mut items: &[TypeItem] = &ty.items;
    if let [rest @ .., TypeItem::End] = items {
        items = rest;
    }
    if items.is_empty() {
        return "< >".to_string();
    }
    let parts: Vec<String> = items
        .iter()
        .map(|i| match i {
            TypeItem::RecvVal(t) => format!("?{t}"),
            TypeItem::SendVal(t) => format!("!{t}"),
            TypeItem::RecvChoice(c) => format!("?choice {c}"),
            TypeItem::SendChoice(c) => format!("!choice {c}"),
            TypeItem::End => "end".to_string(),
        })
        .collect();
    format!("<{}>", parts.join("; "))
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for s in stmts {
        stmt(out, s, depth);
    }
}

fn decl_prefix(decl: &Option<BaseType>) -> String {
    decl.as_ref().map(|d| format!("{d} ")).unwrap_or_default()
}

/// Single-line rendering of a simple statement, used by traces and the
/// sigma dump. Compound statements render their header only.
pub fn stmt_head(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Switch { chan, .. } => format!("switch (${chan})"),
        StmtKind::If { cond, .. } => format!("if ({})", expr(cond)),
        StmtKind::While { cond, .. } => format!("while ({})", expr(cond)),
        _ => {
            let mut out = String::new();
            stmt(&mut out, s, 0);
            out.trim_end().to_string()
        }
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match &s.kind {
        StmtKind::Spawn {
            chan,
            decl,
            proc,
            args,
        } => {
            let args: Vec<String> = args.iter().map(expr).collect();
            writeln!(
                out,
                "{}${chan} = {proc}({});",
                decl_prefix(decl),
                args.join(", ")
            )
            .unwrap();
        }
        StmtKind::Forward { offered, client } => writeln!(out, "${offered} = ${client};").unwrap(),
        StmtKind::Close(c) => writeln!(out, "close(${c});").unwrap(),
        StmtKind::Wait(c) => writeln!(out, "wait(${c});").unwrap(),
        StmtKind::SendVal { chan, expr: e } => {
            writeln!(out, "send(${chan}, {});", expr(e)).unwrap()
        }
        StmtKind::RecvVal { binder, decl, chan } => {
            writeln!(out, "{}{binder} = recv(${chan});", decl_prefix(decl)).unwrap()
        }
        StmtKind::SendShift(c) => writeln!(out, "send(${c}, shift);").unwrap(),
        StmtKind::RecvShift(c) => writeln!(out, "shift = recv(${c});").unwrap(),
        StmtKind::SendLabel { chan, label } => writeln!(out, "${chan}.{label};").unwrap(),
        StmtKind::Switch { chan, arms } => {
            writeln!(out, "switch (${chan}) {{").unwrap();
            for a in arms {
                indent(out, depth + 1);
                writeln!(out, "case {}:", a.label).unwrap();
                block(out, &a.body, depth + 2);
            }
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::Assign { var, decl, expr: e } => {
            writeln!(out, "{}{var} = {};", decl_prefix(decl), expr(e)).unwrap()
        }
        StmtKind::If {
            cond,
            then_body,
            else_body,
        } => {
            writeln!(out, "if ({}) {{", expr(cond)).unwrap();
            block(out, then_body, depth + 1);
            indent(out, depth);
            if else_body.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                block(out, else_body, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
        StmtKind::While { cond, body } => {
            writeln!(out, "while ({}) {{", expr(cond)).unwrap();
            block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        StmtKind::AsyncRecvVal { binder, decl, chan } => {
            writeln!(out, "{}{binder} = async_recv(${chan});", decl_prefix(decl)).unwrap()
        }
        StmtKind::AsyncRecvShift(c) => writeln!(out, "shift = async_recv(${c});").unwrap(),
        StmtKind::AsyncWait(c) => writeln!(out, "async_wait(${c});").unwrap(),
        StmtKind::SyncVar { chan, binder } => {
            let b = match binder {
                Binder::Var(v) => v.clone(),
                Binder::Chan(c) => format!("${c}"),
            };
            writeln!(out, "sync(${chan}, {b});").unwrap()
        }
        StmtKind::SyncShift(c) => writeln!(out, "sync(${c}, shift);").unwrap(),
        StmtKind::SyncEnd(c) => writeln!(out, "sync(${c}, end);").unwrap(),
        StmtKind::Nop => out.push_str("nop; // no-op\n"),
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(n) => n.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Var(v) => v.clone(),
        Expr::Chan(c) => format!("${c}"),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            };
            match **inner {
                Expr::Var(_) | Expr::Bool(_) | Expr::Chan(_) => format!("{sym}{}", expr(inner)),
                _ => format!("{sym}({})", expr(inner)),
            }
        }
        Expr::Binary(op, l, r) => {
            let prec = op.precedence();
            let side = |child: &Expr, right: bool| match child {
                Expr::Binary(cop, ..)
                    if cop.precedence() < prec || (right && cop.precedence() == prec) =>
                {
                    format!("({})", expr(child))
                }
                _ => expr(child),
            };
            format!("{} {} {}", side(l, false), op.symbol(), side(r, true))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn print_is_deterministic_and_reparses() {
        let src = r#"
            typedef <!int> res;
            typedef < > unit;
            res $c leaf(int n) { send($c, n * (n - 1) - -2); close($c); }
            unit $c main() {
              res $a = leaf(3);
              int x = recv($a);
              wait($a);
              if (!(x < 2) && x != 7 || false) { nop; } else { x = -(x); }
              close($c);
            }
        "#;
        let p = parse(src).unwrap();
        let a = print(&p);
        let b = print(&p);
        assert_eq!(a, b);
        assert_eq!(parse(&a).unwrap(), p);
    }

    #[test]
    fn nop_is_visible() {
        let p = parse("typedef < > unit; unit $c main() { nop; close($c); }").unwrap();
        assert!(print(&p).contains("nop; // no-op"));
    }

    #[test]
    fn end_type_prints_empty() {
        assert_eq!(session_type(&SessionType::end()), "< >");
        assert_eq!(
            session_type(&SessionType::new(vec![TypeItem::SendVal(BaseType::Int)])),
            "<!int>"
        );
    }
}
