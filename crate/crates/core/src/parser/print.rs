//! Source printer for the concrete syntax tree.

use std::fmt::Write;

use crate::parser::ast::*;

pub fn print_program(p: &SourceProgram) -> String {
    let mut out = String::new();
    for (i, m) in p.methods.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_method(&mut out, m);
    }
    out
}

fn print_method(out: &mut String, m: &MethodDecl) {
    let params: Vec<String> = m.params.iter().map(|(t, n)| format!("{t} {n}")).collect();
    let _ = write!(out, "{} {}({}) ", m.ret, m.name, params.join(", "));
    print_block(out, &m.body, 0);
    out.push('\n');
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_block(out: &mut String, b: &Block, depth: usize) {
    out.push_str("{\n");
    for item in &b.items {
        indent(out, depth + 1);
        match item {
            SeqItem::Decl(d) => print_decl(out, d),
            SeqItem::Code(s) => print_stmt(out, s, depth + 1),
        }
        out.push('\n');
    }
    indent(out, depth);
    out.push('}');
}

fn print_decl(out: &mut String, d: &VarDeclaration) {
    let _ = match d {
        VarDeclaration::Typed(t, names) => write!(out, "{t} {};", join(names)),
        VarDeclaration::WithEnds { ty, name, ends } => {
            write!(out, "{ty} {name} withends [{}, {}];", ends.0, ends.1)
        }
        VarDeclaration::Alias { name, parts } => write!(out, "{name} aliasfor [{}];", join(parts)),
    };
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    match s {
        Stmt::Skip => out.push(';'),
        Stmt::Expr(e) => {
            print_expr(out, e);
            out.push(';');
        }
        Stmt::Fork(n, args) => {
            let _ = write!(out, "fork {n}({});", exprs(args));
        }
        Stmt::Send(c, v) => {
            let _ = write!(out, "send({}, {});", expr_string(c), expr_string(v));
        }
        Stmt::Return(None) => out.push_str("return;"),
        Stmt::Return(Some(e)) => {
            let _ = write!(out, "return {};", expr_string(e));
        }
        Stmt::Block(b) => print_block(out, b, depth),
        Stmt::If(c, t, e) => {
            let _ = write!(out, "if ({}) ", expr_string(c));
            print_stmt(out, t, depth);
            if let Some(e) = e {
                out.push_str(" else ");
                print_stmt(out, e, depth);
            }
        }
        Stmt::While(c, body) => {
            let _ = write!(out, "while ({}) ", expr_string(c));
            print_stmt(out, body, depth);
        }
    }
}

fn exprs(es: &[Expr]) -> String {
    es.iter().map(expr_string).collect::<Vec<_>>().join(", ")
}

pub fn expr_string(e: &Expr) -> String {
    let mut s = String::new();
    print_expr(&mut s, e);
    s
}

fn print_expr(out: &mut String, e: &Expr) {
    let _ = match e {
        Expr::Int(n) => write!(out, "{n}"),
        Expr::Bool(b) => write!(out, "{b}"),
        Expr::Var(n) => write!(out, "{n}"),
        Expr::Paren(e) => write!(out, "({})", expr_string(e)),
        Expr::Assign(n, e) => write!(out, "{n} = {}", expr_string(e)),
        Expr::Call(n, args) => write!(out, "{n}({})", exprs(args)),
        Expr::Recv(e) => write!(out, "recv({})", expr_string(e)),
        Expr::Measure(b, vs) => write!(out, "measure({b}, {})", join(vs)),
        Expr::New(t) => write!(out, "new {t}()"),
        Expr::Binary(op, l, r) => {
            write!(out, "{} {} {}", expr_string(l), op.symbol(), expr_string(r))
        }
    };
}
