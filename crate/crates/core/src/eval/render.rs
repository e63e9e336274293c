//! Text and JSON views of configurations.

use serde_json::{json, Value as Json};

use super::{Configuration, Process, StackElem};
use crate::internal::{BlockElem, Expr, ExprCtx, IValue, Stmt, StmtCtx, VarDecl};
use crate::quantum::matrix_json;

fn join<T: AsRef<str>>(xs: &[T]) -> String {
    xs.iter().map(|x| x.as_ref()).collect::<Vec<_>>().join(", ")
}

fn args(done: &[IValue], hole: &str, rest: &[Expr]) -> String {
    let mut v: Vec<String> = done.iter().map(|d| d.to_string()).collect();
    v.push(hole.to_string());
    v.extend(rest.iter().map(expr_text));
    join(&v)
}

pub fn expr_text(e: &Expr) -> String {
    match e {
        Expr::Var(x) => x.to_string(),
        Expr::Value(v) => v.to_string(),
        Expr::Bracket(e) => format!("({})", expr_text(e)),
        Expr::New(t) => format!("new {t}()"),
        Expr::Assign(x, e) => format!("{x} = {}", expr_text(e)),
        Expr::Call(m, a) => format!("{m}({})", join(&a.iter().map(expr_text).collect::<Vec<_>>())),
        Expr::Measure(a) => format!("measure({})", join(&a.iter().map(expr_text).collect::<Vec<_>>())),
        Expr::Recv(c) => format!("recv({})", expr_text(c)),
    }
}

pub fn stmt_text(s: &Stmt) -> String {
    match s {
        Stmt::Skip => ";".into(),
        Stmt::Promo(e) => format!("{};", expr_text(e)),
        Stmt::Block(items) => {
            let inner: Vec<String> = items.iter().map(elem_string).collect();
            format!("{{ {} }}", inner.join(" "))
        }
        Stmt::If(c, a, b) => format!("if ({}) {} else {}", expr_text(c), stmt_text(a), stmt_text(b)),
        Stmt::While(c, b) => format!("while ({}) {}", expr_text(c), stmt_text(b)),
        Stmt::ReturnVoid => "return;".into(),
        Stmt::Return(e) => format!("return {};", expr_text(e)),
        Stmt::Fork(m, a) => format!("fork {m}({});", join(&a.iter().map(expr_text).collect::<Vec<_>>())),
        Stmt::Send(c, e) => format!("send({}, {});", expr_text(c), expr_text(e)),
    }
}

fn decl_text(d: &VarDecl) -> String {
    match d {
        VarDecl::Typed(t, names) => format!("{t} {};", join(names)),
        VarDecl::WithEnds { ty, name, ends } => format!("{ty} {name} withends [{}, {}];", ends.0, ends.1),
        VarDecl::Alias { name, parts } => format!("{name} aliasfor [{}];", join(parts)),
    }
}

pub fn elem_string(b: &BlockElem) -> String {
    match b {
        BlockElem::Decl(d) => decl_text(d),
        BlockElem::Stmt(s) => stmt_text(s),
    }
}

fn ectx_text(c: &ExprCtx) -> String {
    match c {
        ExprCtx::Assign(x) => format!("{x} = []"),
        ExprCtx::Call { name, done, rest } => format!("{name}({})", args(done, "[]", rest)),
        ExprCtx::Measure { done, rest } => format!("measure({})", args(done, "[]", rest)),
        ExprCtx::Recv => "recv([])".into(),
    }
}

fn sctx_text(c: &StmtCtx) -> String {
    match c {
        StmtCtx::Promo => "[];".into(),
        StmtCtx::If(a, b) => format!("if ([]) {} else {}", stmt_text(a), stmt_text(b)),
        StmtCtx::Fork { name, done, rest } => format!("fork {name}({});", args(done, "[]", rest)),
        StmtCtx::SendChan(e) => format!("send([], {});", expr_text(e)),
        StmtCtx::SendMsg(v) => format!("send({v}, []);"),
        StmtCtx::Return => "return [];".into(),
    }
}

fn stack_text(e: &StackElem) -> String {
    match e {
        StackElem::Seq(items) => items.iter().map(elem_string).collect::<Vec<_>>().join(" "),
        StackElem::Term(b) => elem_string(b),
        StackElem::Expr(e) => expr_text(e),
        StackElem::ExprCtx(c) => ectx_text(c),
        StackElem::StmtCtx(c) => sctx_text(c),
        StackElem::Error(e) => e.to_string(),
        StackElem::BlockEnd => "∘L".into(),
        StackElem::MethodEnd => "∘M".into(),
    }
}

/// Term stack, top first, separated by `:`; `ε` when empty.
fn ts_text(p: &Process) -> String {
    if p.ts.is_empty() {
        return "ε".into();
    }
    p.ts.iter().rev().map(stack_text).collect::<Vec<_>>().join(" : ")
}

fn lms_text(p: &Process) -> String {
    let mut parts = Vec::new();
    for (k, v) in &p.lms.cl {
        parts.push(format!("(Classical,{k})↦{v}"));
    }
    for (k, v) in &p.lms.q {
        parts.push(format!("{}↦{v}", crate::memory::Ref::Quantum(k.clone())));
    }
    for (k, v) in &p.lms.ch {
        parts.push(format!("(Channel,{k})↦{v}"));
    }
    for ((e, k), v) in &p.lms.che {
        parts.push(format!("(ChannelEnd{},{k})↦{v}", e.index()));
    }
    format!("{{{}}}", parts.join(", "))
}

fn vp_text(p: &Process) -> String {
    if p.vp.is_empty() {
        return "■".into();
    }
    let frames: Vec<String> = p
        .vp
        .frames()
        .iter()
        .rev()
        .map(|f| {
            let tuples: Vec<String> = f
                .iter()
                .rev()
                .map(|t| {
                    let vars: Vec<String> = t.var.iter().map(|(x, r)| format!("{x}↦{r}")).collect();
                    let tys: Vec<String> = t.ty.iter().map(|(x, ty)| format!("{x}:{ty}")).collect();
                    let mut s = format!("({{{}}}; {{{}}}", vars.join(", "), tys.join(", "));
                    if !t.ch.is_empty() {
                        let ch: Vec<String> =
                            t.ch.iter().map(|(x, (a, b))| format!("{x}↦[{a},{b}]")).collect();
                        s += &format!("; ch {{{}}}", ch.join(", "));
                    }
                    if !t.qa.is_empty() {
                        let qa: Vec<String> = t.qa.iter().map(|(x, ps)| format!("{x}↦[{}]", join(ps))).collect();
                        s += &format!("; qa {{{}}}", qa.join(", "));
                    }
                    s + ")"
                })
                .collect();
            format!("[{}]", tuples.join(" : "))
        })
        .collect();
    frames.join(" : ") + " : ■"
}

pub fn config_text(cfg: &Configuration) -> String {
    let mut out = format!("gs: {} register(s) dims {:?}, {} channel(s)\n", cfg.gs.dims.len(), cfg.gs.dims, cfg.gs.channels.len());
    for (i, p) in cfg.procs.iter().enumerate() {
        out += &format!("P{i}: lms {}\n    vp {}\n    ts {}\n", lms_text(p), vp_text(p), ts_text(p));
    }
    out
}

pub fn config_json(cfg: &Configuration, with_rho: bool) -> Json {
    let procs: Vec<Json> = cfg
        .procs
        .iter()
        .map(|p| json!({ "lms": lms_text(p), "vp": vp_text(p), "ts": ts_text(p) }))
        .collect();
    let mut gs = json!({ "dims": cfg.gs.dims, "channels": cfg.gs.channels });
    if with_rho {
        gs["rho"] = matrix_json(&cfg.gs.rho);
    }
    json!({ "gs": gs, "procs": procs })
}
