//! Typing of running configurations, used to check type preservation.

use std::fmt;

use thiserror::Error;

use super::{Configuration, Process, StackElem};
use crate::internal::{BlockElem, Expr, IValue, MethodContext, Stmt, StmtCtx, VarDecl};
use crate::memory::{Ref, Value};
use crate::name::RET_VAL;
use crate::types::TypeExpr;
use crate::typing::{check_expr, check_stmt};
use crate::varprops::VarProps;

/// The result type of one process; `Any` for a process that ended with a
/// runtime error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProcType {
    Type(TypeExpr),
    Any,
}

impl ProcType {
    /// Compatibility used for preservation: `Any` matches every type.
    pub fn compatible(&self, other: &ProcType) -> bool {
        match (self, other) {
            (ProcType::Any, _) | (_, ProcType::Any) => true,
            (ProcType::Type(a), ProcType::Type(b)) => a == b,
        }
    }
}

impl fmt::Display for ProcType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcType::Type(t) => write!(f, "{t}"),
            ProcType::Any => f.write_str("*"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("process {process}: {rule}: {message}")]
pub struct TcError {
    pub process: usize,
    pub rule: &'static str,
    pub message: String,
}

type R<T> = Result<T, (&'static str, String)>;

fn ret_type(vp: &VarProps, rule: &'static str) -> R<TypeExpr> {
    vp.type_of(RET_VAL).cloned().ok_or((rule, "no method frame".into()))
}

/// Drops everything above the nearest ∘M (inclusive) and pops the frame.
fn unwind(items: &mut Vec<StackElem>, vp: &mut VarProps, rule: &'static str) -> R<()> {
    let at = items.iter().rposition(|e| *e == StackElem::MethodEnd).ok_or((rule, "no ∘M below a return".to_string()))?;
    items.truncate(at);
    vp.pop_frame().ok_or((rule, "no frame for ∘M".to_string()))?;
    Ok(())
}

fn undefined(vp: &VarProps, x: &str, rule: &'static str) -> R<()> {
    match vp.var_ref(x) {
        None => Ok(()),
        Some(_) => Err((rule, format!("`{x}` is already defined"))),
    }
}

fn dummy(sigma: &TypeExpr) -> Expr {
    Expr::Value(IValue::new(Ref::None, Value::Bot, sigma.clone()))
}

/// `⊢_C (lms, vp, ts) : void → τ`.
pub fn type_process(ctx: &MethodContext, p: &Process) -> Result<ProcType, (&'static str, String)> {
    let mut vp = p.vp.clone();
    let mut items = p.ts.clone();
    let mut sigma = TypeExpr::Void;
    let te = |r: &'static str| move |e: crate::typing::RuleError| (r, e.to_string());
    while let Some(top) = items.pop() {
        let g = vp.context();
        sigma = match top {
            StackElem::Error(_) => {
                if !items.is_empty() {
                    return Err(("TC-Runtime", "runtime error above other stack elements".into()));
                }
                return Ok(ProcType::Any);
            }
            StackElem::Expr(e) => check_expr(ctx, &g, &e).map_err(te("TC-ExprClo"))?,
            StackElem::ExprCtx(c) => check_expr(ctx, &g, &c.fill(dummy(&sigma))).map_err(te("TC-ExprHole"))?,
            StackElem::StmtCtx(StmtCtx::Return) => {
                let rt = ret_type(&vp, "TC-RetHole")?;
                if rt != sigma {
                    return Err(("TC-RetHole", format!("returning {sigma} from a method returning {rt}")));
                }
                unwind(&mut items, &mut vp, "TC-RetHole")?;
                rt
            }
            StackElem::StmtCtx(c) => {
                check_stmt(ctx, &g, &c.fill(dummy(&sigma))).map_err(te("TC-StatHole"))?;
                TypeExpr::Void
            }
            StackElem::Term(BlockElem::Stmt(Stmt::Return(e))) => {
                let rt = ret_type(&vp, "TC-RetExpr")?;
                let t = check_expr(ctx, &g, &e).map_err(te("TC-RetExpr"))?;
                if t != rt {
                    return Err(("TC-RetExpr", format!("returning {t} from a method returning {rt}")));
                }
                unwind(&mut items, &mut vp, "TC-RetExpr")?;
                rt
            }
            StackElem::Term(BlockElem::Stmt(Stmt::ReturnVoid)) => {
                unwind(&mut items, &mut vp, "TC-RetVoid")?;
                TypeExpr::Void
            }
            StackElem::Term(BlockElem::Stmt(s)) => {
                check_stmt(ctx, &g, &s).map_err(te("TC-StatClo"))?;
                TypeExpr::Void
            }
            StackElem::Term(BlockElem::Decl(d)) => {
                declare(&mut vp, &mut items, d)?;
                TypeExpr::Void
            }
            StackElem::Seq(mut elems) => {
                let head = elems.remove(0);
                super::push_items(&mut items, elems);
                items.push(StackElem::Term(head));
                continue;
            }
            StackElem::BlockEnd => {
                if sigma != TypeExpr::Void {
                    return Err(("TC-BlockEnd", format!("block produced {sigma}")));
                }
                if vp.scope_depth() == 0 {
                    return Err(("TC-BlockEnd", "∘L without a scope level".into()));
                }
                vp.pop_scope();
                TypeExpr::Void
            }
            StackElem::MethodEnd => {
                let rt = ret_type(&vp, "TC-RetImpl")?;
                vp.pop_frame();
                rt
            }
        };
    }
    if !vp.is_empty() {
        return Err(("TC-Empty", "empty term stack with variable properties left".into()));
    }
    Ok(ProcType::Type(sigma))
}

fn declare(vp: &mut VarProps, items: &mut Vec<StackElem>, d: VarDecl) -> R<()> {
    match d {
        VarDecl::Typed(t, mut names) => {
            if names.len() > 1 {
                let first = names.remove(0);
                items.push(StackElem::Term(BlockElem::Decl(VarDecl::Typed(t.clone(), names))));
                items.push(StackElem::Term(BlockElem::Decl(VarDecl::Typed(t, vec![first]))));
                return Ok(());
            }
            let x = names.pop().ok_or(("TC-VarDeclMulti", "no names".to_string()))?;
            undefined(vp, &x, "TC-VarDeclOne")?;
            vp.update_type(&x, t);
        }
        VarDecl::WithEnds { ty, name, ends } => {
            let TypeExpr::Channel(inner) = &ty else {
                return Err(("TC-VarDeclChE", format!("{ty} is not a channel type")));
            };
            if name == ends.0 || name == ends.1 || ends.0 == ends.1 {
                return Err(("TC-VarDeclChE", "names are not mutually different".into()));
            }
            for x in [&name, &ends.0, &ends.1] {
                undefined(vp, x, "TC-VarDeclChE")?;
            }
            let et = TypeExpr::channel_end((**inner).clone());
            vp.update_type(&name, ty.clone());
            vp.update_type(&ends.0, et.clone());
            vp.update_type(&ends.1, et);
        }
        VarDecl::Alias { name, parts } => {
            undefined(vp, &name, "TC-VarDeclAlF")?;
            let mut ts = Vec::new();
            for q in &parts {
                match vp.type_of(q) {
                    Some(t) if t.is_quantum() => ts.push(t.clone()),
                    other => {
                        let shown = other.map_or("no type".to_string(), |t| t.to_string());
                        return Err(("TC-VarDeclAlF", format!("`{q}` has {shown}, not a quantum type")));
                    }
                }
            }
            let t = TypeExpr::tensor_of(ts).ok_or(("TC-VarDeclAlF", "no parts".to_string()))?;
            vp.update_type(&name, t);
        }
    }
    Ok(())
}

/// T-Config: the product of the process types.
pub fn type_configuration(ctx: &MethodContext, cfg: &Configuration) -> Result<Vec<ProcType>, TcError> {
    cfg.procs
        .iter()
        .enumerate()
        .map(|(i, p)| type_process(ctx, p).map_err(|(rule, message)| TcError { process: i, rule, message }))
        .collect()
}
