//! Static typing of method bodies and the `RetOk` predicate.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::internal::{is_tensor_call, BlockElem, Callee, Expr, MethodContext, Stmt, VarDecl};
use crate::name::{Name, RET_VAL};
use crate::parser::Span;
pub use crate::types::TypeExpr;

/// Variable typing context Γ.
pub type Gamma = BTreeMap<Name, TypeExpr>;

/// A failed typing rule, without location.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{rule}: {message}")]
pub struct RuleError {
    pub rule: &'static str,
    pub message: String,
}

fn fail<T>(rule: &'static str, message: impl Into<String>) -> Result<T, RuleError> {
    Err(RuleError { rule, message: message.into() })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{span}: {rule}: in method `{method}`: {message}")]
pub struct TypeError {
    pub method: Name,
    pub span: Span,
    pub rule: &'static str,
    pub message: String,
}

impl TypeError {
    /// `file:line:col: rule-name: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: {}: in method `{}`: {}",
            self.span.line, self.span.col, self.rule, self.method, self.message
        )
    }
}

/// `Γ, x:T`; undefined when `x` is already bound to a different type.
pub fn extend(g: &mut Gamma, x: &Name, t: TypeExpr, rule: &'static str) -> Result<(), RuleError> {
    match g.get(x) {
        Some(old) if *old != t => fail(
            rule,
            format!("`{x}` declared as {t} but already has type {old} in this scope"),
        ),
        _ => {
            g.insert(x.clone(), t);
            Ok(())
        }
    }
}

pub fn check_program(ctx: &MethodContext) -> Result<(), TypeError> {
    let mut names: Vec<&Name> = ctx.headers.keys().collect();
    names.sort_by_key(|n| ctx.headers[*n].span);
    names.into_iter().try_for_each(|n| check_method(ctx, n))
}

pub fn check_method(ctx: &MethodContext, name: &str) -> Result<(), TypeError> {
    let header = ctx.headers.get(name).expect("method in context");
    let wrap = |e: RuleError| TypeError {
        method: header.name.clone(),
        span: header.span,
        rule: e.rule,
        message: e.message,
    };
    let body = &ctx.bodies[name];
    if header.ret != TypeExpr::Void && !ret_ok(body) {
        return Err(wrap(RuleError {
            rule: "T-Method",
            message: format!(
                "RetOk not satisfied: body of a method returning {} may finish without `return`",
                header.ret
            ),
        }));
    }
    let mut g = Gamma::new();
    for (t, p) in &header.params {
        extend(&mut g, p, t.clone(), "T-Method").map_err(wrap)?;
    }
    g.insert(Name::new(RET_VAL), header.ret.clone());
    check_stmt(ctx, &g, body).map_err(wrap)
}

pub fn ret_ok(s: &Stmt) -> bool {
    match s {
        Stmt::Return(_) => true,
        Stmt::If(_, a, b) => ret_ok(a) && ret_ok(b),
        Stmt::Block(items) => ret_ok_seq(items),
        _ => false,
    }
}

pub fn ret_ok_seq(items: &[BlockElem]) -> bool {
    items.iter().any(|i| matches!(i, BlockElem::Stmt(s) if ret_ok(s)))
}

fn expect(ctx: &MethodContext, g: &Gamma, e: &Expr, t: &TypeExpr, rule: &'static str) -> Result<(), RuleError> {
    let found = check_expr(ctx, g, e)?;
    if found == *t {
        Ok(())
    } else {
        fail(rule, format!("expected {t}, found {found}"))
    }
}

pub fn check_stmt(ctx: &MethodContext, g: &Gamma, s: &Stmt) -> Result<(), RuleError> {
    match s {
        Stmt::Skip => Ok(()),
        Stmt::Promo(e) => check_expr(ctx, g, e).map(|_| ()),
        Stmt::Block(items) => check_seq(ctx, g.clone(), items),
        Stmt::If(c, a, b) => {
            expect(ctx, g, c, &TypeExpr::Bool, "T-If")?;
            check_stmt(ctx, g, a)?;
            check_stmt(ctx, g, b)
        }
        Stmt::While(c, body) => {
            expect(ctx, g, c, &TypeExpr::Bool, "T-While")?;
            check_stmt(ctx, g, body)
        }
        Stmt::ReturnVoid => match g.get(RET_VAL) {
            Some(TypeExpr::Void) => Ok(()),
            Some(t) => fail("T-ReturnVoid", format!("`return;` in a method returning {t}")),
            None => fail("T-ReturnVoid", "`return` outside a method"),
        },
        Stmt::Return(e) => {
            let t = check_expr(ctx, g, e)?;
            match g.get(RET_VAL) {
                Some(r) if *r == t => Ok(()),
                Some(r) => fail("T-ReturnExpr", format!("returning {t} from a method returning {r}")),
                None => fail("T-ReturnExpr", "`return` outside a method"),
            }
        }
        Stmt::Fork(m, args) => {
            if let Some(Callee::Quantum(_)) = ctx.callee(m) {
                return fail("T-Fork", format!("fork target `{m}` is a quantum operator, not a classical method"));
            }
            check_call(ctx, g, m, args, "T-Fork").map(|_| ())
        }
        Stmt::Send(c, v) => {
            let tc = check_expr(ctx, g, c)?;
            let tv = check_expr(ctx, g, v)?;
            match tc {
                TypeExpr::ChannelEnd(t) if *t == tv => Ok(()),
                TypeExpr::ChannelEnd(t) => fail("T-Send", format!("sending {tv} over a channel end of {t}")),
                other => fail("T-Send", format!("first argument of send has type {other}, not a channel end")),
            }
        }
    }
}

/// Checks a block's elements left to right; declarations extend Γ for the
/// remainder of the block.
pub fn check_seq(ctx: &MethodContext, mut g: Gamma, items: &[BlockElem]) -> Result<(), RuleError> {
    for item in items {
        match item {
            BlockElem::Decl(d) => declare(&mut g, d)?,
            BlockElem::Stmt(s) => check_stmt(ctx, &g, s)?,
        }
    }
    Ok(())
}

/// Extends Γ with a declaration (T-VarDecl, T-VarDeclChE, T-VarDeclAlF).
pub fn declare(g: &mut Gamma, d: &VarDecl) -> Result<(), RuleError> {
    match d {
        VarDecl::Typed(t, names) => {
            if matches!(t, TypeExpr::Void | TypeExpr::MeasurementBasis | TypeExpr::Ref | TypeExpr::RtErr) {
                return fail("T-VarDecl", format!("variables cannot have type {t}"));
            }
            names.iter().try_for_each(|n| extend(g, n, t.clone(), "T-VarDecl"))
        }
        VarDecl::WithEnds { ty, name, ends } => {
            let TypeExpr::Channel(inner) = ty else {
                return fail("T-VarDeclChE", format!("`withends` needs a channel type, found {ty}"));
            };
            if name == &ends.0 || name == &ends.1 || ends.0 == ends.1 {
                return fail("T-VarDeclChE", "channel and end names must be distinct");
            }
            extend(g, name, ty.clone(), "T-VarDeclChE")?;
            extend(g, &ends.0, TypeExpr::channel_end((**inner).clone()), "T-VarDeclChE")?;
            extend(g, &ends.1, TypeExpr::channel_end((**inner).clone()), "T-VarDeclChE")
        }
        VarDecl::Alias { name, parts } => {
            let mut ts = Vec::new();
            for p in parts {
                match g.get(p) {
                    Some(t) if t.is_quantum() => ts.push(t.clone()),
                    Some(t) => return fail("T-VarDeclAlF", format!("`{p}` has type {t}, not a quantum type")),
                    None => return fail("T-VarDeclAlF", format!("variable `{p}` is not declared")),
                }
            }
            let t = TypeExpr::tensor_of(ts).expect("grammar gives at least one part");
            extend(g, name, t, "T-VarDeclAlF")
        }
    }
}

/// Assignment compatibility: equal types, or quantum types of equal total
/// dimension (structure is checked at run time).
pub fn assignable(target: &TypeExpr, value: &TypeExpr) -> bool {
    target == value
        || (target.is_quantum() && value.is_quantum() && target.total_dim() == value.total_dim())
}

fn check_call(
    ctx: &MethodContext,
    g: &Gamma,
    m: &Name,
    args: &[Expr],
    rule: &'static str,
) -> Result<TypeExpr, RuleError> {
    if is_tensor_call(m) {
        return fail(rule, "the tensor operator ⊗ has no meaning between expressions; use it in types only");
    }
    let ts = args.iter().map(|a| check_expr(ctx, g, a)).collect::<Result<Vec<_>, _>>()?;
    let shown = || ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ");
    let params_match = |ps: &[TypeExpr]| ps.len() == ts.len() && ps.iter().zip(&ts).all(|(p, t)| p == t);
    match ctx.callee(m) {
        Some(Callee::User(mt)) if params_match(&mt.params) => Ok(mt.ret.clone()),
        Some(Callee::Quantum(op)) if params_match(&op.params) => Ok(TypeExpr::Void),
        Some(Callee::Classical(op)) => match op.result_type(&ts) {
            Some(t) => Ok(t),
            None => fail(rule, format!("operator `{m}` does not accept ({})", shown())),
        },
        Some(Callee::User(mt)) => {
            let want = mt.params.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ");
            fail(rule, format!("`{m}` expects ({want}), got ({})", shown()))
        }
        Some(Callee::Quantum(op)) => {
            let want = op.params.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ");
            fail(rule, format!("`{m}` expects ({want}), got ({})", shown()))
        }
        None => fail(rule, format!("unknown method `{m}`")),
    }
}

pub fn check_expr(ctx: &MethodContext, g: &Gamma, e: &Expr) -> Result<TypeExpr, RuleError> {
    match e {
        Expr::Var(x) => match g.get(x) {
            Some(t) => Ok(t.clone()),
            None => fail("T-Var", format!("variable `{x}` is not declared")),
        },
        Expr::Value(v) => Ok(v.ty.clone()),
        Expr::Bracket(e) => check_expr(ctx, g, e),
        Expr::New(t) => match t {
            TypeExpr::Qudit(_) | TypeExpr::Channel(_) => Ok(t.clone()),
            _ => fail("T-Alloc", format!("cannot allocate {t}; only a qudit type or a channel type")),
        },
        Expr::Assign(x, e) => {
            let Some(tx) = g.get(x) else {
                return fail("T-Assign", format!("variable `{x}` is not declared"));
            };
            let te = check_expr(ctx, g, e)?;
            if assignable(tx, &te) {
                Ok(te)
            } else {
                fail("T-Assign", format!("cannot assign {te} to `{x}` of type {tx}"))
            }
        }
        Expr::Call(m, args) => check_call(ctx, g, m, args, "T-MethodCall"),
        Expr::Measure(args) => {
            let Some((basis, rest)) = args.split_first() else {
                return fail("T-Measurement", "measure needs a basis");
            };
            let tb = check_expr(ctx, g, basis)?;
            if tb != TypeExpr::MeasurementBasis {
                return fail("T-Measurement", format!("first argument has type {tb}, not MeasurementBasis"));
            }
            if rest.is_empty() {
                return fail("T-Measurement", "measure needs at least one quantum argument");
            }
            for a in rest {
                let t = check_expr(ctx, g, a)?;
                if !t.is_quantum() {
                    return fail("T-Measurement", format!("measured argument has type {t}, not a quantum type"));
                }
            }
            Ok(TypeExpr::Int)
        }
        Expr::Recv(c) => match check_expr(ctx, g, c)? {
            TypeExpr::ChannelEnd(t) => Ok(*t),
            other => fail("T-Recv", format!("recv on {other}, not a channel end")),
        },
    }
}
