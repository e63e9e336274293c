//! Rule application for one process, and communication between two.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{exec_for, push_items, Configuration, Move, Process, RuntimeError, StackElem, StepInfo, Successor};
use crate::internal::{
    all_values, split_args, BlockElem, Callee, Expr, ExprCtx, IValue, MethodContext, Stmt, StmtCtx, VarDecl,
};
use crate::memory::{ChanEnd, LocalMemoryState, QList, RecList, Ref, Value};
use crate::name::{Name, RET_VAL};
use crate::quantum::{Exec, GlobalState};
use crate::types::TypeExpr;
use crate::varprops::{assign_q_alias, assign_q_system, composite_value, VarProps, VarTuple};

/// No rule applies to the chosen process.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("process {process}: no rule applies: {reason}")]
pub struct Stuck {
    pub process: usize,
    pub reason: String,
}

/// Result of stepping one process: the rule name, probabilistic successors
/// (one with probability 1 for deterministic rules), and a forked process.
#[derive(Clone, Debug)]
pub struct LocalStep {
    pub rule: &'static str,
    pub branches: Vec<(f64, GlobalState, Process)>,
    pub spawn: Option<Process>,
}

type StepResult = Result<LocalStep, String>;

fn det(rule: &'static str, gs: &GlobalState, p: Process) -> StepResult {
    Ok(LocalStep { rule, branches: vec![(1.0, gs.clone(), p)], spawn: None })
}

fn raise(rule: &'static str, gs: &GlobalState, mut p: Process, e: RuntimeError) -> StepResult {
    p.ts = vec![StackElem::Error(e)];
    det(rule, gs, p)
}

/// Applies the unique rule matching the top of `p`'s term stack.
pub fn step_process(ctx: &MethodContext, gs: &GlobalState, p: &Process, exec: Option<Exec>) -> StepResult {
    let mut p = p.clone();
    let top = p.ts.pop().ok_or("empty term stack")?;
    match top {
        StackElem::Seq(mut items) => {
            let head = items.remove(0);
            push_items(&mut p.ts, items);
            p.ts.push(StackElem::Term(head));
            det("OP-BlockHead", gs, p)
        }
        StackElem::Term(BlockElem::Decl(d)) => declare(gs, p, d),
        StackElem::Term(BlockElem::Stmt(s)) => statement(ctx, gs, p, s),
        StackElem::Expr(e) => expression(ctx, gs, p, e, exec),
        StackElem::BlockEnd => {
            if p.vp.scope_depth() == 0 {
                return Err("block end without an open scope".into());
            }
            p.vp.pop_scope();
            det("OP-BlockEnd", gs, p)
        }
        StackElem::MethodEnd => {
            p.vp.pop_frame().ok_or("method end without a frame")?;
            p.ts.push(StackElem::value(IValue::void()));
            det("OP-ReturnVoidImpl", gs, p)
        }
        StackElem::ExprCtx(_) | StackElem::StmtCtx(_) => Err("context on top of the stack".into()),
        StackElem::Error(_) => Err("process ended with a runtime error".into()),
    }
}

fn declare(gs: &GlobalState, mut p: Process, d: VarDecl) -> StepResult {
    if p.vp.scope_depth() == 0 {
        return Err("declaration outside a block".into());
    }
    match d {
        VarDecl::Typed(t, mut names) => {
            if names.len() > 1 {
                let first = names.remove(0);
                p.ts.push(StackElem::Term(BlockElem::Decl(VarDecl::Typed(t.clone(), names))));
                p.ts.push(StackElem::Term(BlockElem::Decl(VarDecl::Typed(t, vec![first]))));
                return det("OP-VarDeclMulti", gs, p);
            }
            let x = names.pop().ok_or("declaration without a name")?;
            p.vp.update_var(&x, Ref::None);
            p.vp.update_type(&x, t);
            det("OP-VarDecl", gs, p)
        }
        VarDecl::WithEnds { ty, name, ends } => {
            let TypeExpr::Channel(inner) = &ty else {
                return Err(format!("withends on non-channel type {ty}"));
            };
            let end_ty = TypeExpr::channel_end((**inner).clone());
            for x in [&name, &ends.0, &ends.1] {
                p.vp.update_var(x, Ref::None);
            }
            p.vp.update_ch(&name, ends.clone());
            p.vp.update_type(&name, ty.clone());
            p.vp.update_type(&ends.0, end_ty.clone());
            p.vp.update_type(&ends.1, end_ty);
            det("OP-VarDeclChE", gs, p)
        }
        VarDecl::Alias { name, parts } => {
            let mut proper = Vec::new();
            let mut types = Vec::new();
            for q in &parts {
                if p.vp.var_ref(q).is_none() {
                    return Err(format!("alias part `{q}` is not declared"));
                }
                types.push(p.vp.type_of(q).cloned().ok_or_else(|| format!("`{q}` has no type"))?);
                match p.vp.alias_subsyst(q) {
                    Some(sub) => proper.extend(sub.iter().cloned()),
                    None => proper.push(q.clone()),
                }
            }
            let comps: Vec<QList> = proper
                .iter()
                .map(|q| match p.vp.var_ref(q) {
                    Some(Ref::Quantum(l)) => l.clone(),
                    _ => RecList::Flat(vec![None]),
                })
                .collect();
            let whole = RecList::Nested(comps.clone());
            let ty = TypeExpr::tensor_of(types).ok_or("alias without parts")?;
            let gq = composite_value(&p.lms, &comps, &whole);
            p.lms.update(&Ref::Quantum(whole.clone()), gq);
            p.vp.update_var(&name, Ref::Quantum(whole));
            p.vp.update_qa(&name, proper);
            p.vp.update_type(&name, ty);
            det("OP-VarDeclAlF", gs, p)
        }
    }
}

/// Pops everything down to and including the nearest ∘M.
fn unwind_method(p: &mut Process) -> Result<(), String> {
    let at = p.ts.iter().rposition(|e| *e == StackElem::MethodEnd).ok_or("return outside a method")?;
    p.ts.truncate(at);
    p.vp.pop_frame().ok_or("return without a frame")?;
    Ok(())
}

fn statement(ctx: &MethodContext, gs: &GlobalState, mut p: Process, s: Stmt) -> StepResult {
    match s {
        Stmt::Skip => det("OP-Skip", gs, p),
        Stmt::Promo(e) => {
            if e.as_value().is_some() {
                return det("OP-PromoForget", gs, p);
            }
            p.ts.push(StackElem::StmtCtx(StmtCtx::Promo));
            p.ts.push(StackElem::Expr(e));
            det("OP-PromoExpr", gs, p)
        }
        Stmt::Block(items) => {
            if !p.vp.push_scope() {
                return Err("block outside a method".into());
            }
            p.ts.push(StackElem::BlockEnd);
            push_items(&mut p.ts, items);
            det("OP-Block", gs, p)
        }
        Stmt::If(c, a, b) => match c.as_value().map(|v| &v.val) {
            Some(Value::Bool(true)) => {
                p.ts.push(StackElem::Term(BlockElem::Stmt(*a)));
                det("OP-IfTrue", gs, p)
            }
            Some(Value::Bool(false)) => {
                p.ts.push(StackElem::Term(BlockElem::Stmt(*b)));
                det("OP-IfFalse", gs, p)
            }
            Some(Value::Bot) => raise("OP-IfUninit", gs, p, RuntimeError::UV),
            Some(v) => Err(format!("if condition is {v}, not a boolean")),
            None => {
                p.ts.push(StackElem::StmtCtx(StmtCtx::If(a, b)));
                p.ts.push(StackElem::Expr(c));
                det("OP-IfExpr", gs, p)
            }
        },
        Stmt::While(c, body) => {
            let again = Stmt::While(c.clone(), body.clone());
            let unrolled = Stmt::Block(vec![BlockElem::Stmt(*body), BlockElem::Stmt(again)]);
            let s = Stmt::If(c, Box::new(unrolled), Box::new(Stmt::Skip));
            p.ts.push(StackElem::Term(BlockElem::Stmt(s)));
            det("OP-While", gs, p)
        }
        Stmt::ReturnVoid => {
            unwind_method(&mut p)?;
            p.ts.push(StackElem::value(IValue::void()));
            det("OP-ReturnVoid", gs, p)
        }
        Stmt::Return(e) => match e {
            Expr::Value(v) => {
                unwind_method(&mut p)?;
                p.ts.push(StackElem::value(v));
                det("OP-ReturnValue", gs, p)
            }
            e => {
                p.ts.push(StackElem::StmtCtx(StmtCtx::Return));
                p.ts.push(StackElem::Expr(e));
                det("OP-ReturnExpr", gs, p)
            }
        },
        Stmt::Fork(m, args) => {
            if let Some((done, hole, rest)) = split_args(&args) {
                p.ts.push(StackElem::StmtCtx(StmtCtx::Fork { name: m, done, rest }));
                p.ts.push(StackElem::Expr(hole));
                return det("OP-ForkExpr", gs, p);
            }
            let vals = all_values(&args).expect("all values");
            if !matches!(ctx.callee(&m), Some(Callee::User(_) | Callee::Classical(_))) {
                return Err(format!("cannot fork `{m}`"));
            }
            let refs: Vec<Ref> = vals.iter().map(|v| v.r.clone()).collect();
            p.lms.unmap_nd_all(&refs);
            let mut child_lms = LocalMemoryState::new();
            let mut next = 0;
            let mut child_args = Vec::with_capacity(vals.len());
            for v in vals {
                let r = if v.r.is_none() {
                    next += 1;
                    Ref::Classical(next - 1)
                } else {
                    v.r.clone()
                };
                child_lms.map_transferred(&r, v.val.clone());
                child_args.push(Expr::Value(IValue::new(r, v.val, v.ty)));
            }
            let child = Process {
                lms: child_lms,
                vp: VarProps::empty(),
                ts: vec![StackElem::Expr(Expr::Call(m, child_args))],
            };
            Ok(LocalStep { rule: "OP-DoFork", branches: vec![(1.0, gs.clone(), p)], spawn: Some(child) })
        }
        Stmt::Send(c, e) => match (c.as_value(), e.as_value()) {
            (None, _) => {
                p.ts.push(StackElem::StmtCtx(StmtCtx::SendChan(e)));
                p.ts.push(StackElem::Expr(c));
                det("OP-SendExpr1", gs, p)
            }
            (Some(cv), None) => {
                p.ts.push(StackElem::StmtCtx(StmtCtx::SendMsg(cv.clone())));
                p.ts.push(StackElem::Expr(e));
                det("OP-SendExpr2", gs, p)
            }
            (Some(cv), Some(ev)) if cv.val.is_bot() || ev.val.is_bot() => {
                raise("OP-SendUninit", gs, p, RuntimeError::UV)
            }
            _ => Err("send is waiting for a receiver".into()),
        },
    }
}

fn expression(ctx: &MethodContext, gs: &GlobalState, mut p: Process, e: Expr, exec: Option<Exec>) -> StepResult {
    match e {
        Expr::Value(v) => match p.ts.pop() {
            Some(StackElem::ExprCtx(c)) => {
                p.ts.push(StackElem::Expr(c.fill(Expr::Value(v))));
                det("OP-SubstE", gs, p)
            }
            Some(StackElem::StmtCtx(c)) => {
                p.ts.push(StackElem::Term(BlockElem::Stmt(c.fill(Expr::Value(v)))));
                det("OP-SubstS", gs, p)
            }
            _ => Err("value without an enclosing context".into()),
        },
        Expr::Var(x) => {
            let r = p.vp.var_ref(&x).cloned().ok_or_else(|| format!("variable `{x}` is not in scope"))?;
            let ty = p.vp.type_of(&x).cloned().ok_or_else(|| format!("variable `{x}` has no type"))?;
            let val = p.lms.get(&r).unwrap_or(Value::Bot);
            p.ts.push(StackElem::value(IValue::new(r, val, ty)));
            det("OP-Var", gs, p)
        }
        Expr::Bracket(e) => {
            p.ts.push(StackElem::Expr(*e));
            det("OP-Bracket", gs, p)
        }
        Expr::New(t) => {
            let mut gs = gs.clone();
            match &t {
                TypeExpr::Qudit(d) => {
                    let l = gs.alloc_q(*d);
                    let r = Ref::Quantum(QList::of(&[l]));
                    let v = Value::GQuantum(vec![l]);
                    p.lms.update(&r, v.clone());
                    p.ts.push(StackElem::value(IValue::new(r, v, t.clone())));
                    det("OP-AllocQ", &gs, p)
                }
                TypeExpr::Channel(inner) => {
                    let l = gs.alloc_channel((**inner).clone());
                    let r = Ref::Channel(l);
                    let v = Value::GChannel(l);
                    p.lms.map_transferred(&r, v.clone());
                    p.ts.push(StackElem::value(IValue::new(r, v, t.clone())));
                    det("OP-AllocC", &gs, p)
                }
                other => Err(format!("cannot allocate {other}")),
            }
        }
        Expr::Assign(x, e) => match *e {
            Expr::Value(v) => assign(gs, p, x, v),
            e => {
                p.ts.push(StackElem::ExprCtx(ExprCtx::Assign(x)));
                p.ts.push(StackElem::Expr(e));
                det("OP-AssignExpr", gs, p)
            }
        },
        Expr::Call(m, args) => {
            if let Some((done, hole, rest)) = split_args(&args) {
                p.ts.push(StackElem::ExprCtx(ExprCtx::Call { name: m, done, rest }));
                p.ts.push(StackElem::Expr(hole));
                return det("OP-MethodCallExpr", gs, p);
            }
            let vals = all_values(&args).expect("all values");
            call(ctx, gs, p, &m, vals, exec)
        }
        Expr::Measure(args) => {
            if let Some((done, hole, rest)) = split_args(&args) {
                p.ts.push(StackElem::ExprCtx(ExprCtx::Measure { done, rest }));
                p.ts.push(StackElem::Expr(hole));
                return det("OP-MeasureExpr", gs, p);
            }
            let vals = all_values(&args).expect("all values");
            measure(ctx, gs, p, vals, exec)
        }
        Expr::Recv(c) => match c.as_value() {
            None => {
                p.ts.push(StackElem::ExprCtx(ExprCtx::Recv));
                p.ts.push(StackElem::Expr(*c));
                det("OP-RecvExpr", gs, p)
            }
            Some(v) if v.val.is_bot() => raise("OP-RecvUninit", gs, p, RuntimeError::UV),
            Some(_) => Err("recv is waiting for a sender".into()),
        },
    }
}

fn assign(gs: &GlobalState, mut p: Process, x: Name, v: IValue) -> StepResult {
    match &v.r {
        Ref::None if !v.val.is_bot() => {
            let nc = p.lms.fresh_classical();
            let r = Ref::Classical(nc);
            p.lms.update(&r, v.val.clone());
            p.vp.replace_var(&x, r.clone());
            p.ts.push(StackElem::value(IValue::new(r, v.val, v.ty)));
            det("OP-AssignNewValue", gs, p)
        }
        Ref::Quantum(q) => {
            let q = q.clone();
            if p.vp.alias_subsyst(&x).is_some() {
                let target = p.vp.type_of(&x).and_then(TypeExpr::dims);
                if target.is_none() || target != v.ty.dims() {
                    return raise("OP-AssignQAValueBad", gs, p, RuntimeError::ISQV);
                }
                assign_q_alias(&mut p.lms, &mut p.vp, &x, &q);
                p.ts.push(StackElem::value(v));
                det("OP-AssignQAValue", gs, p)
            } else {
                assign_q_system(&mut p.lms, &mut p.vp, &x, &q);
                p.ts.push(StackElem::value(v));
                det("OP-AssignQValue", gs, p)
            }
        }
        lr => {
            let lr = lr.clone();
            p.vp.replace_var(&x, lr.clone());
            if let Ref::Channel(i) = lr {
                if let Some((x0, x1)) = p.vp.chan_ends(&x).cloned() {
                    p.vp.replace_var(&x0, Ref::ChannelEnd(ChanEnd::E0, i));
                    p.vp.replace_var(&x1, Ref::ChannelEnd(ChanEnd::E1, i));
                }
            }
            p.ts.push(StackElem::value(v));
            det("OP-AssignValue", gs, p)
        }
    }
}

/// Flat global register lists of quantum arguments; `Err(UV)` when any is ⊥,
/// `Err(OQV)` when lists overlap or repeat a register.
fn quantum_targets(vals: &[IValue]) -> Result<Result<Vec<usize>, RuntimeError>, String> {
    if vals.iter().any(|v| v.val.is_bot()) {
        return Ok(Err(RuntimeError::UV));
    }
    let mut seen = BTreeSet::new();
    let mut qsi = Vec::new();
    let mut overlap = false;
    for v in vals {
        let Value::GQuantum(l) = &v.val else {
            return Err(format!("argument {v} is not a quantum value"));
        };
        for &i in l {
            overlap |= !seen.insert(i);
            qsi.push(i);
        }
    }
    Ok(if overlap { Err(RuntimeError::OQV) } else { Ok(qsi) })
}

fn call(
    ctx: &MethodContext,
    gs: &GlobalState,
    mut p: Process,
    m: &Name,
    vals: Vec<IValue>,
    exec: Option<Exec>,
) -> StepResult {
    match ctx.callee(m) {
        Some(Callee::User(_)) => {
            let header = &ctx.headers[m];
            if header.params.len() != vals.len() {
                return Err(format!("`{m}` called with {} arguments", vals.len()));
            }
            let mut tuple = VarTuple::default();
            let mut taken = BTreeSet::new();
            for ((ty, a), v) in header.params.iter().zip(vals) {
                let r = if v.r.is_none() {
                    let nc = (0..)
                        .find(|n| !p.lms.cl.contains_key(n) && !taken.contains(n))
                        .expect("unbounded");
                    taken.insert(nc);
                    Ref::Classical(nc)
                } else {
                    v.r.clone()
                };
                p.lms.update(&r, v.val);
                tuple.var.insert(a.clone(), r);
                tuple.ty.insert(a.clone(), ty.clone());
            }
            tuple.ty.insert(Name::new(RET_VAL), header.ret.clone());
            p.vp.push_frame(vec![tuple]);
            p.ts.push(StackElem::MethodEnd);
            p.ts.push(StackElem::Term(BlockElem::Stmt(ctx.bodies[m].clone())));
            det("OP-DoMethodCallCl", gs, p)
        }
        Some(Callee::Classical(op)) => {
            if vals.iter().any(|v| v.val.is_bot()) {
                return raise("OP-BuiltinUninit", gs, p, RuntimeError::UV);
            }
            let [a, b] = vals.as_slice() else {
                return Err(format!("`{m}` takes two arguments"));
            };
            let r = op.apply(&a.val, &b.val).ok_or_else(|| format!("`{m}` is undefined on {a}, {b}"))?;
            p.ts.push(StackElem::value(r));
            det("OP-DoMethodCallCl", gs, p)
        }
        Some(Callee::Quantum(op)) => match quantum_targets(&vals)? {
            Err(RuntimeError::UV) => raise("OP-MethodCallQUninit", gs, p, RuntimeError::UV),
            Err(e) => raise("OP-MethodCallQOverlap", gs, p, e),
            Ok(qsi) => {
                let exec = exec_for(exec, gs.order());
                let gs2 = gs.apply_operator_with(&op.operator, &qsi, exec).map_err(|e| e.to_string())?;
                p.ts.push(StackElem::value(IValue::void()));
                det("OP-DoMethodCallQ", &gs2, p)
            }
        },
        None => Err(format!("unknown method `{m}`")),
    }
}

fn measure(ctx: &MethodContext, gs: &GlobalState, p: Process, vals: Vec<IValue>, exec: Option<Exec>) -> StepResult {
    let (basis, rest) = vals.split_first().ok_or("measure without arguments")?;
    let Value::Basis(name) = &basis.val else {
        return Err(format!("{basis} is not a measurement basis"));
    };
    let basis = ctx.basis(name).ok_or_else(|| format!("unknown basis `{name}`"))?;
    match quantum_targets(rest)? {
        Err(RuntimeError::UV) => raise("OP-MeasureUninit", gs, p, RuntimeError::UV),
        Err(e) => raise("OP-MeasureOverlap", gs, p, e),
        Ok(qsi) => {
            let exec = exec_for(exec, gs.order());
            let outcomes = gs.measure_with(basis, &qsi, exec).map_err(|e| e.to_string())?;
            let branches = outcomes
                .into_iter()
                .map(|b| {
                    let mut q = p.clone();
                    q.ts.push(StackElem::value(IValue::int(b.outcome)));
                    (b.probability, b.state, q)
                })
                .collect();
            Ok(LocalStep { rule: "OP-DoMeasure", branches, spawn: None })
        }
    }
}

/// OP-SendRecv between the sender's `send(v_c1, v_e);` and the receiver's `recv(v_c2)`.
fn communicate(sender: &Process, receiver: &Process) -> Result<(Process, Process), String> {
    let mut s = sender.clone();
    let mut r = receiver.clone();
    let Some(StackElem::Term(BlockElem::Stmt(Stmt::Send(Expr::Value(c1), Expr::Value(e))))) = s.ts.pop() else {
        return Err("sender is not at a send".into());
    };
    let Some(StackElem::Expr(Expr::Recv(c2))) = r.ts.pop() else {
        return Err("receiver is not at a recv".into());
    };
    let Some(c2) = c2.as_value() else {
        return Err("receiver channel is not evaluated".into());
    };
    if c1.r.is_none() || c2.r.is_none() || c1.val != c2.val || c1.val.is_bot() {
        return Err("channel ends do not match".into());
    }
    s.lms.unmap_nd(&e.r);
    let received = if e.r.is_nonduplicable() {
        r.lms.map_transferred(&e.r, e.val.clone());
        IValue::new(e.r.clone(), e.val.clone(), e.ty.clone())
    } else {
        IValue::constant(e.val.clone(), e.ty.clone())
    };
    r.ts.push(StackElem::value(received));
    Ok((s, r))
}

/// Applies a move; returns the step description and the successors.
pub fn apply_move(
    ctx: &MethodContext,
    cfg: &Configuration,
    mv: Move,
    exec: Option<Exec>,
) -> Result<(StepInfo, Vec<Successor>), Stuck> {
    match mv {
        Move::Local(i) => {
            let st = step_process(ctx, &cfg.gs, &cfg.procs[i], exec)
                .map_err(|reason| Stuck { process: i, reason })?;
            let succ = st
                .branches
                .into_iter()
                .map(|(probability, gs, proc)| {
                    let mut procs = cfg.procs.clone();
                    procs[i] = proc;
                    procs.extend(st.spawn.clone());
                    Successor { probability, config: Configuration { gs, procs } }
                })
                .collect();
            Ok((StepInfo { process: i, partner: None, rule: st.rule }, succ))
        }
        Move::Comm { sender, receiver } => {
            let (s, r) = communicate(&cfg.procs[sender], &cfg.procs[receiver])
                .map_err(|reason| Stuck { process: sender, reason })?;
            let mut procs = cfg.procs.clone();
            procs[sender] = s;
            procs[receiver] = r;
            let config = Configuration { gs: cfg.gs.clone(), procs };
            Ok((
                StepInfo { process: sender, partner: Some(receiver), rule: "OP-SendRecv" },
                vec![Successor { probability: 1.0, config }],
            ))
        }
    }
}
