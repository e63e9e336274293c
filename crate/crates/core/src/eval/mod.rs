//! Small-step evaluator: configurations, term stacks, rule application,
//! scheduling and exploration of probabilistic branches.

mod render;
mod run;
mod step;
pub mod tc;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::internal::{BlockElem, Expr, ExprCtx, IValue, MethodContext, StmtCtx};
use crate::memory::{LocalMemoryState, Value};
use crate::name::Name;
use crate::quantum::{Exec, GlobalState};
use crate::varprops::VarProps;

pub use render::{config_json, config_text, elem_string, expr_text, stmt_text};
pub use run::{
    merge_leaves, run, BranchMode, Leaf, Policy, RunError, RunOptions, RunReport, SchedulerKind, TraceMode,
    TraceRecord,
};
pub use step::{apply_move, step_process, LocalStep, Stuck};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RuntimeError {
    /// Use of an uninitialized variable.
    UV,
    /// Overlapping quantum arguments.
    OQV,
    /// Assignment to an incompatibly structured quantum variable.
    ISQV,
}

impl fmt::Display for RuntimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuntimeError::UV => "UV",
            RuntimeError::OQV => "OQV",
            RuntimeError::ISQV => "ISQV",
        };
        f.write_str(s)
    }
}

/// Term stack element. A sequence always has at least two elements; a
/// single block element is stored as `Term`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StackElem {
    Seq(Vec<BlockElem>),
    Term(BlockElem),
    Expr(Expr),
    ExprCtx(ExprCtx),
    StmtCtx(StmtCtx),
    Error(RuntimeError),
    /// ∘L
    BlockEnd,
    /// ∘M
    MethodEnd,
}

impl StackElem {
    pub fn value(v: IValue) -> Self {
        StackElem::Expr(Expr::Value(v))
    }

    pub fn as_value(&self) -> Option<&IValue> {
        match self {
            StackElem::Expr(e) => e.as_value(),
            _ => None,
        }
    }
}

/// Pushes block elements so that the first one ends up on top.
pub(crate) fn push_items(ts: &mut Vec<StackElem>, mut items: Vec<BlockElem>) {
    match items.len() {
        0 => {}
        1 => ts.push(StackElem::Term(items.pop().expect("one item"))),
        _ => ts.push(StackElem::Seq(items)),
    }
}

/// A local process configuration `(lms, vp, ts)`; the top of the stack is
/// the last element of `ts`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Process {
    pub lms: LocalMemoryState,
    pub vp: VarProps,
    pub ts: Vec<StackElem>,
}

/// How a process looks to the scheduler.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    /// ε, a value, or a runtime error.
    Final(ProcResult),
    /// `send(v_c, v_e);` on top, both initialized; carries the channel value.
    Send(Value),
    /// `recv(v_c)` on top, initialized.
    Recv(Value),
    Ready,
}

/// What a process ended with.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProcResult {
    Empty,
    Value(IValue),
    Error(RuntimeError),
    /// Waiting on a channel when the run deadlocked.
    Blocked,
}

impl fmt::Display for ProcResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcResult::Empty => f.write_str("ε"),
            ProcResult::Value(v) => write!(f, "{}", v.val),
            ProcResult::Error(e) => write!(f, "{e}"),
            ProcResult::Blocked => f.write_str("blocked"),
        }
    }
}

impl Process {
    pub fn status(&self) -> Status {
        use crate::internal::Stmt;
        match self.ts.as_slice() {
            [] => Status::Final(ProcResult::Empty),
            [StackElem::Error(e)] => Status::Final(ProcResult::Error(*e)),
            [StackElem::Expr(Expr::Value(v))] => Status::Final(ProcResult::Value(v.clone())),
            [.., StackElem::Term(BlockElem::Stmt(Stmt::Send(Expr::Value(c), Expr::Value(e))))]
                if !c.val.is_bot() && !e.val.is_bot() && !c.r.is_none() =>
            {
                Status::Send(c.val.clone())
            }
            [.., StackElem::Expr(Expr::Recv(c))] => match c.as_value() {
                Some(c) if !c.val.is_bot() && !c.r.is_none() => Status::Recv(c.val.clone()),
                _ => Status::Ready,
            },
            _ => Status::Ready,
        }
    }

    /// True when the next step may touch the global state or other
    /// processes: allocation, quantum operators, measurement, fork and
    /// communication.
    pub fn next_step_visible(&self, ctx: &MethodContext) -> bool {
        use crate::internal::{all_values, Callee, Stmt};
        match self.ts.last() {
            Some(StackElem::Expr(Expr::New(_))) => true,
            Some(StackElem::Expr(Expr::Measure(args))) => all_values(args).is_some(),
            Some(StackElem::Expr(Expr::Call(m, args))) => {
                all_values(args).is_some() && matches!(ctx.callee(m), Some(Callee::Quantum(_)))
            }
            Some(StackElem::Term(BlockElem::Stmt(Stmt::Fork(_, args)))) => all_values(args).is_some(),
            _ => !matches!(self.status(), Status::Ready),
        }
    }
}

/// `[gs | P_1 || ... || P_n]`
#[derive(Clone, Debug)]
pub struct Configuration {
    pub gs: GlobalState,
    pub procs: Vec<Process>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StartError {
    #[error("program has no method `main`")]
    NoMain,
    #[error("`main` must not take parameters")]
    MainHasParameters,
}

impl Configuration {
    /// The start configuration: empty global state and one process running `main()`.
    pub fn start(ctx: &MethodContext) -> Result<Self, StartError> {
        let header = ctx.headers.get("main").ok_or(StartError::NoMain)?;
        if !header.params.is_empty() {
            return Err(StartError::MainHasParameters);
        }
        let main = Process {
            lms: LocalMemoryState::new(),
            vp: VarProps::empty(),
            ts: vec![StackElem::Expr(Expr::Call(Name::new("main"), Vec::new()))],
        };
        Ok(Configuration { gs: GlobalState::new(), procs: vec![main] })
    }

    pub fn statuses(&self) -> Vec<Status> {
        self.procs.iter().map(Process::status).collect()
    }

    pub fn is_terminal(&self) -> bool {
        self.procs.iter().all(|p| matches!(p.status(), Status::Final(_)))
    }

    /// Enabled moves ordered by the lowest process index involved, then by partner.
    pub fn moves(&self) -> Vec<Move> {
        let st = self.statuses();
        let mut out = Vec::new();
        for (i, s) in st.iter().enumerate() {
            match s {
                Status::Ready => out.push(Move::Local(i)),
                Status::Send(ch) => {
                    for (j, t) in st.iter().enumerate() {
                        if j != i && *t == Status::Recv(ch.clone()) {
                            out.push(Move::Comm { sender: i, receiver: j });
                        }
                    }
                }
                _ => {}
            }
        }
        out.sort_by_key(Move::order_key);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Move {
    Local(usize),
    Comm { sender: usize, receiver: usize },
}

impl Move {
    fn order_key(&self) -> (usize, usize) {
        match *self {
            Move::Local(i) => (i, i),
            Move::Comm { sender, receiver } => (sender.min(receiver), sender.max(receiver)),
        }
    }

    pub fn process(&self) -> usize {
        match *self {
            Move::Local(i) => i,
            Move::Comm { sender, .. } => sender,
        }
    }

    pub fn partner(&self) -> Option<usize> {
        match *self {
            Move::Local(_) => None,
            Move::Comm { receiver, .. } => Some(receiver),
        }
    }
}

/// One rule application on one path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepInfo {
    pub process: usize,
    pub partner: Option<usize>,
    pub rule: &'static str,
}

/// A probabilistic successor of a configuration.
#[derive(Clone, Debug)]
pub struct Successor {
    pub probability: f64,
    pub config: Configuration,
}

/// Kernel strategy for a configuration of the given order.
pub(crate) fn exec_for(exec: Option<Exec>, order: usize) -> Exec {
    exec.unwrap_or_else(|| Exec::auto(order))
}
