//! Internal syntax, lowering from the concrete tree, and the method context.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::memory::{Ref, Value};
use crate::name::Name;
use crate::parser::ast::{self, BinOp, SeqItem, SourceProgram};
use crate::parser::Span;
use crate::quantum::{gates, Basis, Matrix, Observable, Operator};
use crate::types::TypeExpr;

/// The triplet `(ref, val, T)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IValue {
    pub r: Ref,
    pub val: Value,
    pub ty: TypeExpr,
}

impl IValue {
    pub fn new(r: Ref, val: Value, ty: TypeExpr) -> Self {
        IValue { r, val, ty }
    }

    pub fn constant(val: Value, ty: TypeExpr) -> Self {
        IValue { r: Ref::None, val, ty }
    }

    pub fn void() -> Self {
        Self::constant(Value::Bot, TypeExpr::Void)
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Value::Int(n), TypeExpr::Int)
    }

    pub fn boolean(b: bool) -> Self {
        Self::constant(Value::Bool(b), TypeExpr::Bool)
    }
}

impl fmt::Display for IValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.r, self.val, self.ty)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(Name),
    Value(IValue),
    Bracket(Box<Expr>),
    New(TypeExpr),
    Assign(Name, Box<Expr>),
    Call(Name, Vec<Expr>),
    Measure(Vec<Expr>),
    Recv(Box<Expr>),
}

impl Expr {
    pub fn as_value(&self) -> Option<&IValue> {
        match self {
            Expr::Value(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum VarDecl {
    Typed(TypeExpr, Vec<Name>),
    WithEnds { ty: TypeExpr, name: Name, ends: (Name, Name) },
    Alias { name: Name, parts: Vec<Name> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Skip,
    Promo(Expr),
    Block(Vec<BlockElem>),
    If(Expr, Box<Stmt>, Box<Stmt>),
    While(Expr, Box<Stmt>),
    ReturnVoid,
    Return(Expr),
    Fork(Name, Vec<Expr>),
    Send(Expr, Expr),
}

/// A block element: declaration or statement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BlockElem {
    Decl(VarDecl),
    Stmt(Stmt),
}

/// Expression contexts with one hole.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprCtx {
    Assign(Name),
    Call { name: Name, done: Vec<IValue>, rest: Vec<Expr> },
    Measure { done: Vec<IValue>, rest: Vec<Expr> },
    Recv,
}

/// Statement contexts with one hole.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StmtCtx {
    Promo,
    If(Box<Stmt>, Box<Stmt>),
    Fork { name: Name, done: Vec<IValue>, rest: Vec<Expr> },
    SendChan(Expr),
    SendMsg(IValue),
    Return,
}

fn with_hole(done: &[IValue], hole: Expr, rest: &[Expr]) -> Vec<Expr> {
    done.iter()
        .cloned()
        .map(Expr::Value)
        .chain(std::iter::once(hole))
        .chain(rest.iter().cloned())
        .collect()
}

impl ExprCtx {
    pub fn fill(&self, e: Expr) -> Expr {
        match self {
            ExprCtx::Assign(x) => Expr::Assign(x.clone(), Box::new(e)),
            ExprCtx::Call { name, done, rest } => Expr::Call(name.clone(), with_hole(done, e, rest)),
            ExprCtx::Measure { done, rest } => Expr::Measure(with_hole(done, e, rest)),
            ExprCtx::Recv => Expr::Recv(Box::new(e)),
        }
    }
}

impl StmtCtx {
    pub fn fill(&self, e: Expr) -> Stmt {
        match self {
            StmtCtx::Promo => Stmt::Promo(e),
            StmtCtx::If(a, b) => Stmt::If(e, a.clone(), b.clone()),
            StmtCtx::Fork { name, done, rest } => Stmt::Fork(name.clone(), with_hole(done, e, rest)),
            StmtCtx::SendChan(v) => Stmt::Send(e, v.clone()),
            StmtCtx::SendMsg(c) => Stmt::Send(Expr::Value(c.clone()), e),
            StmtCtx::Return => Stmt::Return(e),
        }
    }
}

/// Splits arguments at the first non-value: `(values, first, rest)`.
pub fn split_args(args: &[Expr]) -> Option<(Vec<IValue>, Expr, Vec<Expr>)> {
    let i = args.iter().position(|a| a.as_value().is_none())?;
    let done = args[..i].iter().map(|a| a.as_value().cloned().expect("prefix values")).collect();
    Some((done, args[i].clone(), args[i + 1..].to_vec()))
}

pub fn all_values(args: &[Expr]) -> Option<Vec<IValue>> {
    args.iter().map(|a| a.as_value().cloned()).collect()
}

/// Builtin classical primitives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClassicalOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl ClassicalOp {
    pub fn from_name(s: &str) -> Option<Self> {
        use ClassicalOp::*;
        Some(match s {
            "+" => Add,
            "-" => Sub,
            "*" => Mul,
            "==" => Eq,
            "!=" => Ne,
            "<" => Lt,
            "<=" => Le,
            ">" => Gt,
            ">=" => Ge,
            _ => return None,
        })
    }

    /// Result type for the given argument types, if the primitive accepts them.
    pub fn result_type(self, args: &[TypeExpr]) -> Option<TypeExpr> {
        use ClassicalOp::*;
        match (self, args) {
            (Add | Sub | Mul, [TypeExpr::Int, TypeExpr::Int]) => Some(TypeExpr::Int),
            (Lt | Le | Gt | Ge, [TypeExpr::Int, TypeExpr::Int]) => Some(TypeExpr::Bool),
            (Eq | Ne, [TypeExpr::Int, TypeExpr::Int] | [TypeExpr::Bool, TypeExpr::Bool]) => {
                Some(TypeExpr::Bool)
            }
            _ => None,
        }
    }

    pub fn apply(self, a: &Value, b: &Value) -> Option<IValue> {
        use ClassicalOp::*;
        let v = match (self, a, b) {
            (Add, Value::Int(x), Value::Int(y)) => IValue::int(x.wrapping_add(*y)),
            (Sub, Value::Int(x), Value::Int(y)) => IValue::int(x.wrapping_sub(*y)),
            (Mul, Value::Int(x), Value::Int(y)) => IValue::int(x.wrapping_mul(*y)),
            (Lt, Value::Int(x), Value::Int(y)) => IValue::boolean(x < y),
            (Le, Value::Int(x), Value::Int(y)) => IValue::boolean(x <= y),
            (Gt, Value::Int(x), Value::Int(y)) => IValue::boolean(x > y),
            (Ge, Value::Int(x), Value::Int(y)) => IValue::boolean(x >= y),
            (Eq, Value::Int(_), Value::Int(_)) | (Eq, Value::Bool(_), Value::Bool(_)) => {
                IValue::boolean(a == b)
            }
            (Ne, Value::Int(_), Value::Int(_)) | (Ne, Value::Bool(_), Value::Bool(_)) => {
                IValue::boolean(a != b)
            }
            _ => return None,
        };
        Some(v)
    }
}

/// A named quantum operator with its parameter types.
#[derive(Clone, Debug)]
pub struct QuantumOp {
    pub operator: Operator,
    pub params: Vec<TypeExpr>,
}

/// Quantum operators and measurement bases available to every program.
#[derive(Clone, Debug)]
pub struct Builtins {
    pub operators: BTreeMap<Name, Arc<QuantumOp>>,
    pub bases: BTreeMap<Name, Arc<Basis>>,
}

impl Default for Builtins {
    fn default() -> Self {
        let mut b = Builtins { operators: BTreeMap::new(), bases: BTreeMap::new() };
        let one = [
            ("H", gates::h()),
            ("X", gates::x()),
            ("Y", gates::y()),
            ("Z", gates::z()),
            ("I2", gates::i2()),
            ("opB0", gates::i2()),
            ("opB1", gates::x()),
            ("opB2", gates::z()),
            ("opB3", gates::x() * gates::z()),
        ];
        for (n, m) in one {
            b.add_unitary(n, m, vec![TypeExpr::qbit()]);
        }
        b.add_unitary("CNOT", gates::cnot(), vec![TypeExpr::qbit(), TypeExpr::qbit()]);
        b.bases.insert(Name::new("StdBasis"), Arc::new(Basis::Computational));
        b.bases.insert(Name::new("BellBasis"), Arc::new(Basis::Fixed(Observable::bell())));
        b
    }
}

impl Builtins {
    /// Registers a unitary acting on arguments of the given quantum types.
    pub fn add_unitary(&mut self, name: &str, m: Matrix, params: Vec<TypeExpr>) {
        let dims = params.iter().flat_map(|t| t.dims().unwrap_or_default()).collect();
        let op = QuantumOp { operator: Operator::unitary(m, dims), params };
        self.operators.insert(Name::new(name), Arc::new(op));
    }

    pub fn add_operator(&mut self, name: &str, operator: Operator, params: Vec<TypeExpr>) {
        self.operators.insert(Name::new(name), Arc::new(QuantumOp { operator, params }));
    }

    pub fn add_basis(&mut self, name: &str, basis: Basis) {
        self.bases.insert(Name::new(name), Arc::new(basis));
    }

    pub fn is_reserved(&self, name: &str) -> bool {
        self.operators.contains_key(name) || self.bases.contains_key(name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodType {
    pub params: Vec<TypeExpr>,
    pub ret: TypeExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodHeader {
    pub ret: TypeExpr,
    pub name: Name,
    pub params: Vec<(TypeExpr, Name)>,
    pub span: Span,
}

pub fn method_type_of(h: &MethodHeader) -> MethodType {
    MethodType { params: h.params.iter().map(|(t, _)| t.clone()).collect(), ret: h.ret.clone() }
}

/// What a call target resolves to.
#[derive(Clone, Debug)]
pub enum Callee<'a> {
    User(&'a MethodType),
    Quantum(&'a QuantumOp),
    Classical(ClassicalOp),
}

/// `M_T`, `M_H`, `M_B` for user methods, plus the builtin registry.
#[derive(Clone, Debug)]
pub struct MethodContext {
    pub types: BTreeMap<Name, MethodType>,
    pub headers: BTreeMap<Name, MethodHeader>,
    pub bodies: BTreeMap<Name, Stmt>,
    pub builtins: Arc<Builtins>,
}

impl MethodContext {
    pub fn callee(&self, name: &str) -> Option<Callee<'_>> {
        if let Some(t) = self.types.get(name) {
            return Some(Callee::User(t));
        }
        if let Some(op) = self.builtins.operators.get(name) {
            return Some(Callee::Quantum(op));
        }
        ClassicalOp::from_name(name).map(Callee::Classical)
    }

    pub fn basis(&self, name: &str) -> Option<&Arc<Basis>> {
        self.builtins.bases.get(name)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LowerError {
    #[error("{1}: method `{0}` is declared more than once")]
    DuplicateMethod(Name, Span),
    #[error("{1}: method `{0}` shadows a builtin")]
    ReservedName(Name, Span),
}

pub fn lower(program: &SourceProgram) -> Result<MethodContext, LowerError> {
    lower_with(program, Builtins::default())
}

pub fn lower_with(program: &SourceProgram, builtins: Builtins) -> Result<MethodContext, LowerError> {
    let mut ctx = MethodContext {
        types: BTreeMap::new(),
        headers: BTreeMap::new(),
        bodies: BTreeMap::new(),
        builtins: Arc::new(builtins),
    };
    for m in &program.methods {
        if ctx.builtins.is_reserved(&m.name) {
            return Err(LowerError::ReservedName(m.name.clone(), m.span));
        }
        if ctx.headers.contains_key(&m.name) {
            return Err(LowerError::DuplicateMethod(m.name.clone(), m.span));
        }
        let header = MethodHeader {
            ret: m.ret.clone(),
            name: m.name.clone(),
            params: m.params.clone(),
            span: m.span,
        };
        ctx.types.insert(m.name.clone(), method_type_of(&header));
        ctx.headers.insert(m.name.clone(), header);
        let body = Stmt::Block(lower_block(&m.body, &ctx.builtins));
        ctx.bodies.insert(m.name.clone(), body);
    }
    Ok(ctx)
}

fn lower_block(b: &ast::Block, bi: &Builtins) -> Vec<BlockElem> {
    b.items
        .iter()
        .map(|item| match item {
            SeqItem::Decl(d) => BlockElem::Decl(lower_decl(d)),
            SeqItem::Code(s) => BlockElem::Stmt(lower_stmt(s, bi)),
        })
        .collect()
}

fn lower_decl(d: &ast::VarDeclaration) -> VarDecl {
    match d {
        ast::VarDeclaration::Typed(t, ns) => VarDecl::Typed(t.clone(), ns.clone()),
        ast::VarDeclaration::WithEnds { ty, name, ends } => {
            VarDecl::WithEnds { ty: ty.clone(), name: name.clone(), ends: ends.clone() }
        }
        ast::VarDeclaration::Alias { name, parts } => {
            VarDecl::Alias { name: name.clone(), parts: parts.clone() }
        }
    }
}

pub fn lower_stmt(s: &ast::Stmt, bi: &Builtins) -> Stmt {
    let e = |x: &ast::Expr| lower_expr(x, bi);
    match s {
        ast::Stmt::Skip => Stmt::Skip,
        ast::Stmt::Expr(x) => Stmt::Promo(e(x)),
        ast::Stmt::Fork(n, args) => Stmt::Fork(n.clone(), args.iter().map(e).collect()),
        ast::Stmt::Send(c, v) => Stmt::Send(e(c), e(v)),
        ast::Stmt::Return(None) => Stmt::ReturnVoid,
        ast::Stmt::Return(Some(x)) => Stmt::Return(e(x)),
        ast::Stmt::Block(b) => Stmt::Block(lower_block(b, bi)),
        ast::Stmt::If(c, t, f) => Stmt::If(
            e(c),
            Box::new(lower_stmt(t, bi)),
            Box::new(f.as_ref().map_or(Stmt::Skip, |f| lower_stmt(f, bi))),
        ),
        ast::Stmt::While(c, body) => Stmt::While(e(c), Box::new(lower_stmt(body, bi))),
    }
}

pub fn lower_expr(x: &ast::Expr, bi: &Builtins) -> Expr {
    let e = |x: &ast::Expr| lower_expr(x, bi);
    match x {
        ast::Expr::Int(n) => Expr::Value(IValue::int(*n)),
        ast::Expr::Bool(b) => Expr::Value(IValue::boolean(*b)),
        ast::Expr::Var(n) => Expr::Var(n.clone()),
        ast::Expr::Paren(x) => Expr::Bracket(Box::new(e(x))),
        ast::Expr::Assign(n, x) => Expr::Assign(n.clone(), Box::new(e(x))),
        ast::Expr::Call(n, args) => Expr::Call(n.clone(), args.iter().map(e).collect()),
        ast::Expr::Recv(x) => Expr::Recv(Box::new(e(x))),
        ast::Expr::Measure(b, vs) => {
            let basis = if bi.bases.contains_key(b) {
                Expr::Value(IValue::constant(Value::Basis(b.clone()), TypeExpr::MeasurementBasis))
            } else {
                Expr::Var(b.clone())
            };
            Expr::Measure(std::iter::once(basis).chain(vs.iter().cloned().map(Expr::Var)).collect())
        }
        ast::Expr::New(t) => Expr::New(t.clone()),
        ast::Expr::Binary(op, l, r) => Expr::Call(Name::new(op.symbol()), vec![e(l), e(r)]),
    }
}

pub fn is_tensor_call(name: &str) -> bool {
    name == BinOp::Tensor.symbol()
}
