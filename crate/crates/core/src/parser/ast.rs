//! Concrete syntax tree.

use crate::name::Name;
use crate::parser::lexer::Span;
use crate::types::TypeExpr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub methods: Vec<MethodDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDecl {
    pub ret: TypeExpr,
    pub name: Name,
    pub params: Vec<(TypeExpr, Name)>,
    pub body: Block,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub items: Vec<SeqItem>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeqItem {
    Decl(VarDeclaration),
    Code(Stmt),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarDeclaration {
    /// `T a, b;`
    Typed(TypeExpr, Vec<Name>),
    /// `channel[T] c withends [c0, c1];`
    WithEnds { ty: TypeExpr, name: Name, ends: (Name, Name) },
    /// `r aliasfor [p, q];`
    Alias { name: Name, parts: Vec<Name> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Skip,
    /// A promotable expression used as a statement.
    Expr(Expr),
    Fork(Name, Vec<Expr>),
    Send(Expr, Expr),
    Return(Option<Expr>),
    Block(Block),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    While(Expr, Box<Stmt>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Tensor,
}

impl BinOp {
    pub const ALL: [BinOp; 10] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Tensor,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Tensor => "⊗",
        }
    }

    pub fn from_symbol(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.symbol() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(Name),
    Paren(Box<Expr>),
    Assign(Name, Box<Expr>),
    Call(Name, Vec<Expr>),
    Recv(Box<Expr>),
    Measure(Name, Vec<Name>),
    New(TypeExpr),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Expressions allowed in statement position.
    pub fn is_promotable(&self) -> bool {
        matches!(
            self,
            Expr::Assign(..) | Expr::Call(..) | Expr::Recv(_) | Expr::Measure(..) | Expr::New(_)
        )
    }
}
