use std::fmt;

use thiserror::Error;

use crate::name::Name;
use crate::parser::ast::*;
use crate::parser::lexer::{qudit_dimension, Span, Token, TokenKind, TENSOR};
use crate::types::TypeExpr;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let found = if self.found.is_empty() { "end of input".to_string() } else { format!("`{}`", self.found) };
        write!(f, "{}: parse error: expected ", self.span)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        write!(f, ", found {found}")
    }
}

const TYPE_START: &[&str] = &["int", "bool", "qbit", "qtrit", "channel", "channelEnd"];

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

pub fn parse(tokens: &[Token]) -> PResult<SourceProgram> {
    let mut p = Parser { toks: tokens, pos: 0 };
    let mut methods = Vec::new();
    while p.peek().kind != TokenKind::Eof {
        methods.push(p.method()?);
    }
    if methods.is_empty() {
        return Err(p.error(&["method declaration"]));
    }
    Ok(SourceProgram { methods })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError {
            span: t.span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.text.clone(),
        }
    }

    fn at_sym(&self, s: &str) -> bool {
        self.peek().is(TokenKind::Symbol, s)
    }

    fn at_kw(&self, s: &str) -> bool {
        self.peek().is(TokenKind::Keyword, s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.at_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{s}`")]))
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        if self.peek().kind == TokenKind::Identifier {
            Ok(Name::from(self.bump().text))
        } else {
            Err(self.error(&["identifier"]))
        }
    }

    fn at_type_start(&self) -> bool {
        let t = self.peek();
        t.kind == TokenKind::Keyword
            && (TYPE_START.contains(&t.text.as_str()) || qudit_dimension(&t.text).is_some())
    }

    fn method(&mut self) -> PResult<MethodDecl> {
        let span = self.peek().span;
        if !(self.at_type_start() || self.at_kw("void")) {
            return Err(self.error(&["method declaration"]));
        }
        let ret = self.ty(true)?;
        let name = self.ident()?;
        self.sym("(")?;
        let mut params: Vec<(TypeExpr, Name)> = Vec::new();
        if !self.at_sym(")") {
            loop {
                let t = self.ty(false)?;
                let at = self.peek().clone();
                let n = self.ident()?;
                if params.iter().any(|(_, m)| *m == n) {
                    return Err(ParseError {
                        span: at.span,
                        expected: vec!["distinct parameter name".into()],
                        found: at.text,
                    });
                }
                params.push((t, n));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.sym(")")?;
        let body = self.block()?;
        Ok(MethodDecl { ret, name, params, body, span })
    }

    fn ty(&mut self, allow_void: bool) -> PResult<TypeExpr> {
        let t = self.peek().clone();
        if t.kind == TokenKind::Keyword {
            match t.text.as_str() {
                "void" if allow_void => {
                    self.pos += 1;
                    return Ok(TypeExpr::Void);
                }
                "int" => {
                    self.pos += 1;
                    return Ok(TypeExpr::Int);
                }
                "bool" => {
                    self.pos += 1;
                    return Ok(TypeExpr::Bool);
                }
                "channel" | "channelEnd" => {
                    self.pos += 1;
                    self.sym("[")?;
                    let inner = self.ty(false)?;
                    self.sym("]")?;
                    return Ok(if t.text == "channel" {
                        TypeExpr::channel(inner)
                    } else {
                        TypeExpr::channel_end(inner)
                    });
                }
                _ => {}
            }
        }
        self.q_type()
    }

    fn q_basic(&mut self) -> PResult<TypeExpr> {
        let t = self.peek();
        if t.kind == TokenKind::Keyword {
            let d = match t.text.as_str() {
                "qbit" => Some(2),
                "qtrit" => Some(3),
                s => qudit_dimension(s).filter(|&d| d >= 2),
            };
            if let Some(d) = d {
                self.pos += 1;
                return Ok(TypeExpr::Qudit(d));
            }
        }
        Err(self.error(&["type"]))
    }

    fn q_type(&mut self) -> PResult<TypeExpr> {
        let head = self.q_basic()?;
        if self.peek().is(TokenKind::Operator, TENSOR) {
            self.pos += 1;
            let tail = self.q_type()?;
            Ok(TypeExpr::tensor(head, tail))
        } else {
            Ok(head)
        }
    }

    fn block(&mut self) -> PResult<Block> {
        self.sym("{")?;
        let mut items = Vec::new();
        while !self.at_sym("}") {
            if self.peek().kind == TokenKind::Eof {
                return Err(self.error(&["`}`", "statement"]));
            }
            items.push(self.seq_item()?);
        }
        self.pos += 1;
        Ok(Block { items })
    }

    fn seq_item(&mut self) -> PResult<SeqItem> {
        if self.at_type_start() {
            let ty = self.ty(false)?;
            let name = self.ident()?;
            if self.at_kw("withends") {
                self.pos += 1;
                self.sym("[")?;
                let e0 = self.ident()?;
                self.sym(",")?;
                let e1 = self.ident()?;
                self.sym("]")?;
                self.sym(";")?;
                return Ok(SeqItem::Decl(VarDeclaration::WithEnds { ty, name, ends: (e0, e1) }));
            }
            let mut names = vec![name];
            while self.eat_sym(",") {
                names.push(self.ident()?);
            }
            self.sym(";")?;
            return Ok(SeqItem::Decl(VarDeclaration::Typed(ty, names)));
        }
        if self.peek().kind == TokenKind::Identifier && self.peek_at(1).is(TokenKind::Keyword, "aliasfor") {
            let name = self.ident()?;
            self.pos += 1;
            self.sym("[")?;
            let mut parts = vec![self.ident()?];
            while self.eat_sym(",") {
                parts.push(self.ident()?);
            }
            self.sym("]")?;
            self.sym(";")?;
            return Ok(SeqItem::Decl(VarDeclaration::Alias { name, parts }));
        }
        Ok(SeqItem::Code(self.code()?))
    }

    fn code(&mut self) -> PResult<Stmt> {
        let t = self.peek().clone();
        match (t.kind, t.text.as_str()) {
            (TokenKind::Symbol, ";") => {
                self.pos += 1;
                Ok(Stmt::Skip)
            }
            (TokenKind::Symbol, "{") => Ok(Stmt::Block(self.block()?)),
            (TokenKind::Keyword, "if") => {
                self.pos += 1;
                self.sym("(")?;
                let c = self.expr()?;
                self.sym(")")?;
                let then = self.code()?;
                let els = if self.at_kw("else") {
                    self.pos += 1;
                    Some(Box::new(self.code()?))
                } else {
                    None
                };
                Ok(Stmt::If(c, Box::new(then), els))
            }
            (TokenKind::Keyword, "while") => {
                self.pos += 1;
                self.sym("(")?;
                let c = self.expr()?;
                self.sym(")")?;
                Ok(Stmt::While(c, Box::new(self.code()?)))
            }
            (TokenKind::Keyword, "fork") => {
                self.pos += 1;
                let name = self.ident()?;
                let args = self.args()?;
                self.sym(";")?;
                Ok(Stmt::Fork(name, args))
            }
            (TokenKind::Keyword, "return") => {
                self.pos += 1;
                if self.eat_sym(";") {
                    return Ok(Stmt::Return(None));
                }
                let e = self.expr()?;
                self.sym(";")?;
                Ok(Stmt::Return(Some(e)))
            }
            (TokenKind::Keyword, "send") => {
                self.pos += 1;
                self.sym("(")?;
                let c = self.expr()?;
                self.sym(",")?;
                let v = self.expr()?;
                self.sym(")")?;
                self.sym(";")?;
                Ok(Stmt::Send(c, v))
            }
            _ => {
                let e = match self.p_expr()? {
                    Some(e) => e,
                    None => return Err(self.error(&["statement"])),
                };
                self.sym(";")?;
                Ok(Stmt::Expr(e))
            }
        }
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.sym("(")?;
        let mut args = Vec::new();
        if !self.at_sym(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.sym(")")?;
        Ok(args)
    }

    /// Promotable expression, or `None` if the next token cannot start one.
    fn p_expr(&mut self) -> PResult<Option<Expr>> {
        let t = self.peek().clone();
        match (t.kind, t.text.as_str()) {
            (TokenKind::Identifier, _) if self.peek_at(1).is(TokenKind::Symbol, "=") => {
                let n = self.ident()?;
                self.pos += 1;
                Ok(Some(Expr::Assign(n, Box::new(self.expr()?))))
            }
            (TokenKind::Identifier, _) if self.peek_at(1).is(TokenKind::Symbol, "(") => {
                let n = self.ident()?;
                Ok(Some(Expr::Call(n, self.args()?)))
            }
            (TokenKind::Keyword, "recv") => {
                self.pos += 1;
                self.sym("(")?;
                let e = self.expr()?;
                self.sym(")")?;
                Ok(Some(Expr::Recv(Box::new(e))))
            }
            (TokenKind::Keyword, "measure") => {
                self.pos += 1;
                self.sym("(")?;
                let basis = self.ident()?;
                self.sym(",")?;
                let mut vars = vec![self.ident()?];
                while self.eat_sym(",") {
                    vars.push(self.ident()?);
                }
                self.sym(")")?;
                Ok(Some(Expr::Measure(basis, vars)))
            }
            (TokenKind::Keyword, "new") => {
                self.pos += 1;
                let ty = if self.at_kw("channel") || self.at_kw("channelEnd") {
                    self.ty(false)?
                } else {
                    self.q_type()?
                };
                self.sym("(")?;
                self.sym(")")?;
                Ok(Some(Expr::New(ty)))
            }
            _ => Ok(None),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.indiv()?;
        let t = self.peek();
        if t.kind == TokenKind::Operator {
            let op = BinOp::from_symbol(&t.text).expect("lexer emits known operators");
            self.pos += 1;
            let rhs = self.expr()?;
            return Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn indiv(&mut self) -> PResult<Expr> {
        if let Some(e) = self.p_expr()? {
            return Ok(e);
        }
        let t = self.peek().clone();
        match (t.kind, t.text.as_str()) {
            (TokenKind::Integer, s) => {
                self.pos += 1;
                Ok(Expr::Int(s.parse().expect("lexer checked range")))
            }
            (TokenKind::Keyword, "true") => {
                self.pos += 1;
                Ok(Expr::Bool(true))
            }
            (TokenKind::Keyword, "false") => {
                self.pos += 1;
                Ok(Expr::Bool(false))
            }
            (TokenKind::Identifier, _) => Ok(Expr::Var(self.ident()?)),
            (TokenKind::Symbol, "(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.sym(")")?;
                Ok(Expr::Paren(Box::new(e)))
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}
