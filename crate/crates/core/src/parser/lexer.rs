use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// 1-based line and column (in characters).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Integer,
    Symbol,
    Operator,
    Eof,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

pub const KEYWORDS: &[&str] = &[
    "if", "else", "while", "fork", "return", "send", "recv", "measure", "new", "withends",
    "aliasfor", "void", "int", "bool", "qbit", "qtrit", "channel", "channelEnd", "true", "false",
];

/// The tensor operator; `(*)` is its ASCII spelling.
pub const TENSOR: &str = "⊗";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{span}: lexical error: {message}")]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

/// Names of the form `q<d>it` denote d-dimensional quantum types.
pub fn qudit_dimension(word: &str) -> Option<usize> {
    let digits = word.strip_prefix('q')?.strip_suffix("it")?;
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word) || qudit_dimension(word).is_some()
}

fn ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn ident_continue(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let rest = |n: usize| -> String { chars[i..(i + n).min(chars.len())].iter().collect() };
        let (kind, len, text) = if ident_start(c) {
            let mut j = i + 1;
            while j < chars.len() && ident_continue(chars[j]) {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let kind = if is_keyword(&word) { TokenKind::Keyword } else { TokenKind::Identifier };
            (kind, j - i, word)
        } else if c.is_ascii_digit() {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            if word.parse::<i64>().is_err() {
                return Err(LexError { span, message: format!("integer literal {word} out of range") });
            }
            (TokenKind::Integer, j - i, word)
        } else if rest(3) == "(*)" {
            (TokenKind::Operator, 3, TENSOR.to_string())
        } else if c == '⊗' {
            (TokenKind::Operator, 1, TENSOR.to_string())
        } else if ["==", "!=", "<=", ">="].contains(&rest(2).as_str()) {
            (TokenKind::Operator, 2, rest(2))
        } else if "+-*<>".contains(c) {
            (TokenKind::Operator, 1, c.to_string())
        } else if "(){}[],;=".contains(c) {
            (TokenKind::Symbol, 1, c.to_string())
        } else {
            return Err(LexError { span, message: format!("unexpected character {c:?}") });
        };
        out.push(Token { kind, text, span });
        advance(&mut i, &mut line, &mut col, len);
    }
    out.push(Token { kind: TokenKind::Eof, text: String::new(), span: Span { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn header_tokens() {
        use TokenKind::*;
        assert_eq!(
            kinds("int main()"),
            vec![
                (Keyword, "int".into()),
                (Identifier, "main".into()),
                (Symbol, "(".into()),
                (Symbol, ")".into()),
                (Eof, "".into())
            ]
        );
    }

    #[test]
    fn alias_declaration_tokens() {
        let texts: Vec<String> = kinds("c aliasfor [p,q];").into_iter().map(|t| t.1).collect();
        assert_eq!(texts, vec!["c", "aliasfor", "[", "p", ",", "q", "]", ";", ""]);
        assert_eq!(kinds("c aliasfor")[1].0, TokenKind::Keyword);
    }

    #[test]
    fn at_sign_is_rejected() {
        let e = tokenize("@x").unwrap_err();
        assert_eq!(e.span, Span { line: 1, col: 1 });
    }

    #[test]
    fn tensor_spellings_and_maximal_munch() {
        let a = kinds("qbit (*) qbit");
        let b = kinds("qbit ⊗ qbit");
        assert_eq!(a, b);
        assert_eq!(kinds("a<=b")[1].1, "<=");
        assert_eq!(kinds("a==b")[1].1, "==");
        assert_eq!(kinds("ψA")[0], (TokenKind::Identifier, "ψA".into()));
    }

    #[test]
    fn comments_and_spans() {
        let ts = tokenize("// hi\n  x").unwrap();
        assert_eq!(ts[0].span, Span { line: 2, col: 3 });
    }

    #[test]
    fn qudit_names_are_keywords() {
        assert_eq!(qudit_dimension("q4it"), Some(4));
        assert_eq!(qudit_dimension("qit"), None);
        assert_eq!(kinds("q4it")[0].0, TokenKind::Keyword);
        assert_eq!(kinds("q4")[0].0, TokenKind::Identifier);
    }
}
