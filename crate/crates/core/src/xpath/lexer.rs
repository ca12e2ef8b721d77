use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::XPathError;

#[derive(Debug, Clone, PartialEq)]
pub(super) enum Token {
    Slash,
    DoubleSlash,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    At,
    Dot,
    DotDot,
    Star,
    DoubleColon,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// `and` / `or` when in operator position.
    Operator(String),
    Name(String),
    Literal(String),
    Number(f64),
    /// Tokens that are valid XPath but outside the supported subset.
    Unsupported(String),
}

impl Token {
    pub(super) fn describe(&self) -> String {
        match self {
            Token::Name(n) => alloc::format!("name {n:?}"),
            Token::Literal(s) => alloc::format!("literal {s:?}"),
            Token::Number(n) => alloc::format!("number {n}"),
            Token::Operator(o) | Token::Unsupported(o) => alloc::format!("{o:?}"),
            other => alloc::format!("{other:?}"),
        }
    }

    /// Whether a following `*` or name is an operator rather than a name
    /// test, per the XPath 1.0 lexical disambiguation rule.
    fn ends_operand(&self) -> bool {
        !matches!(
            self,
            Token::At
                | Token::DoubleColon
                | Token::LParen
                | Token::LBracket
                | Token::Comma
                | Token::Slash
                | Token::DoubleSlash
                | Token::Eq
                | Token::Ne
                | Token::Lt
                | Token::Le
                | Token::Gt
                | Token::Ge
                | Token::Operator(_)
                | Token::Unsupported(_)
        )
    }
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || (c as u32) >= 0xC0
}

fn is_name_char(c: char) -> bool {
    is_name_start(c) || c.is_ascii_digit() || c == '-' || c == '.'
}

pub(super) fn tokenize(src: &str) -> Result<Vec<(Token, usize)>, XPathError> {
    let bytes = src.as_bytes();
    let mut out: Vec<(Token, usize)> = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let c = src[i..].chars().next().unwrap();
        let start = i;
        let prev_is_operand = out.last().is_some_and(|(t, _)| t.ends_operand());
        let token = match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '/' if bytes.get(i + 1) == Some(&b'/') => {
                i += 2;
                Token::DoubleSlash
            }
            '/' => {
                i += 1;
                Token::Slash
            }
            '[' => {
                i += 1;
                Token::LBracket
            }
            ']' => {
                i += 1;
                Token::RBracket
            }
            '(' => {
                i += 1;
                Token::LParen
            }
            ')' => {
                i += 1;
                Token::RParen
            }
            ',' => {
                i += 1;
                Token::Comma
            }
            '@' => {
                i += 1;
                Token::At
            }
            ':' if bytes.get(i + 1) == Some(&b':') => {
                i += 2;
                Token::DoubleColon
            }
            '=' => {
                i += 1;
                Token::Eq
            }
            '!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 2;
                Token::Ne
            }
            '<' | '>' => {
                let eq = bytes.get(i + 1) == Some(&b'=');
                i += if eq { 2 } else { 1 };
                match (c, eq) {
                    ('<', false) => Token::Lt,
                    ('<', true) => Token::Le,
                    ('>', false) => Token::Gt,
                    _ => Token::Ge,
                }
            }
            '*' => {
                i += 1;
                if prev_is_operand {
                    Token::Unsupported("*".to_string())
                } else {
                    Token::Star
                }
            }
            '+' | '-' | '|' | '$' => {
                i += 1;
                Token::Unsupported(c.to_string())
            }
            '"' | '\'' => {
                let end = src[i + 1..].find(c).ok_or(XPathError::UnterminatedLiteral(i))?;
                let lit = &src[i + 1..i + 1 + end];
                i += end + 2;
                Token::Literal(lit.to_string())
            }
            '.' if bytes.get(i + 1) == Some(&b'.') => {
                i += 2;
                Token::DotDot
            }
            '.' if !bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                i += 1;
                Token::Dot
            }
            '0'..='9' | '.' => {
                let mut end = i;
                while end < src.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                if end < src.len() && bytes[end] == b'.' {
                    end += 1;
                    while end < src.len() && bytes[end].is_ascii_digit() {
                        end += 1;
                    }
                }
                let n = src[i..end]
                    .parse::<f64>()
                    .map_err(|_| XPathError::UnexpectedChar { found: c, offset: i })?;
                i = end;
                Token::Number(n)
            }
            c if is_name_start(c) => {
                let mut end = i;
                loop {
                    let rest = &src[end..];
                    match rest.chars().next() {
                        Some(ch) if is_name_char(ch) => end += ch.len_utf8(),
                        // A single colon continues a prefixed name.
                        Some(':') if rest[1..].chars().next().is_some_and(is_name_start) => end += 1,
                        _ => break,
                    }
                }
                let name = &src[i..end];
                i = end;
                if prev_is_operand {
                    match name {
                        "and" | "or" => Token::Operator(name.to_string()),
                        _ => Token::Unsupported(name.to_string()),
                    }
                } else {
                    Token::Name(name.to_string())
                }
            }
            other => return Err(XPathError::UnexpectedChar { found: other, offset: i }),
        };
        out.push((token, start));
    }
    Ok(out)
}
