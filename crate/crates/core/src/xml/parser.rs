use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{Attribute, Document, NodeId, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum XmlErrorKind {
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("mismatched closing tag: expected </{expected}>, found </{found}>")]
    MismatchedTag { expected: String, found: String },
    #[error("duplicate attribute {0:?}")]
    DuplicateAttribute(String),
    #[error("more than one root element")]
    MultipleRoots,
    #[error("no root element")]
    NoRoot,
    #[error("text outside the root element")]
    TextOutsideRoot,
    #[error("unknown entity &{0};")]
    UnknownEntity(String),
    #[error("invalid character reference &#{0};")]
    BadCharRef(String),
    #[error("document type declarations are not supported")]
    DoctypeNotSupported,
    #[error("\"]]>\" is not allowed in character data")]
    CdataEndInText,
}

/// A well-formedness error at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlError {
    pub kind: XmlErrorKind,
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for XmlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at line {}, column {}", self.kind, self.line, self.column)
    }
}

impl core::error::Error for XmlError {}

pub(super) fn parse(text: &str) -> Result<Document, XmlError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut p = Parser {
        src: text,
        pos: 0,
        doc: Document::empty(),
    };
    p.document()?;
    Ok(p.doc)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    doc: Document,
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == ':' || (c as u32) >= 0xC0
}

fn is_name_char(c: char) -> bool {
    is_name_start(c) || c.is_ascii_digit() || c == '-' || c == '.' || c == '\u{b7}'
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.rest().starts_with(s)
    }

    fn error_at(&self, pos: usize, kind: XmlErrorKind) -> XmlError {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() as u32 + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        let column = before[line_start..].chars().count() as u32 + 1;
        XmlError { kind, line, column }
    }

    fn error(&self, kind: XmlErrorKind) -> XmlError {
        self.error_at(self.pos, kind)
    }

    fn unexpected(&self) -> XmlError {
        match self.peek() {
            Some(c) => self.error(XmlErrorKind::UnexpectedChar(c)),
            None => self.error(XmlErrorKind::UnexpectedEof),
        }
    }

    fn expect(&mut self, s: &'static str) -> Result<(), XmlError> {
        if self.starts_with(s) {
            self.pos += s.len();
            Ok(())
        } else if self.pos >= self.src.len() {
            Err(self.error(XmlErrorKind::UnexpectedEof))
        } else {
            Err(self.error(XmlErrorKind::Expected(s)))
        }
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while matches!(self.peek(), Some(' ' | '\t' | '\n' | '\r')) {
            self.pos += 1;
        }
        self.pos > start
    }

    /// Skips everything up to and including `end`.
    fn skip_past(&mut self, end: &str) -> Result<(), XmlError> {
        match self.rest().find(end) {
            Some(i) => {
                self.pos += i + end.len();
                Ok(())
            }
            None => Err(self.error_at(self.src.len(), XmlErrorKind::UnexpectedEof)),
        }
    }

    fn name(&mut self) -> Result<&'a str, XmlError> {
        let start = self.pos;
        match self.peek() {
            Some(c) if is_name_start(c) => {
                self.bump();
            }
            _ => return Err(self.unexpected()),
        }
        while matches!(self.peek(), Some(c) if is_name_char(c)) {
            self.bump();
        }
        Ok(&self.src[start..self.pos])
    }

    /// Comments, processing instructions and whitespace outside the root.
    fn misc(&mut self) -> Result<(), XmlError> {
        loop {
            self.skip_ws();
            if self.starts_with("<!--") {
                self.pos += 4;
                self.skip_past("-->")?;
            } else if self.starts_with("<?") {
                self.pos += 2;
                self.skip_past("?>")?;
            } else if self.starts_with("<!DOCTYPE") {
                return Err(self.error(XmlErrorKind::DoctypeNotSupported));
            } else {
                return Ok(());
            }
        }
    }

    fn document(&mut self) -> Result<(), XmlError> {
        self.misc()?;
        if self.peek().is_none() {
            return Err(self.error(XmlErrorKind::NoRoot));
        }
        if !self.starts_with("<") {
            return Err(self.error(XmlErrorKind::TextOutsideRoot));
        }
        self.element(NodeId::ROOT)?;
        self.misc()?;
        match self.peek() {
            None => Ok(()),
            Some('<') => Err(self.error(XmlErrorKind::MultipleRoots)),
            Some(_) => Err(self.error(XmlErrorKind::TextOutsideRoot)),
        }
    }

    fn element(&mut self, parent: NodeId) -> Result<(), XmlError> {
        let open_pos = self.pos;
        self.expect("<")?;
        let name = self.name()?;
        let mut attributes: Vec<Attribute> = Vec::new();
        loop {
            let had_ws = self.skip_ws();
            match self.peek() {
                Some('/') => {
                    self.pos += 1;
                    self.expect(">")?;
                    self.doc.push(
                        parent,
                        NodeKind::Element {
                            name: name.to_string(),
                            attributes,
                        },
                    );
                    return Ok(());
                }
                Some('>') => {
                    self.pos += 1;
                    break;
                }
                Some(c) if had_ws && is_name_start(c) => {
                    let attr_pos = self.pos;
                    let attr_name = self.name()?;
                    self.skip_ws();
                    self.expect("=")?;
                    self.skip_ws();
                    let value = self.attr_value()?;
                    if attributes.iter().any(|a| a.name == attr_name) {
                        return Err(self.error_at(attr_pos, XmlErrorKind::DuplicateAttribute(attr_name.to_string())));
                    }
                    attributes.push(Attribute {
                        name: attr_name.to_string(),
                        value,
                    });
                }
                _ => return Err(self.unexpected()),
            }
        }
        let id = self.doc.push(
            parent,
            NodeKind::Element {
                name: name.to_string(),
                attributes,
            },
        );
        self.content(id)?;
        let close_pos = self.pos;
        self.expect("</")?;
        let close = self.name()?;
        if close != name {
            return Err(self.error_at(
                close_pos,
                XmlErrorKind::MismatchedTag {
                    expected: name.to_string(),
                    found: close.to_string(),
                },
            ));
        }
        self.skip_ws();
        self.expect(">").map_err(|e| {
            if e.kind == XmlErrorKind::UnexpectedEof {
                self.error_at(open_pos, XmlErrorKind::UnexpectedEof)
            } else {
                e
            }
        })
    }

    fn attr_value(&mut self) -> Result<String, XmlError> {
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) => q,
            _ => return Err(self.error(XmlErrorKind::Expected("quoted attribute value"))),
        };
        self.pos += 1;
        let mut value = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error(XmlErrorKind::UnexpectedEof)),
                Some(c) if c == quote => {
                    self.pos += 1;
                    return Ok(value);
                }
                Some('<') => return Err(self.unexpected()),
                Some('&') => value.push(self.reference()?),
                Some('\r') => {
                    self.pos += 1;
                    if self.peek() == Some('\n') {
                        self.pos += 1;
                    }
                    value.push(' ');
                }
                Some('\t' | '\n') => {
                    self.pos += 1;
                    value.push(' ');
                }
                Some(c) => {
                    self.pos += c.len_utf8();
                    value.push(c);
                }
            }
        }
    }

    /// Parses `&...;` at the cursor.
    fn reference(&mut self) -> Result<char, XmlError> {
        let start = self.pos;
        self.pos += 1;
        let end = match self.rest().find(';') {
            Some(i) if i <= 32 => self.pos + i,
            _ => return Err(self.error_at(start, XmlErrorKind::UnexpectedChar('&'))),
        };
        let body = &self.src[self.pos..end];
        self.pos = end + 1;
        if let Some(num) = body.strip_prefix('#') {
            let code = match num.strip_prefix('x') {
                Some(hex) => u32::from_str_radix(hex, 16).ok(),
                None => num.parse::<u32>().ok(),
            };
            return code
                .and_then(char::from_u32)
                .filter(|&c| c != '\0')
                .ok_or_else(|| self.error_at(start, XmlErrorKind::BadCharRef(num.to_string())));
        }
        match body {
            "amp" => Ok('&'),
            "lt" => Ok('<'),
            "gt" => Ok('>'),
            "quot" => Ok('"'),
            "apos" => Ok('\''),
            other => Err(self.error_at(start, XmlErrorKind::UnknownEntity(other.to_string()))),
        }
    }

    fn content(&mut self, parent: NodeId) -> Result<(), XmlError> {
        let mut text = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error(XmlErrorKind::UnexpectedEof)),
                Some('<') => {
                    if self.starts_with("</") {
                        self.flush_text(parent, &mut text);
                        return Ok(());
                    } else if self.starts_with("<!--") {
                        self.pos += 4;
                        self.skip_past("-->")?;
                    } else if self.starts_with("<![CDATA[") {
                        self.pos += 9;
                        let start = self.pos;
                        self.skip_past("]]>")?;
                        text.push_str(&self.src[start..self.pos - 3]);
                    } else if self.starts_with("<?") {
                        self.pos += 2;
                        self.skip_past("?>")?;
                    } else if self.starts_with("<!") {
                        return Err(self.unexpected());
                    } else {
                        self.flush_text(parent, &mut text);
                        self.element(parent)?;
                    }
                }
                Some('&') => text.push(self.reference()?),
                Some('\r') => {
                    self.pos += 1;
                    if self.peek() == Some('\n') {
                        self.pos += 1;
                    }
                    text.push('\n');
                }
                Some(']') if self.starts_with("]]>") => {
                    return Err(self.error(XmlErrorKind::CdataEndInText));
                }
                Some(c) => {
                    self.pos += c.len_utf8();
                    text.push(c);
                }
            }
        }
    }

    fn flush_text(&mut self, parent: NodeId, text: &mut String) {
        if !text.is_empty() {
            self.doc.push_text(parent, text);
            text.clear();
        }
    }
}
