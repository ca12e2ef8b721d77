use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::vec::Vec;

use super::lexer::{tokenize, Token};
use super::{Axis, CompareOp, Expr, Function, LocationPath, NodeTest, Step, XPathError};

pub(super) fn parse(src: &str) -> Result<Expr, XPathError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let expr = p.or_expr()?;
    match p.tokens.get(p.pos) {
        None => Ok(expr),
        Some((t, offset)) => Err(p.token_error(t, *offset)),
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Token> {
        self.tokens.get(self.pos + ahead).map(|(t, _)| t)
    }

    fn next(&mut self) -> Result<Token, XPathError> {
        let (t, _) = self.tokens.get(self.pos).cloned().ok_or(XPathError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn eat(&mut self, t: &Token) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn token_error(&self, t: &Token, offset: usize) -> XPathError {
        match t {
            Token::Unsupported(s) => XPathError::Unsupported(alloc::format!("operator {s:?}")),
            _ => XPathError::UnexpectedToken {
                found: t.describe(),
                offset,
            },
        }
    }

    fn unexpected(&self) -> XPathError {
        match self.tokens.get(self.pos) {
            Some((t, offset)) => self.token_error(t, *offset),
            None => XPathError::UnexpectedEnd,
        }
    }

    fn expect(&mut self, t: &Token) -> Result<(), XPathError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn or_expr(&mut self) -> Result<Expr, XPathError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&Token::Operator("or".to_string())) {
            self.pos += 1;
            let rhs = self.and_expr()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, XPathError> {
        let mut lhs = self.equality_expr()?;
        while self.peek() == Some(&Token::Operator("and".to_string())) {
            self.pos += 1;
            let rhs = self.equality_expr()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn equality_expr(&mut self) -> Result<Expr, XPathError> {
        let mut lhs = self.relational_expr()?;
        loop {
            let op = match self.peek() {
                Some(Token::Eq) => CompareOp::Eq,
                Some(Token::Ne) => CompareOp::Ne,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.relational_expr()?;
            lhs = Expr::Compare(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn relational_expr(&mut self) -> Result<Expr, XPathError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Some(Token::Lt) => CompareOp::Lt,
                Some(Token::Le) => CompareOp::Le,
                Some(Token::Gt) => CompareOp::Gt,
                Some(Token::Ge) => CompareOp::Ge,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary_expr()?;
            lhs = Expr::Compare(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary_expr(&mut self) -> Result<Expr, XPathError> {
        match self.peek() {
            Some(Token::Literal(_)) | Some(Token::Number(_)) => Ok(match self.next()? {
                Token::Literal(s) => Expr::Literal(s),
                Token::Number(n) => Expr::Number(n),
                _ => unreachable!(),
            }),
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.or_expr()?;
                self.expect(&Token::RParen)?;
                if matches!(self.peek(), Some(Token::Slash | Token::DoubleSlash | Token::LBracket)) {
                    return Err(XPathError::Unsupported(
                        "filter expressions and paths after a parenthesized expression".into(),
                    ));
                }
                Ok(inner)
            }
            Some(Token::Name(name)) if self.peek_at(1) == Some(&Token::LParen) && name != "text" => self.function_call(),
            _ => self.location_path().map(Expr::Path),
        }
    }

    fn function_call(&mut self) -> Result<Expr, XPathError> {
        let Token::Name(name) = self.next()? else { unreachable!() };
        let function = match Function::lookup(&name) {
            Some(f) => f,
            None if name == "node" || name == "comment" || name == "processing-instruction" => {
                return Err(XPathError::Unsupported(alloc::format!("node test {name}()")))
            }
            None => return Err(XPathError::Unsupported(alloc::format!("function {name}()"))),
        };
        self.expect(&Token::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&Token::RParen) {
            loop {
                args.push(self.or_expr()?);
                if self.eat(&Token::RParen) {
                    break;
                }
                self.expect(&Token::Comma)?;
            }
        }
        check_arity(function, &args)?;
        Ok(Expr::Call(function, args))
    }

    fn location_path(&mut self) -> Result<LocationPath, XPathError> {
        let mut steps = Vec::new();
        let absolute = match self.peek() {
            Some(Token::Slash) => {
                self.pos += 1;
                if !self.at_step_start() {
                    return Ok(LocationPath { absolute: true, steps });
                }
                true
            }
            Some(Token::DoubleSlash) => {
                self.pos += 1;
                steps.push(Step::DescendantOrSelf);
                true
            }
            _ => false,
        };
        steps.push(self.step()?);
        loop {
            match self.peek() {
                Some(Token::Slash) => {
                    self.pos += 1;
                }
                Some(Token::DoubleSlash) => {
                    self.pos += 1;
                    steps.push(Step::DescendantOrSelf);
                }
                _ => break,
            }
            steps.push(self.step()?);
        }
        Ok(LocationPath { absolute, steps })
    }

    fn at_step_start(&self) -> bool {
        matches!(
            self.peek(),
            Some(Token::Name(_) | Token::At | Token::Star | Token::Dot | Token::DotDot)
        )
    }

    fn step(&mut self) -> Result<Step, XPathError> {
        let step = match self.peek() {
            Some(Token::Dot) => {
                self.pos += 1;
                Step::SelfNode
            }
            Some(Token::DotDot) => {
                self.pos += 1;
                Step::Parent
            }
            Some(Token::At) => {
                self.pos += 1;
                self.axis_step(Axis::Attribute)?
            }
            Some(Token::Name(name)) if self.peek_at(1) == Some(&Token::DoubleColon) => {
                let axis = match name.as_str() {
                    "child" => Axis::Child,
                    "attribute" => Axis::Attribute,
                    other => return Err(XPathError::Unsupported(alloc::format!("axis {other}"))),
                };
                self.pos += 2;
                self.axis_step(axis)?
            }
            Some(Token::Name(_) | Token::Star) => self.axis_step(Axis::Child)?,
            _ => return Err(self.unexpected()),
        };
        if matches!(step, Step::SelfNode | Step::Parent) && self.peek() == Some(&Token::LBracket) {
            return Err(XPathError::Unsupported("predicates on '.' or '..'".into()));
        }
        Ok(step)
    }

    fn axis_step(&mut self, axis: Axis) -> Result<Step, XPathError> {
        let test = match self.next()? {
            Token::Star => NodeTest::Any,
            Token::Name(n) if self.peek() == Some(&Token::LParen) => {
                if n != "text" {
                    return Err(XPathError::Unsupported(alloc::format!("node test {n}()")));
                }
                self.pos += 1;
                self.expect(&Token::RParen)?;
                NodeTest::Text
            }
            Token::Name(n) => NodeTest::Name(n),
            _ => {
                self.pos -= 1;
                return Err(self.unexpected());
            }
        };
        let mut predicates = Vec::new();
        while self.eat(&Token::LBracket) {
            predicates.push(self.or_expr()?);
            self.expect(&Token::RBracket)?;
        }
        Ok(Step::Axis { axis, test, predicates })
    }
}

fn check_arity(function: Function, args: &[Expr]) -> Result<(), XPathError> {
    let name = function.name();
    let bad = |problem| Err(XPathError::BadArguments { name, problem });
    let is_path = |e: &Expr| matches!(e, Expr::Path(_));
    match function {
        Function::Count => {
            if args.len() != 1 || !is_path(&args[0]) {
                return bad("takes exactly one node-set argument");
            }
        }
        Function::Name => {
            if args.len() > 1 || !args.iter().all(is_path) {
                return bad("takes at most one node-set argument");
            }
        }
        Function::Not => {
            if args.len() != 1 {
                return bad("takes exactly one argument");
            }
        }
        Function::String | Function::Number => {
            if args.len() > 1 {
                return bad("takes at most one argument");
            }
        }
        Function::Concat => {
            if args.len() < 2 {
                return bad("takes at least two arguments");
            }
        }
        Function::Position | Function::Last => {
            if !args.is_empty() {
                return bad("takes no arguments");
            }
        }
    }
    Ok(())
}
