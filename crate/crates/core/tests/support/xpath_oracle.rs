//! Independent reference evaluator for the XPath subset.
//!
//! Documents and expressions are generated here as plain trees, printed to
//! text, and handed to the library. The oracle evaluates its own trees by
//! direct recursive walking and never touches library types, so the two
//! results can be compared node for node via child-index paths.

#![allow(dead_code)]

use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::Rng;

use gridwatch_core::xml::Document;
use gridwatch_core::xpath::{NodeRef, Value};

#[derive(Debug, Clone)]
pub enum ONode {
    Elem {
        name: String,
        attrs: Vec<(String, String)>,
        children: Vec<ONode>,
    },
    Text(String),
}

/// Node identity: child indices from the document root (the root element is
/// `[0]`, the root node `[]`), plus an attribute index. The derived order is
/// document order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OId {
    pub path: Vec<usize>,
    pub attr: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OValue {
    Nodes(Vec<OId>),
    Str(String),
    Num(f64),
    Bool(bool),
}

pub struct ODoc {
    pub root: ONode,
}

const NAMES: &[&str] = &["a", "b", "c", "d"];
const ATTRS: &[&str] = &["x", "y", "z"];
const VALUES: &[&str] = &["1", "2", "10", "a", "b", " 3 ", "", "x y", "-1.5"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl ODoc {
    /// A random document of at most `max_nodes` elements, texts and attributes.
    pub fn random(rng: &mut impl Rng, max_nodes: usize) -> ODoc {
        let mut budget = rng.random_range(1..=max_nodes);
        let root = gen_elem(rng, &mut budget, 0);
        ODoc { root }
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        write_node(&self.root, &mut out);
        out
    }

    pub fn node(&self, id: &OId) -> Option<&ONode> {
        let mut it = id.path.iter();
        if it.next() != Some(&0) {
            return None;
        }
        let mut cur = &self.root;
        for &i in it {
            match cur {
                ONode::Elem { children, .. } => cur = children.get(i)?,
                ONode::Text(_) => return None,
            }
        }
        Some(cur)
    }

    /// Every element id, for picking context nodes.
    pub fn element_ids(&self) -> Vec<OId> {
        let mut out = Vec::new();
        fn walk(n: &ONode, path: &mut Vec<usize>, out: &mut Vec<OId>) {
            if let ONode::Elem { children, .. } = n {
                out.push(OId {
                    path: path.clone(),
                    attr: None,
                });
                for (i, c) in children.iter().enumerate() {
                    path.push(i);
                    walk(c, path, out);
                    path.pop();
                }
            }
        }
        walk(&self.root, &mut vec![0], &mut out);
        out
    }

    fn children_of(&self, id: &OId) -> Vec<OId> {
        if id.attr.is_some() {
            return vec![];
        }
        if id.path.is_empty() {
            return vec![OId {
                path: vec![0],
                attr: None,
            }];
        }
        match self.node(id) {
            Some(ONode::Elem { children, .. }) => (0..children.len())
                .map(|i| {
                    let mut p = id.path.clone();
                    p.push(i);
                    OId { path: p, attr: None }
                })
                .collect(),
            _ => vec![],
        }
    }

    fn attrs_of(&self, id: &OId) -> Vec<(OId, String)> {
        if id.attr.is_some() || id.path.is_empty() {
            return vec![];
        }
        match self.node(id) {
            Some(ONode::Elem { attrs, .. }) => attrs
                .iter()
                .enumerate()
                .map(|(i, (n, _))| {
                    (
                        OId {
                            path: id.path.clone(),
                            attr: Some(i),
                        },
                        n.clone(),
                    )
                })
                .collect(),
            _ => vec![],
        }
    }

    fn string_value(&self, id: &OId) -> String {
        if id.path.is_empty() {
            return text_of(&self.root);
        }
        let node = self.node(id).expect("valid id");
        match (id.attr, node) {
            (Some(i), ONode::Elem { attrs, .. }) => attrs[i].1.clone(),
            (_, n) => text_of(n),
        }
    }

    fn name(&self, id: &OId) -> String {
        if id.path.is_empty() {
            return String::new();
        }
        match (id.attr, self.node(id).expect("valid id")) {
            (Some(i), ONode::Elem { attrs, .. }) => attrs[i].0.clone(),
            (None, ONode::Elem { name, .. }) => name.clone(),
            _ => String::new(),
        }
    }

    fn is_element(&self, id: &OId) -> bool {
        id.attr.is_none() && !id.path.is_empty() && matches!(self.node(id), Some(ONode::Elem { .. }))
    }

    fn is_text(&self, id: &OId) -> bool {
        id.attr.is_none() && matches!(self.node(id), Some(ONode::Text(_)))
    }

    fn descendants_or_self(&self, id: &OId) -> Vec<OId> {
        let mut out = vec![id.clone()];
        if id.attr.is_none() {
            for c in self.children_of(id) {
                out.extend(self.descendants_or_self(&c));
            }
        }
        out
    }
}

fn text_of(n: &ONode) -> String {
    match n {
        ONode::Text(t) => t.clone(),
        ONode::Elem { children, .. } => children.iter().map(text_of).collect(),
    }
}

fn gen_elem(rng: &mut impl Rng, budget: &mut usize, depth: usize) -> ONode {
    *budget = budget.saturating_sub(1);
    let name = NAMES.choose(rng).unwrap().to_string();
    let mut attrs = Vec::new();
    for a in ATTRS {
        if *budget > 0 && rng.random_bool(0.3) {
            *budget -= 1;
            attrs.push((a.to_string(), VALUES.choose(rng).unwrap().to_string()));
        }
    }
    let mut children: Vec<ONode> = Vec::new();
    let max_children = if depth > 4 { 0 } else { rng.random_range(0..=4) };
    for _ in 0..max_children {
        if *budget == 0 {
            break;
        }
        let last_is_text = matches!(children.last(), Some(ONode::Text(_)));
        if !last_is_text && rng.random_bool(0.35) {
            *budget -= 1;
            let v = VALUES.iter().filter(|v| !v.is_empty()).collect::<Vec<_>>();
            children.push(ONode::Text(v.choose(rng).unwrap().to_string()));
        } else {
            children.push(gen_elem(rng, budget, depth + 1));
        }
    }
    ONode::Elem { name, attrs, children }
}

fn write_node(n: &ONode, out: &mut String) {
    match n {
        ONode::Text(t) => out.push_str(&esc(t)),
        ONode::Elem { name, attrs, children } => {
            write!(out, "<{name}").unwrap();
            for (k, v) in attrs {
                write!(out, " {k}=\"{}\"", esc(v)).unwrap();
            }
            out.push('>');
            for c in children {
                write_node(c, out);
            }
            write!(out, "</{name}>").unwrap();
        }
    }
}

// ---- expressions -------------------------------------------------------

#[derive(Debug, Clone)]
pub enum OTest {
    Name(String),
    Star,
    Text,
}

#[derive(Debug, Clone)]
pub enum OStep {
    Child(OTest, Vec<OExpr>),
    Attr(Option<String>, Vec<OExpr>),
    Dot,
    DotDot,
    /// `//` separator
    DescOrSelf,
}

#[derive(Debug, Clone)]
pub struct OPath {
    pub absolute: bool,
    pub steps: Vec<OStep>,
}

#[derive(Debug, Clone)]
pub enum OExpr {
    Or(Box<OExpr>, Box<OExpr>),
    And(Box<OExpr>, Box<OExpr>),
    Cmp(&'static str, Box<OExpr>, Box<OExpr>),
    Lit(String),
    Num(f64),
    Count(OPath),
    Not(Box<OExpr>),
    Name(Option<OPath>),
    StringFn(Option<Box<OExpr>>),
    NumberFn(Option<Box<OExpr>>),
    Concat(Vec<OExpr>),
    Position,
    Last,
    Path(OPath),
}

impl OPath {
    pub fn print(&self) -> String {
        let mut s = String::new();
        if self.absolute {
            s.push('/');
        }
        let mut first = true;
        for step in &self.steps {
            if !first {
                s.push('/');
            }
            first = false;
            match step {
                OStep::DescOrSelf => {}
                OStep::Dot => s.push('.'),
                OStep::DotDot => s.push_str(".."),
                OStep::Child(t, preds) => {
                    match t {
                        OTest::Name(n) => s.push_str(n),
                        OTest::Star => s.push('*'),
                        OTest::Text => s.push_str("text()"),
                    }
                    for p in preds {
                        write!(s, "[{}]", p.print()).unwrap();
                    }
                }
                OStep::Attr(n, preds) => {
                    s.push('@');
                    s.push_str(n.as_deref().unwrap_or("*"));
                    for p in preds {
                        write!(s, "[{}]", p.print()).unwrap();
                    }
                }
            }
        }
        s
    }
}

impl OExpr {
    pub fn print(&self) -> String {
        match self {
            OExpr::Or(a, b) => format!("({} or {})", a.print(), b.print()),
            OExpr::And(a, b) => format!("({} and {})", a.print(), b.print()),
            OExpr::Cmp(op, a, b) => format!("({} {op} {})", a.print(), b.print()),
            OExpr::Lit(s) => format!("'{s}'"),
            OExpr::Num(n) => format!("{n}"),
            OExpr::Count(p) => format!("count({})", p.print()),
            OExpr::Not(e) => format!("not({})", e.print()),
            OExpr::Name(None) => "name()".into(),
            OExpr::Name(Some(p)) => format!("name({})", p.print()),
            OExpr::StringFn(None) => "string()".into(),
            OExpr::StringFn(Some(e)) => format!("string({})", e.print()),
            OExpr::NumberFn(None) => "number()".into(),
            OExpr::NumberFn(Some(e)) => format!("number({})", e.print()),
            OExpr::Concat(args) => {
                let a: Vec<_> = args.iter().map(|e| e.print()).collect();
                format!("concat({})", a.join(", "))
            }
            OExpr::Position => "position()".into(),
            OExpr::Last => "last()".into(),
            OExpr::Path(p) => p.print(),
        }
    }
}

pub fn random_path(rng: &mut impl Rng, depth: usize) -> OPath {
    let absolute = rng.random_bool(0.4);
    let n = rng.random_range(1..=3);
    let mut steps = Vec::new();
    if absolute && rng.random_bool(0.3) {
        steps.push(OStep::DescOrSelf);
    }
    for i in 0..n {
        if i > 0 && rng.random_bool(0.2) {
            steps.push(OStep::DescOrSelf);
        }
        let preds = |rng: &mut _| -> Vec<OExpr> {
            if depth < 2 && rng_bool(rng, 0.35) {
                vec![random_predicate(rng, depth + 1)]
            } else {
                vec![]
            }
        };
        let step = match rng.random_range(0..10) {
            0..=3 => {
                let name = NAMES.choose(rng).unwrap().to_string();
                let p = preds(rng);
                OStep::Child(OTest::Name(name), p)
            }
            4 => {
                let p = preds(rng);
                OStep::Child(OTest::Star, p)
            }
            5 => {
                let p = preds(rng);
                OStep::Child(OTest::Text, p)
            }
            6 => {
                let name = if rng.random_bool(0.7) {
                    Some(ATTRS.choose(rng).unwrap().to_string())
                } else {
                    None
                };
                let p = preds(rng);
                OStep::Attr(name, p)
            }
            7 => OStep::Dot,
            8 => OStep::DotDot,
            _ => {
                let name = NAMES.choose(rng).unwrap().to_string();
                OStep::Child(OTest::Name(name), vec![])
            }
        };
        steps.push(step);
    }
    if matches!(steps.last(), Some(OStep::DescOrSelf)) {
        steps.push(OStep::Child(OTest::Star, vec![]));
    }
    OPath { absolute, steps }
}

fn rng_bool(rng: &mut impl Rng, p: f64) -> bool {
    rng.random_bool(p)
}

fn random_predicate(rng: &mut impl Rng, depth: usize) -> OExpr {
    match rng.random_range(0..8) {
        0 => OExpr::Num(rng.random_range(1..=3) as f64),
        1 => OExpr::Cmp("=", Box::new(OExpr::Position), Box::new(OExpr::Last)),
        2 => OExpr::Last,
        _ => random_expr(rng, depth),
    }
}

fn random_atom(rng: &mut impl Rng, depth: usize) -> OExpr {
    match rng.random_range(0..9) {
        0 => OExpr::Lit(VALUES.choose(rng).unwrap().to_string()),
        1 => OExpr::Num([0.0, 1.0, 2.0, 3.0, 10.0, 1.5][rng.random_range(0..6)]),
        2 => OExpr::Count(random_path(rng, depth)),
        3 => OExpr::Position,
        4 => OExpr::StringFn(if rng.random_bool(0.5) {
            None
        } else {
            Some(Box::new(OExpr::Path(random_path(rng, depth))))
        }),
        5 => OExpr::NumberFn(Some(Box::new(OExpr::Path(random_path(rng, depth))))),
        6 => OExpr::Name(if rng.random_bool(0.3) {
            None
        } else {
            Some(random_path(rng, depth))
        }),
        _ => OExpr::Path(random_path(rng, depth)),
    }
}

/// A random expression over the whole grammar.
pub fn random_expr(rng: &mut impl Rng, depth: usize) -> OExpr {
    if depth > 2 {
        return random_atom(rng, depth);
    }
    match rng.random_range(0..12) {
        0 => OExpr::Or(Box::new(random_expr(rng, depth + 1)), Box::new(random_expr(rng, depth + 1))),
        1 => OExpr::And(Box::new(random_expr(rng, depth + 1)), Box::new(random_expr(rng, depth + 1))),
        2..=4 => {
            let op = ["=", "!=", "<", "<=", ">", ">="][rng.random_range(0..6)];
            OExpr::Cmp(
                op,
                Box::new(random_atom(rng, depth + 1)),
                Box::new(random_atom(rng, depth + 1)),
            )
        }
        5 => OExpr::Not(Box::new(random_expr(rng, depth + 1))),
        6 => {
            let n = rng.random_range(2..=3);
            OExpr::Concat((0..n).map(|_| random_atom(rng, depth + 1)).collect())
        }
        _ => random_atom(rng, depth),
    }
}

// ---- evaluation --------------------------------------------------------

#[derive(Clone)]
struct Ctx {
    node: OId,
    pos: usize,
    size: usize,
}

fn str_to_num(s: &str) -> f64 {
    let t = s.trim_matches(|c: char| c == ' ' || c == '\t' || c == '\n' || c == '\r');
    let body = t.strip_prefix('-').unwrap_or(t);
    let valid = !body.is_empty()
        && body.chars().all(|c| c.is_ascii_digit() || c == '.')
        && body.matches('.').count() <= 1
        && body.chars().any(|c| c.is_ascii_digit());
    if valid {
        t.parse().unwrap()
    } else {
        f64::NAN
    }
}

fn num_to_str(n: f64) -> String {
    if n.is_nan() {
        "NaN".into()
    } else if n.is_infinite() {
        if n > 0.0 {
            "Infinity".into()
        } else {
            "-Infinity".into()
        }
    } else if n == 0.0 {
        "0".into()
    } else if n == n.trunc() && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

impl ODoc {
    fn to_str(&self, v: &OValue) -> String {
        match v {
            OValue::Str(s) => s.clone(),
            OValue::Num(n) => num_to_str(*n),
            OValue::Bool(b) => b.to_string(),
            OValue::Nodes(ns) => ns.first().map(|n| self.string_value(n)).unwrap_or_default(),
        }
    }

    fn to_num(&self, v: &OValue) -> f64 {
        match v {
            OValue::Num(n) => *n,
            OValue::Bool(b) => {
                if *b {
                    1.0
                } else {
                    0.0
                }
            }
            other => str_to_num(&self.to_str(other)),
        }
    }

    fn to_bool(v: &OValue) -> bool {
        match v {
            OValue::Nodes(ns) => !ns.is_empty(),
            OValue::Str(s) => !s.is_empty(),
            OValue::Num(n) => *n != 0.0 && !n.is_nan(),
            OValue::Bool(b) => *b,
        }
    }

    pub fn eval_at(&self, expr: &OExpr, node: OId) -> OValue {
        self.eval(expr, &Ctx { node, pos: 1, size: 1 })
    }

    fn eval(&self, expr: &OExpr, ctx: &Ctx) -> OValue {
        match expr {
            OExpr::Or(a, b) => OValue::Bool(Self::to_bool(&self.eval(a, ctx)) || Self::to_bool(&self.eval(b, ctx))),
            OExpr::And(a, b) => OValue::Bool(Self::to_bool(&self.eval(a, ctx)) && Self::to_bool(&self.eval(b, ctx))),
            OExpr::Cmp(op, a, b) => {
                let (l, r) = (self.eval(a, ctx), self.eval(b, ctx));
                OValue::Bool(self.cmp(op, &l, &r))
            }
            OExpr::Lit(s) => OValue::Str(s.clone()),
            OExpr::Num(n) => OValue::Num(*n),
            OExpr::Count(p) => OValue::Num(self.path(p, &ctx.node).len() as f64),
            OExpr::Not(e) => OValue::Bool(!Self::to_bool(&self.eval(e, ctx))),
            OExpr::Name(None) => OValue::Str(self.name(&ctx.node)),
            OExpr::Name(Some(p)) => OValue::Str(self.path(p, &ctx.node).first().map(|n| self.name(n)).unwrap_or_default()),
            OExpr::StringFn(None) => OValue::Str(self.string_value(&ctx.node)),
            OExpr::StringFn(Some(e)) => OValue::Str(self.to_str(&self.eval(e, ctx))),
            OExpr::NumberFn(None) => OValue::Num(str_to_num(&self.string_value(&ctx.node))),
            OExpr::NumberFn(Some(e)) => OValue::Num(self.to_num(&self.eval(e, ctx))),
            OExpr::Concat(args) => OValue::Str(args.iter().map(|a| self.to_str(&self.eval(a, ctx))).collect()),
            OExpr::Position => OValue::Num(ctx.pos as f64),
            OExpr::Last => OValue::Num(ctx.size as f64),
            OExpr::Path(p) => OValue::Nodes(self.path(p, &ctx.node)),
        }
    }

    fn cmp(&self, op: &str, l: &OValue, r: &OValue) -> bool {
        let num = |a: f64, b: f64| match op {
            "=" => a == b,
            "!=" => a != b,
            "<" => a < b,
            "<=" => a <= b,
            ">" => a > b,
            _ => a >= b,
        };
        let eq_op = op == "=" || op == "!=";
        match (l, r) {
            (OValue::Nodes(a), OValue::Nodes(b)) => a.iter().any(|x| {
                b.iter().any(|y| {
                    let (sx, sy) = (self.string_value(x), self.string_value(y));
                    if eq_op {
                        (sx == sy) == (op == "=")
                    } else {
                        num(str_to_num(&sx), str_to_num(&sy))
                    }
                })
            }),
            (OValue::Nodes(a), other) => self.cmp_ns(op, a, other, false),
            (other, OValue::Nodes(b)) => self.cmp_ns(op, b, other, true),
            _ => self.cmp_atoms(op, l, r),
        }
    }

    fn cmp_ns(&self, op: &str, ns: &[OId], other: &OValue, flipped: bool) -> bool {
        let go = |a: OValue| {
            if flipped {
                self.cmp_atoms(op, other, &a)
            } else {
                self.cmp_atoms(op, &a, other)
            }
        };
        match other {
            OValue::Bool(_) => go(OValue::Bool(!ns.is_empty())),
            OValue::Num(_) => ns.iter().any(|n| go(OValue::Num(str_to_num(&self.string_value(n))))),
            _ => ns.iter().any(|n| go(OValue::Str(self.string_value(n)))),
        }
    }

    fn cmp_atoms(&self, op: &str, l: &OValue, r: &OValue) -> bool {
        if op == "=" || op == "!=" {
            let eq = if matches!(l, OValue::Bool(_)) || matches!(r, OValue::Bool(_)) {
                Self::to_bool(l) == Self::to_bool(r)
            } else if matches!(l, OValue::Num(_)) || matches!(r, OValue::Num(_)) {
                self.to_num(l) == self.to_num(r)
            } else {
                self.to_str(l) == self.to_str(r)
            };
            return eq == (op == "=");
        }
        let (a, b) = (self.to_num(l), self.to_num(r));
        match op {
            "<" => a < b,
            "<=" => a <= b,
            ">" => a > b,
            _ => a >= b,
        }
    }

    fn path(&self, p: &OPath, start: &OId) -> Vec<OId> {
        let mut cur = if p.absolute {
            vec![OId {
                path: vec![],
                attr: None,
            }]
        } else {
            vec![start.clone()]
        };
        for step in &p.steps {
            let mut next: Vec<OId> = Vec::new();
            for c in &cur {
                let (cands, preds): (Vec<OId>, &[OExpr]) = match step {
                    OStep::Dot => (vec![c.clone()], &[]),
                    OStep::DotDot => {
                        let parent = if c.attr.is_some() {
                            Some(OId {
                                path: c.path.clone(),
                                attr: None,
                            })
                        } else if c.path.is_empty() {
                            None
                        } else {
                            Some(OId {
                                path: c.path[..c.path.len() - 1].to_vec(),
                                attr: None,
                            })
                        };
                        (parent.into_iter().collect(), &[])
                    }
                    OStep::DescOrSelf => (self.descendants_or_self(c), &[]),
                    OStep::Child(test, preds) => (
                        self.children_of(c)
                            .into_iter()
                            .filter(|k| match test {
                                OTest::Name(n) => self.is_element(k) && &self.name(k) == n,
                                OTest::Star => self.is_element(k),
                                OTest::Text => self.is_text(k),
                            })
                            .collect(),
                        preds,
                    ),
                    OStep::Attr(name, preds) => (
                        self.attrs_of(c)
                            .into_iter()
                            .filter(|(_, n)| name.as_ref().is_none_or(|w| w == n))
                            .map(|(id, _)| id)
                            .collect(),
                        preds,
                    ),
                };
                let mut cands = cands;
                for pred in preds {
                    let size = cands.len();
                    cands = cands
                        .into_iter()
                        .enumerate()
                        .filter(|(i, n)| {
                            let v = self.eval(
                                pred,
                                &Ctx {
                                    node: n.clone(),
                                    pos: i + 1,
                                    size,
                                },
                            );
                            match v {
                                OValue::Num(x) => x == (i + 1) as f64,
                                other => Self::to_bool(&other),
                            }
                        })
                        .map(|(_, n)| n)
                        .collect();
                }
                for n in cands {
                    if !next.contains(&n) {
                        next.push(n);
                    }
                }
            }
            next.sort();
            cur = next;
        }
        cur
    }
}

// ---- bridging library results -------------------------------------------

/// Child-index path of a library node.
pub fn oid_of(doc: &Document, n: NodeRef) -> OId {
    let mut path = Vec::new();
    let mut cur = n.node;
    while let Some(p) = doc.parent(cur) {
        let idx = doc.children(p).iter().position(|&c| c == cur).unwrap();
        path.push(idx);
        cur = p;
    }
    path.reverse();
    OId {
        path,
        attr: n.attr.map(|a| a as usize),
    }
}

/// Library node for an oracle id.
pub fn node_of(doc: &Document, id: &OId) -> NodeRef {
    let mut cur = doc.root();
    for &i in &id.path {
        cur = doc.children(cur)[i];
    }
    NodeRef {
        node: cur,
        attr: id.attr.map(|a| a as u32),
    }
}

pub fn to_ovalue(doc: &Document, v: Value) -> OValue {
    match v {
        Value::NodeSet(ns) => OValue::Nodes(ns.into_iter().map(|n| oid_of(doc, n)).collect()),
        Value::String(s) => OValue::Str(s),
        Value::Number(n) => OValue::Num(n),
        Value::Boolean(b) => OValue::Bool(b),
    }
}

/// Equality with NaN equal to itself.
pub fn same(a: &OValue, b: &OValue) -> bool {
    match (a, b) {
        (OValue::Num(x), OValue::Num(y)) => (x.is_nan() && y.is_nan()) || x == y,
        _ => a == b,
    }
}

// ---- equivalence run -----------------------------------------------------

/// Grammar features every equivalence run must exercise.
pub const COVERAGE: &[&str] = &[
    "count(",
    "not(",
    "name(",
    "string(",
    "number(",
    "concat(",
    "position()",
    "last()",
    " or ",
    " and ",
    " = ",
    " != ",
    " < ",
    " <= ",
    " > ",
    " >= ",
    "//",
    "*",
    "..",
    "./",
    "text()",
    "@",
    "[",
    "'",
];

pub struct EquivalenceReport {
    pub documents: usize,
    pub evaluations: usize,
    pub mismatches: Vec<String>,
    pub uncovered: Vec<&'static str>,
}

/// Compares library and oracle on `documents` seeded random documents of at
/// most 50 nodes, `per_doc` random expressions each, at the root and at a
/// random element.
pub fn run_equivalence(seed: u64, documents: usize, per_doc: usize) -> EquivalenceReport {
    use gridwatch_core::xpath::XPath;
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report = EquivalenceReport {
        documents,
        evaluations: 0,
        mismatches: Vec::new(),
        uncovered: Vec::new(),
    };
    let mut seen = vec![false; COVERAGE.len()];
    for _ in 0..documents {
        let odoc = ODoc::random(&mut rng, 50);
        let xml = odoc.to_xml();
        let doc = Document::parse(&xml).expect("generated documents are well-formed");
        let elements = odoc.element_ids();
        for _ in 0..per_doc {
            let expr = random_expr(&mut rng, 0);
            let src = expr.print();
            for (i, f) in COVERAGE.iter().enumerate() {
                seen[i] |= src.contains(f);
            }
            let xp = match XPath::parse(&src) {
                Ok(xp) => xp,
                Err(e) => {
                    report.mismatches.push(format!("{src}: rejected: {e}"));
                    continue;
                }
            };
            let contexts = [
                OId {
                    path: vec![],
                    attr: None,
                },
                elements.choose(&mut rng).unwrap().clone(),
            ];
            for ctx in contexts {
                let want = odoc.eval_at(&expr, ctx.clone());
                let got = to_ovalue(&doc, xp.evaluate_at(&doc, node_of(&doc, &ctx)));
                report.evaluations += 1;
                if !same(&want, &got) {
                    report
                        .mismatches
                        .push(format!("{src} at {:?} on {xml}: oracle {want:?}, library {got:?}", ctx.path));
                }
            }
        }
    }
    report.uncovered = COVERAGE.iter().zip(seen).filter(|(_, s)| !s).map(|(f, _)| *f).collect();
    report
}
