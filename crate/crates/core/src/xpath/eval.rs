use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Axis, CompareOp, Expr, Function, LocationPath, NodeTest, Step};
use crate::xml::{Document, NodeId, NodeKind};

/// A node in an XPath node-set: a tree node or an attribute of an element.
///
/// The derived ordering is document order: an element precedes its
/// attributes, which precede its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeRef {
    pub node: NodeId,
    pub attr: Option<u32>,
}

impl NodeRef {
    pub fn node(node: NodeId) -> NodeRef {
        NodeRef { node, attr: None }
    }

    pub fn attribute(owner: NodeId, index: usize) -> NodeRef {
        NodeRef {
            node: owner,
            attr: Some(index as u32),
        }
    }

    pub fn is_attribute(self) -> bool {
        self.attr.is_some()
    }

    pub fn string_value(self, doc: &Document) -> String {
        match self.attr {
            Some(i) => doc.attributes(self.node)[i as usize].value.clone(),
            None => doc.string_value(self.node),
        }
    }

    /// Element or attribute name; empty for text and the root.
    pub fn name(self, doc: &Document) -> &str {
        match self.attr {
            Some(i) => &doc.attributes(self.node)[i as usize].name,
            None => doc.name(self.node).unwrap_or(""),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    NodeSet(Vec<NodeRef>),
    String(String),
    Number(f64),
    Boolean(bool),
}

impl Value {
    pub fn to_boolean(&self) -> bool {
        match self {
            Value::NodeSet(ns) => !ns.is_empty(),
            Value::String(s) => !s.is_empty(),
            Value::Number(n) => *n != 0.0 && !n.is_nan(),
            Value::Boolean(b) => *b,
        }
    }

    pub fn to_number(&self, doc: &Document) -> f64 {
        match self {
            Value::Number(n) => *n,
            Value::Boolean(b) => f64::from(u8::from(*b)),
            Value::String(s) => string_to_number(s),
            Value::NodeSet(_) => string_to_number(&self.to_string_value(doc)),
        }
    }

    pub fn to_string_value(&self, doc: &Document) -> String {
        match self {
            Value::String(s) => s.clone(),
            Value::Number(n) => number_to_string(*n),
            Value::Boolean(b) => b.to_string(),
            Value::NodeSet(ns) => ns.first().map_or_else(String::new, |n| n.string_value(doc)),
        }
    }

    pub fn into_nodes(self) -> Option<Vec<NodeRef>> {
        match self {
            Value::NodeSet(ns) => Some(ns),
            _ => None,
        }
    }
}

/// XPath `number()` conversion of a string.
pub fn string_to_number(s: &str) -> f64 {
    let t = s.trim_matches(|c| matches!(c, ' ' | '\t' | '\n' | '\r'));
    let digits = t.strip_prefix('-').unwrap_or(t);
    let mut seen_digit = false;
    let mut seen_dot = false;
    for c in digits.chars() {
        match c {
            '0'..='9' => seen_digit = true,
            '.' if !seen_dot => seen_dot = true,
            _ => return f64::NAN,
        }
    }
    if !seen_digit {
        return f64::NAN;
    }
    t.parse().unwrap_or(f64::NAN)
}

/// XPath `string()` conversion of a number.
pub fn number_to_string(n: f64) -> String {
    if n.is_nan() {
        "NaN".to_string()
    } else if n.is_infinite() {
        if n > 0.0 { "Infinity" } else { "-Infinity" }.to_string()
    } else if n == 0.0 {
        "0".to_string()
    } else {
        // Display never uses exponent notation and prints integral values
        // without a fractional part.
        alloc::format!("{n}")
    }
}

/// Evaluation context: node, proximity position and size (1-based).
#[derive(Debug, Clone, Copy)]
pub struct Context {
    pub node: NodeRef,
    pub position: usize,
    pub size: usize,
}

impl Context {
    pub fn single(node: NodeRef) -> Context {
        Context {
            node,
            position: 1,
            size: 1,
        }
    }
}

pub(super) fn evaluate(doc: &Document, expr: &Expr, ctx: Context) -> Value {
    match expr {
        Expr::Or(l, r) => Value::Boolean(evaluate(doc, l, ctx).to_boolean() || evaluate(doc, r, ctx).to_boolean()),
        Expr::And(l, r) => Value::Boolean(evaluate(doc, l, ctx).to_boolean() && evaluate(doc, r, ctx).to_boolean()),
        Expr::Compare(op, l, r) => {
            let lv = evaluate(doc, l, ctx);
            let rv = evaluate(doc, r, ctx);
            Value::Boolean(compare(doc, *op, &lv, &rv))
        }
        Expr::Literal(s) => Value::String(s.clone()),
        Expr::Number(n) => Value::Number(*n),
        Expr::Call(f, args) => call(doc, *f, args, ctx),
        Expr::Path(p) => Value::NodeSet(select(doc, p, ctx.node)),
    }
}

fn call(doc: &Document, f: Function, args: &[Expr], ctx: Context) -> Value {
    let arg = |i: usize| evaluate(doc, &args[i], ctx);
    match f {
        Function::Count => Value::Number(arg(0).into_nodes().map_or(0, |ns| ns.len()) as f64),
        Function::Not => Value::Boolean(!arg(0).to_boolean()),
        Function::Name => {
            let first = if args.is_empty() {
                Some(ctx.node)
            } else {
                arg(0).into_nodes().and_then(|ns| ns.first().copied())
            };
            Value::String(first.map_or("", |n| n.name(doc)).to_string())
        }
        Function::String => Value::String(if args.is_empty() {
            ctx.node.string_value(doc)
        } else {
            arg(0).to_string_value(doc)
        }),
        Function::Number => Value::Number(if args.is_empty() {
            string_to_number(&ctx.node.string_value(doc))
        } else {
            arg(0).to_number(doc)
        }),
        Function::Concat => {
            let mut out = String::new();
            for i in 0..args.len() {
                out.push_str(&arg(i).to_string_value(doc));
            }
            Value::String(out)
        }
        Function::Position => Value::Number(ctx.position as f64),
        Function::Last => Value::Number(ctx.size as f64),
    }
}

fn compare(doc: &Document, op: CompareOp, l: &Value, r: &Value) -> bool {
    use Value::*;
    match (l, r) {
        (NodeSet(a), NodeSet(b)) => {
            let bs: Vec<alloc::string::String> = b.iter().map(|n| n.string_value(doc)).collect();
            a.iter().any(|n| {
                let sa = n.string_value(doc);
                bs.iter().any(|sb| compare_strings(op, &sa, sb))
            })
        }
        (NodeSet(a), other) => compare_nodeset_with(doc, op, a, other, false),
        (other, NodeSet(b)) => compare_nodeset_with(doc, op, b, other, true),
        _ => compare_atomic(doc, op, l, r),
    }
}

/// One side is a node-set, the other an atomic value. `flipped` means the
/// node-set is the right operand.
fn compare_nodeset_with(doc: &Document, op: CompareOp, ns: &[NodeRef], other: &Value, flipped: bool) -> bool {
    let apply = |a: &Value, b: &Value| {
        if flipped {
            compare_atomic(doc, op, b, a)
        } else {
            compare_atomic(doc, op, a, b)
        }
    };
    match other {
        Value::Boolean(_) => apply(&Value::Boolean(!ns.is_empty()), other),
        Value::Number(_) => ns
            .iter()
            .any(|n| apply(&Value::Number(string_to_number(&n.string_value(doc))), other)),
        _ => ns.iter().any(|n| apply(&Value::String(n.string_value(doc)), other)),
    }
}

fn compare_atomic(doc: &Document, op: CompareOp, l: &Value, r: &Value) -> bool {
    match op {
        CompareOp::Eq | CompareOp::Ne => {
            let eq = if matches!(l, Value::Boolean(_)) || matches!(r, Value::Boolean(_)) {
                l.to_boolean() == r.to_boolean()
            } else if matches!(l, Value::Number(_)) || matches!(r, Value::Number(_)) {
                l.to_number(doc) == r.to_number(doc)
            } else {
                l.to_string_value(doc) == r.to_string_value(doc)
            };
            eq == (op == CompareOp::Eq)
        }
        _ => compare_numbers(op, l.to_number(doc), r.to_number(doc)),
    }
}

fn compare_strings(op: CompareOp, a: &str, b: &str) -> bool {
    match op {
        CompareOp::Eq => a == b,
        CompareOp::Ne => a != b,
        _ => compare_numbers(op, string_to_number(a), string_to_number(b)),
    }
}

fn compare_numbers(op: CompareOp, a: f64, b: f64) -> bool {
    match op {
        CompareOp::Eq => a == b,
        CompareOp::Ne => a != b,
        CompareOp::Lt => a < b,
        CompareOp::Le => a <= b,
        CompareOp::Gt => a > b,
        CompareOp::Ge => a >= b,
    }
}

/// Evaluates a location path from `start`, returning nodes in document order.
pub(crate) fn select(doc: &Document, path: &LocationPath, start: NodeRef) -> Vec<NodeRef> {
    let mut current = alloc::vec![if path.absolute { NodeRef::node(doc.root()) } else { start }];
    for step in &path.steps {
        let mut next = Vec::new();
        for &ctx in &current {
            apply_step(doc, step, ctx, &mut next);
        }
        next.sort_unstable();
        next.dedup();
        current = next;
    }
    current
}

fn apply_step(doc: &Document, step: &Step, ctx: NodeRef, out: &mut Vec<NodeRef>) {
    match step {
        Step::SelfNode => out.push(ctx),
        Step::Parent => {
            if ctx.is_attribute() {
                out.push(NodeRef::node(ctx.node));
            } else if let Some(p) = doc.parent(ctx.node) {
                out.push(NodeRef::node(p));
            }
        }
        Step::DescendantOrSelf => {
            out.push(ctx);
            if !ctx.is_attribute() {
                out.extend(doc.descendants(ctx.node).map(NodeRef::node));
            }
        }
        Step::Axis { axis, test, predicates } => {
            if ctx.is_attribute() {
                return;
            }
            let mut candidates: Vec<NodeRef> = match axis {
                Axis::Child => doc
                    .children(ctx.node)
                    .iter()
                    .copied()
                    .filter(|&c| child_matches(doc, c, test))
                    .map(NodeRef::node)
                    .collect(),
                Axis::Attribute => doc
                    .attributes(ctx.node)
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| match test {
                        NodeTest::Name(n) => a.name == *n,
                        NodeTest::Any => true,
                        NodeTest::Text => false,
                    })
                    .map(|(i, _)| NodeRef::attribute(ctx.node, i))
                    .collect(),
            };
            for predicate in predicates {
                candidates = filter(doc, predicate, candidates);
            }
            out.extend(candidates);
        }
    }
}

fn child_matches(doc: &Document, child: NodeId, test: &NodeTest) -> bool {
    match (doc.kind(child), test) {
        (NodeKind::Element { name, .. }, NodeTest::Name(n)) => name == n,
        (NodeKind::Element { .. }, NodeTest::Any) => true,
        (NodeKind::Text(_), NodeTest::Text) => true,
        _ => false,
    }
}

/// Applies one predicate to a candidate list in axis order.
fn filter(doc: &Document, predicate: &Expr, nodes: Vec<NodeRef>) -> Vec<NodeRef> {
    let size = nodes.len();
    nodes
        .into_iter()
        .enumerate()
        .filter(|&(i, node)| {
            let ctx = Context {
                node,
                position: i + 1,
                size,
            };
            match evaluate(doc, predicate, ctx) {
                Value::Number(n) => n == (i + 1) as f64,
                v => v.to_boolean(),
            }
        })
        .map(|(_, n)| n)
        .collect()
}
