//! An XSLT 1.0 subset producing HTML fragments.
//!
//! Instructions: `stylesheet`/`transform`, `template match=`,
//! `apply-templates select?`, `value-of`, `for-each`, `if`,
//! `choose`/`when`/`otherwise`, `text`, and literal result elements whose
//! attributes may contain `{expr}` value templates. Everything else is
//! rejected when the stylesheet is loaded.
//!
//! Conflicts between templates use the XSLT default priorities (a bare name
//! test is 0, `*`/`text()`/`@*` is -0.5, anything longer is 0.5), the last
//! declared template winning ties. Built-in rules apply templates to the
//! children of the root and of elements, copy text, and output nothing for
//! attributes. All output text is escaped; there is no way to disable that.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::escape;
use crate::xml::{Document, NodeKind, XmlError};
use crate::xpath::eval::select;
use crate::xpath::{Context, Expr, LocationPath, NodeRef, NodeTest, Step, XPath, XPathError};

pub const XSLT_NAMESPACE: &str = "http://www.w3.org/1999/XSL/Transform";

/// Maximum nesting of template instantiations.
pub const MAX_DEPTH: usize = 256;

const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track", "wbr",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StylesheetError {
    #[error("stylesheet is not well-formed: {0}")]
    Xml(#[from] XmlError),
    #[error("root element must be xsl:stylesheet or xsl:transform bound to {XSLT_NAMESPACE}")]
    NotAStylesheet,
    #[error("unsupported instruction <{0}>")]
    UnsupportedInstruction(String),
    #[error("unsupported attribute {attribute:?} on <{element}>")]
    UnsupportedAttribute { element: String, attribute: String },
    #[error("<{element}> requires attribute {attribute:?}")]
    MissingAttribute { element: String, attribute: &'static str },
    #[error("<{element}> must not have content other than {allowed}")]
    UnexpectedContent { element: String, allowed: &'static str },
    #[error("invalid expression {expr:?} in <{element}>: {source}")]
    Expression {
        element: String,
        expr: String,
        source: XPathError,
    },
    #[error("expression {expr:?} in <{element}> must select nodes")]
    NotANodeSet { element: String, expr: String },
    #[error("unsupported match pattern {0:?}")]
    UnsupportedPattern(String),
    #[error("unbalanced brace in attribute value template {0:?}")]
    BadValueTemplate(String),
    #[error("stylesheet has no templates")]
    NoTemplates,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("template recursion deeper than {MAX_DEPTH} frames")]
    DepthExceeded,
}

#[derive(Debug, Clone, PartialEq)]
enum AvtPart {
    Literal(String),
    Expr(XPath),
}

#[derive(Debug, Clone, PartialEq)]
enum Instruction {
    Text(String),
    ValueOf(XPath),
    ApplyTemplates(Option<XPath>),
    ForEach(XPath, Vec<Instruction>),
    If(XPath, Vec<Instruction>),
    Choose {
        whens: Vec<(XPath, Vec<Instruction>)>,
        otherwise: Vec<Instruction>,
    },
    Element {
        name: String,
        attributes: Vec<(String, Vec<AvtPart>)>,
        body: Vec<Instruction>,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Template {
    pattern: LocationPath,
    priority: f64,
    body: Vec<Instruction>,
}

/// A loaded, immutable stylesheet.
#[derive(Debug, Clone, PartialEq)]
pub struct Stylesheet {
    /// Highest priority first; within a priority, later declarations first.
    templates: Vec<Template>,
}

impl Stylesheet {
    pub fn parse(text: &str) -> Result<Stylesheet, StylesheetError> {
        Stylesheet::from_document(&Document::parse(text)?)
    }

    pub fn from_document(doc: &Document) -> Result<Stylesheet, StylesheetError> {
        Loader::new(doc)?.load()
    }

    pub fn template_count(&self) -> usize {
        self.templates.len()
    }

    /// Transforms `doc` into an HTML fragment.
    pub fn apply(&self, doc: &Document) -> Result<String, TransformError> {
        let mut run = Run {
            sheet: self,
            doc,
            out: String::new(),
            depth: 0,
        };
        run.apply_to(&[NodeRef::node(doc.root())])?;
        Ok(run.out)
    }
}

pub fn apply_stylesheet(doc: &Document, sheet: &Stylesheet) -> Result<String, TransformError> {
    sheet.apply(doc)
}

struct Loader<'d> {
    doc: &'d Document,
    prefix: String,
}

impl<'d> Loader<'d> {
    fn new(doc: &'d Document) -> Result<Loader<'d>, StylesheetError> {
        let root = doc.root_element();
        let prefix = doc
            .attributes(root)
            .iter()
            .find(|a| a.value == XSLT_NAMESPACE && a.name.starts_with("xmlns:"))
            .map(|a| a.name["xmlns:".len()..].to_string())
            .ok_or(StylesheetError::NotAStylesheet)?;
        Ok(Loader { doc, prefix })
    }

    /// The local name if `name` is in the XSLT namespace.
    fn xsl_name<'n>(&self, name: &'n str) -> Option<&'n str> {
        name.strip_prefix(self.prefix.as_str())?.strip_prefix(':')
    }

    fn load(&self) -> Result<Stylesheet, StylesheetError> {
        let doc = self.doc;
        let root = doc.root_element();
        let root_name = doc.name(root).unwrap_or_default();
        if !matches!(self.xsl_name(root_name), Some("stylesheet" | "transform")) {
            return Err(StylesheetError::NotAStylesheet);
        }
        self.check_attributes(root, &["version", "exclude-result-prefixes"])?;
        let mut declared = Vec::new();
        for &child in doc.children(root) {
            match doc.kind(child) {
                NodeKind::Text(t) if is_whitespace(t) => {}
                NodeKind::Element { name, .. } if self.xsl_name(name) == Some("template") => {
                    declared.push(self.template(child)?);
                }
                NodeKind::Element { name, .. } => return Err(StylesheetError::UnsupportedInstruction(name.clone())),
                _ => {
                    return Err(StylesheetError::UnexpectedContent {
                        element: root_name.to_string(),
                        allowed: "templates",
                    })
                }
            }
        }
        if declared.is_empty() {
            return Err(StylesheetError::NoTemplates);
        }
        // Stable sort on priority over the reversed declaration order puts the
        // last-declared template first among equals.
        declared.reverse();
        declared.sort_by(|a, b| b.priority.total_cmp(&a.priority));
        Ok(Stylesheet { templates: declared })
    }

    /// Rejects attributes outside `allowed` (namespace declarations are
    /// always allowed).
    fn check_attributes(&self, el: crate::xml::NodeId, allowed: &[&str]) -> Result<(), StylesheetError> {
        for a in self.doc.attributes(el) {
            if a.name == "xmlns" || a.name.starts_with("xmlns:") {
                continue;
            }
            if !allowed.contains(&a.name.as_str()) {
                return Err(StylesheetError::UnsupportedAttribute {
                    element: self.doc.name(el).unwrap_or_default().to_string(),
                    attribute: a.name.clone(),
                });
            }
        }
        Ok(())
    }

    fn required(&self, el: crate::xml::NodeId, attribute: &'static str) -> Result<&'d str, StylesheetError> {
        self.doc
            .attribute(el, attribute)
            .ok_or_else(|| StylesheetError::MissingAttribute {
                element: self.doc.name(el).unwrap_or_default().to_string(),
                attribute,
            })
    }

    fn expression(&self, el: crate::xml::NodeId, src: &str) -> Result<XPath, StylesheetError> {
        XPath::parse(src).map_err(|source| StylesheetError::Expression {
            element: self.doc.name(el).unwrap_or_default().to_string(),
            expr: src.to_string(),
            source,
        })
    }

    fn node_set_expression(&self, el: crate::xml::NodeId, src: &str) -> Result<XPath, StylesheetError> {
        let xp = self.expression(el, src)?;
        if xp.as_path().is_none() {
            return Err(StylesheetError::NotANodeSet {
                element: self.doc.name(el).unwrap_or_default().to_string(),
                expr: src.to_string(),
            });
        }
        Ok(xp)
    }

    fn template(&self, el: crate::xml::NodeId) -> Result<Template, StylesheetError> {
        self.check_attributes(el, &["match"])?;
        let src = self.required(el, "match")?;
        let pattern = parse_pattern(src)?;
        let priority = default_priority(&pattern);
        Ok(Template {
            pattern,
            priority,
            body: self.body(el)?,
        })
    }

    fn body(&self, parent: crate::xml::NodeId) -> Result<Vec<Instruction>, StylesheetError> {
        let doc = self.doc;
        let mut out = Vec::new();
        for &child in doc.children(parent) {
            match doc.kind(child) {
                NodeKind::Text(t) if is_whitespace(t) => {}
                NodeKind::Text(t) => out.push(Instruction::Text(t.clone())),
                NodeKind::Element { name, .. } => out.push(match self.xsl_name(name) {
                    Some(local) => self.instruction(child, local)?,
                    None => self.literal_element(child, name)?,
                }),
                NodeKind::Root => unreachable!("root is never a child"),
            }
        }
        Ok(out)
    }

    fn instruction(&self, el: crate::xml::NodeId, local: &str) -> Result<Instruction, StylesheetError> {
        let doc = self.doc;
        let name = || doc.name(el).unwrap_or_default().to_string();
        let no_content = |allowed| -> Result<(), StylesheetError> {
            if doc.children(el).iter().all(|&c| doc.text(c).is_some_and(is_whitespace)) {
                Ok(())
            } else {
                Err(StylesheetError::UnexpectedContent {
                    element: name(),
                    allowed,
                })
            }
        };
        Ok(match local {
            "value-of" => {
                self.check_attributes(el, &["select"])?;
                no_content("nothing")?;
                Instruction::ValueOf(self.expression(el, self.required(el, "select")?)?)
            }
            "apply-templates" => {
                self.check_attributes(el, &["select"])?;
                no_content("nothing")?;
                let select = match doc.attribute(el, "select") {
                    Some(src) => Some(self.node_set_expression(el, src)?),
                    None => None,
                };
                Instruction::ApplyTemplates(select)
            }
            "for-each" => {
                self.check_attributes(el, &["select"])?;
                let select = self.node_set_expression(el, self.required(el, "select")?)?;
                Instruction::ForEach(select, self.body(el)?)
            }
            "if" => {
                self.check_attributes(el, &["test"])?;
                let test = self.expression(el, self.required(el, "test")?)?;
                Instruction::If(test, self.body(el)?)
            }
            "choose" => {
                self.check_attributes(el, &[])?;
                self.choose(el)?
            }
            "text" => {
                self.check_attributes(el, &[])?;
                let mut text = String::new();
                for &c in doc.children(el) {
                    match doc.text(c) {
                        Some(t) => text.push_str(t),
                        None => {
                            return Err(StylesheetError::UnexpectedContent {
                                element: name(),
                                allowed: "text",
                            })
                        }
                    }
                }
                Instruction::Text(text)
            }
            _ => return Err(StylesheetError::UnsupportedInstruction(name())),
        })
    }

    fn choose(&self, el: crate::xml::NodeId) -> Result<Instruction, StylesheetError> {
        let doc = self.doc;
        let mut whens = Vec::new();
        let mut otherwise = None;
        let bad = || StylesheetError::UnexpectedContent {
            element: doc.name(el).unwrap_or_default().to_string(),
            allowed: "when elements followed by an optional otherwise",
        };
        for &c in doc.children(el) {
            match doc.kind(c) {
                NodeKind::Text(t) if is_whitespace(t) => {}
                NodeKind::Element { name, .. } => match self.xsl_name(name) {
                    Some("when") if otherwise.is_none() => {
                        self.check_attributes(c, &["test"])?;
                        let test = self.expression(c, self.required(c, "test")?)?;
                        whens.push((test, self.body(c)?));
                    }
                    Some("otherwise") if otherwise.is_none() && !whens.is_empty() => {
                        self.check_attributes(c, &[])?;
                        otherwise = Some(self.body(c)?);
                    }
                    Some("when" | "otherwise") => return Err(bad()),
                    _ => return Err(StylesheetError::UnsupportedInstruction(name.clone())),
                },
                _ => return Err(bad()),
            }
        }
        if whens.is_empty() {
            return Err(bad());
        }
        Ok(Instruction::Choose {
            whens,
            otherwise: otherwise.unwrap_or_default(),
        })
    }

    fn literal_element(&self, el: crate::xml::NodeId, name: &str) -> Result<Instruction, StylesheetError> {
        let mut attributes = Vec::new();
        for a in self.doc.attributes(el) {
            if a.name == "xmlns" || a.name.starts_with("xmlns:") {
                continue;
            }
            if self.xsl_name(&a.name).is_some() {
                return Err(StylesheetError::UnsupportedAttribute {
                    element: name.to_string(),
                    attribute: a.name.clone(),
                });
            }
            attributes.push((a.name.clone(), parse_avt(&a.value, name)?));
        }
        Ok(Instruction::Element {
            name: name.to_string(),
            attributes,
            body: self.body(el)?,
        })
    }
}

fn is_whitespace(s: &str) -> bool {
    s.chars().all(|c| matches!(c, ' ' | '\t' | '\n' | '\r'))
}

fn parse_avt(value: &str, element: &str) -> Result<Vec<AvtPart>, StylesheetError> {
    let bad = || StylesheetError::BadValueTemplate(value.to_string());
    let mut parts = Vec::new();
    let mut literal = String::new();
    let mut rest = value;
    while let Some(c) = rest.chars().next() {
        if rest.starts_with("{{") {
            literal.push('{');
            rest = &rest[2..];
        } else if rest.starts_with("}}") {
            literal.push('}');
            rest = &rest[2..];
        } else if c == '}' {
            return Err(bad());
        } else if c == '{' {
            // Find the closing brace, skipping string literals.
            let mut quote = None;
            let mut end = None;
            for (i, ch) in rest.char_indices().skip(1) {
                match quote {
                    Some(q) if ch == q => quote = None,
                    Some(_) => {}
                    None if ch == '\'' || ch == '"' => quote = Some(ch),
                    None if ch == '}' => {
                        end = Some(i);
                        break;
                    }
                    None => {}
                }
            }
            let end = end.ok_or_else(bad)?;
            let src = &rest[1..end];
            let expr = XPath::parse(src).map_err(|source| StylesheetError::Expression {
                element: element.to_string(),
                expr: src.to_string(),
                source,
            })?;
            if !literal.is_empty() {
                parts.push(AvtPart::Literal(core::mem::take(&mut literal)));
            }
            parts.push(AvtPart::Expr(expr));
            rest = &rest[end + 1..];
        } else {
            literal.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    if !literal.is_empty() {
        parts.push(AvtPart::Literal(literal));
    }
    Ok(parts)
}

fn parse_pattern(src: &str) -> Result<LocationPath, StylesheetError> {
    let unsupported = || StylesheetError::UnsupportedPattern(src.to_string());
    let xp = XPath::parse(src).map_err(|_| unsupported())?;
    let path = xp.as_path().ok_or_else(unsupported)?.clone();
    if path.steps.iter().any(|s| matches!(s, Step::SelfNode | Step::Parent)) {
        return Err(unsupported());
    }
    Ok(path)
}

fn default_priority(pattern: &LocationPath) -> f64 {
    match pattern.steps.as_slice() {
        [Step::Axis { test, predicates, .. }] if !pattern.absolute && predicates.is_empty() => match test {
            NodeTest::Name(_) => 0.0,
            NodeTest::Any | NodeTest::Text => -0.5,
        },
        _ => 0.5,
    }
}

/// Whether `node` matches `pattern`: some ancestor (the root for absolute
/// patterns) selects it.
fn matches(doc: &Document, pattern: &LocationPath, node: NodeRef) -> bool {
    if pattern.steps.is_empty() {
        return node == NodeRef::node(doc.root());
    }
    if let Some(Step::Axis {
        axis,
        test,
        predicates: _,
    }) = pattern.steps.last()
    {
        // Cheap rejection on the final step's node test.
        let kind_ok = match (axis, node.is_attribute()) {
            (crate::xpath::Axis::Attribute, true) => match test {
                NodeTest::Name(n) => node.name(doc) == n,
                NodeTest::Any => true,
                NodeTest::Text => false,
            },
            (crate::xpath::Axis::Child, false) => match (doc.kind(node.node), test) {
                (NodeKind::Element { name, .. }, NodeTest::Name(n)) => name == n,
                (NodeKind::Element { .. }, NodeTest::Any) => true,
                (NodeKind::Text(_), NodeTest::Text) => true,
                _ => false,
            },
            _ => false,
        };
        if !kind_ok {
            return false;
        }
    }
    let selects = |ctx: NodeRef| select(doc, pattern, ctx).binary_search(&node).is_ok();
    if pattern.absolute {
        return selects(NodeRef::node(doc.root()));
    }
    let mut ancestor = if node.is_attribute() {
        Some(node.node)
    } else {
        doc.parent(node.node)
    };
    while let Some(a) = ancestor {
        if selects(NodeRef::node(a)) {
            return true;
        }
        ancestor = doc.parent(a);
    }
    false
}

struct Run<'a> {
    sheet: &'a Stylesheet,
    doc: &'a Document,
    out: String,
    depth: usize,
}

impl Run<'_> {
    fn apply_to(&mut self, nodes: &[NodeRef]) -> Result<(), TransformError> {
        let size = nodes.len();
        for (i, &node) in nodes.iter().enumerate() {
            let ctx = Context {
                node,
                position: i + 1,
                size,
            };
            self.depth += 1;
            if self.depth > MAX_DEPTH {
                return Err(TransformError::DepthExceeded);
            }
            let template = self.sheet.templates.iter().find(|t| matches(self.doc, &t.pattern, node));
            match template {
                Some(t) => self.execute(&t.body, ctx)?,
                None => self.builtin(node)?,
            }
            self.depth -= 1;
        }
        Ok(())
    }

    fn builtin(&mut self, node: NodeRef) -> Result<(), TransformError> {
        if node.is_attribute() {
            return Ok(());
        }
        match self.doc.kind(node.node) {
            NodeKind::Text(t) => {
                escape::push_text(&mut self.out, t);
                Ok(())
            }
            _ => {
                let children: Vec<NodeRef> = self.doc.children(node.node).iter().map(|&c| NodeRef::node(c)).collect();
                self.apply_to(&children)
            }
        }
    }

    fn execute(&mut self, body: &[Instruction], ctx: Context) -> Result<(), TransformError> {
        for instruction in body {
            match instruction {
                Instruction::Text(t) => escape::push_text(&mut self.out, t),
                Instruction::ValueOf(xp) => {
                    let s = xp.evaluate(self.doc, ctx).to_string_value(self.doc);
                    escape::push_text(&mut self.out, &s);
                }
                Instruction::ApplyTemplates(select) => {
                    let nodes = match select {
                        Some(xp) => self.select(xp, ctx),
                        None => self
                            .doc
                            .children(ctx.node.node)
                            .iter()
                            .filter(|_| !ctx.node.is_attribute())
                            .map(|&c| NodeRef::node(c))
                            .collect(),
                    };
                    self.apply_to(&nodes)?;
                }
                Instruction::ForEach(xp, inner) => {
                    let nodes = self.select(xp, ctx);
                    let size = nodes.len();
                    for (i, node) in nodes.into_iter().enumerate() {
                        let inner_ctx = Context {
                            node,
                            position: i + 1,
                            size,
                        };
                        self.execute(inner, inner_ctx)?;
                    }
                }
                Instruction::If(test, inner) => {
                    if test.evaluate(self.doc, ctx).to_boolean() {
                        self.execute(inner, ctx)?;
                    }
                }
                Instruction::Choose { whens, otherwise } => {
                    let chosen = whens
                        .iter()
                        .find(|(test, _)| test.evaluate(self.doc, ctx).to_boolean())
                        .map_or(otherwise.as_slice(), |(_, b)| b.as_slice());
                    self.execute(chosen, ctx)?;
                }
                Instruction::Element { name, attributes, body } => {
                    self.out.push('<');
                    self.out.push_str(name);
                    for (attr, parts) in attributes {
                        self.out.push(' ');
                        self.out.push_str(attr);
                        self.out.push_str("=\"");
                        for part in parts {
                            match part {
                                AvtPart::Literal(s) => escape::push_attr(&mut self.out, s),
                                AvtPart::Expr(xp) => {
                                    let s = xp.evaluate(self.doc, ctx).to_string_value(self.doc);
                                    escape::push_attr(&mut self.out, &s);
                                }
                            }
                        }
                        self.out.push('"');
                    }
                    if body.is_empty() && VOID_ELEMENTS.contains(&name.as_str()) {
                        self.out.push_str("/>");
                    } else {
                        self.out.push('>');
                        self.execute(body, ctx)?;
                        self.out.push_str("</");
                        self.out.push_str(name);
                        self.out.push('>');
                    }
                }
            }
        }
        Ok(())
    }

    fn select(&self, xp: &XPath, ctx: Context) -> Vec<NodeRef> {
        match xp.expr() {
            Expr::Path(p) => select(self.doc, p, ctx.node),
            _ => unreachable!("node-set expressions are checked at load"),
        }
    }
}
