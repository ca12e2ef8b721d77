//! Namespace-unaware XML documents.
//!
//! A [`Document`] is an arena of nodes in document order: the root node is
//! always [`NodeId`] 0, and every node's id is greater than its parent's and
//! smaller than its following siblings'. Comments, processing instructions and
//! the XML declaration are dropped while parsing; adjacent text is merged.

mod parser;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::escape;

pub use parser::{XmlError, XmlErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Root,
    Element { name: String, attributes: Vec<Attribute> },
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    parent: Option<NodeId>,
    kind: NodeKind,
    children: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    nodes: Vec<Node>,
}

impl Document {
    /// Parses `text` as a standalone XML document.
    pub fn parse(text: &str) -> Result<Document, XmlError> {
        parser::parse(text)
    }

    fn empty() -> Document {
        Document {
            nodes: alloc::vec![Node {
                parent: None,
                kind: NodeKind::Root,
                children: Vec::new(),
            }],
        }
    }

    fn push(&mut self, parent: NodeId, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            parent: Some(parent),
            kind,
            children: Vec::new(),
        });
        self.nodes[parent.index()].children.push(id);
        id
    }

    /// Appends text under `parent`, merging with a directly preceding text node.
    fn push_text(&mut self, parent: NodeId, text: &str) {
        if let Some(&last) = self.nodes[parent.index()].children.last() {
            // Merging is only valid if nothing was created after `last`, which
            // holds because text never has descendants and `last` is the most
            // recently pushed child.
            if last.index() == self.nodes.len() - 1 {
                if let NodeKind::Text(existing) = &mut self.nodes[last.index()].kind {
                    existing.push_str(text);
                    return;
                }
            }
        }
        self.push(parent, NodeKind::Text(String::from(text)));
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    /// The single element child of the root node.
    pub fn root_element(&self) -> NodeId {
        self.nodes[0]
            .children
            .iter()
            .copied()
            .find(|&c| self.is_element(c))
            .expect("a parsed document always has a root element")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kind(&self, id: NodeId) -> &NodeKind {
        &self.nodes[id.index()].kind
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.index()].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].children
    }

    pub fn is_element(&self, id: NodeId) -> bool {
        matches!(self.kind(id), NodeKind::Element { .. })
    }

    pub fn name(&self, id: NodeId) -> Option<&str> {
        match self.kind(id) {
            NodeKind::Element { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn attributes(&self, id: NodeId) -> &[Attribute] {
        match self.kind(id) {
            NodeKind::Element { attributes, .. } => attributes,
            _ => &[],
        }
    }

    pub fn attribute(&self, id: NodeId, name: &str) -> Option<&str> {
        self.attributes(id).iter().find(|a| a.name == name).map(|a| a.value.as_str())
    }

    pub fn text(&self, id: NodeId) -> Option<&str> {
        match self.kind(id) {
            NodeKind::Text(t) => Some(t),
            _ => None,
        }
    }

    /// All nodes below `id` in document order, excluding `id` itself.
    pub fn descendants(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        // Descendants occupy the contiguous id range up to the next node that
        // is not below `id`.
        let start = id.index() + 1;
        let end = self.subtree_end(id);
        (start..end).map(|i| NodeId(i as u32))
    }

    fn subtree_end(&self, mut id: NodeId) -> usize {
        loop {
            let node = &self.nodes[id.index()];
            match node.children.last() {
                Some(&last) => id = last,
                None => return id.index() + 1,
            }
        }
    }

    /// The XPath string-value: concatenated descendant text for elements and
    /// the root, the content for text nodes.
    pub fn string_value(&self, id: NodeId) -> String {
        match self.kind(id) {
            NodeKind::Text(t) => t.clone(),
            _ => {
                let mut out = String::new();
                for d in self.descendants(id) {
                    if let NodeKind::Text(t) = self.kind(d) {
                        out.push_str(t);
                    }
                }
                out
            }
        }
    }

    /// Text nodes in document order joined by single spaces.
    pub fn text_content_joined(&self) -> String {
        let mut out = String::new();
        for d in self.descendants(self.root()) {
            if let NodeKind::Text(t) = self.kind(d) {
                if !out.is_empty() {
                    out.push(' ');
                }
                out.push_str(t);
            }
        }
        out
    }

    /// Serializes the document back to XML text (no declaration).
    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        self.write_node(self.root_element(), &mut out);
        out
    }

    fn write_node(&self, id: NodeId, out: &mut String) {
        match self.kind(id) {
            NodeKind::Root => {
                for &c in self.children(id) {
                    self.write_node(c, out);
                }
            }
            NodeKind::Text(t) => escape::push_text(out, t),
            NodeKind::Element { name, attributes } => {
                out.push('<');
                out.push_str(name);
                for a in attributes {
                    out.push(' ');
                    out.push_str(&a.name);
                    out.push_str("=\"");
                    push_attr_exact(out, &a.value);
                    out.push('"');
                }
                let children = self.children(id);
                if children.is_empty() {
                    out.push_str("/>");
                } else {
                    out.push('>');
                    for &c in children {
                        self.write_node(c, out);
                    }
                    out.push_str("</");
                    out.push_str(name);
                    out.push('>');
                }
            }
        }
    }
}

// Attribute whitespace would be normalized on reparse, so it is written as
// character references.
fn push_attr_exact(out: &mut String, value: &str) {
    for c in value.chars() {
        match c {
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => {
                let mut buf = [0u8; 4];
                escape::push_attr(out, c.encode_utf8(&mut buf));
            }
        }
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_xml())
    }
}
