//! Bounded elements and the containment tree.
//!
//! Scale 0 elements are statements, scale 1 elements are segments (function
//! bodies, handler bodies, `after` bodies, and the top-level script), and
//! scale 2 is the whole-program system element. Compound statements carry
//! their direct body statements as constituents so that composition has
//! structure below segment scale; an `after` statement is a leaf, because
//! its body belongs to a separate after-body segment.

use crate::lang::ast::{Program, Stmt, StmtKind, TopItem};
use crate::lang::symbols::{SegmentInfo, SegmentKind, SymbolTable};
use crate::properties::PropertySet;
use crate::span::{Pos, SourceSpan};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Abstraction level of an element. 0 = statement, 1 = segment,
/// 2 = system; composition may create higher levels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Scale {
    pub level: u32,
    pub name: String,
}

impl Scale {
    pub fn new(level: u32) -> Self {
        Scale { level, name: scale_name(level) }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name)
    }
}

pub fn scale_name(level: u32) -> String {
    match level {
        0 => "statement".to_string(),
        1 => "segment".to_string(),
        2 => "system".to_string(),
        n => format!("scale-{n}"),
    }
}

/// Stable element id: `{scale-name}:{file}:{start_line}:{start_col}`.
pub fn element_id(level: u32, file: &str, pos: Pos) -> String {
    format!("{}:{}:{}:{}", scale_name(level), file, pos.line, pos.col)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub id: String,
    pub name: String,
    pub scale: Scale,
    pub span: SourceSpan,
    /// Child element ids; empty for atomic statements.
    pub constituents: Vec<String>,
    pub properties: PropertySet,
}

/// Which scales [`identify_elements`] materialises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalePolicy {
    Statement,
    Segment,
    System,
    All,
}

impl ScalePolicy {
    fn with_segments(self) -> bool {
        !matches!(self, ScalePolicy::System)
    }

    fn with_statements(self) -> bool {
        matches!(self, ScalePolicy::Statement | ScalePolicy::All)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementTree {
    pub root_id: String,
    elements: BTreeMap<String, Element>,
    /// Canonical pre-order: root, then each segment in source order with
    /// its statements.
    order: Vec<String>,
    parent: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no element contains {file}:{pos}")]
pub struct NotFound {
    pub file: String,
    pub pos: Pos,
}

impl ElementTree {
    pub fn get(&self, id: &str) -> Option<&Element> {
        self.elements.get(id)
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut Element> {
        self.elements.get_mut(id)
    }

    pub fn root(&self) -> &Element {
        &self.elements[&self.root_id]
    }

    /// Elements in canonical pre-order.
    pub fn iter(&self) -> impl Iterator<Item = &Element> {
        self.order.iter().map(|id| &self.elements[id])
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn parent_of(&self, id: &str) -> Option<&str> {
        self.parent.get(id).map(|s| s.as_str())
    }

    /// Ancestor chain from `id` (exclusive) up to the root (inclusive).
    pub fn ancestors<'t>(&'t self, id: &str) -> Vec<&'t str> {
        let mut out = Vec::new();
        let mut cur = id.to_string();
        while let Some(p) = self.parent.get(&cur) {
            out.push(p.as_str());
            cur = p.clone();
        }
        out
    }

    /// True when `id` equals or descends from any element in `set`.
    pub fn within(&self, id: &str, set: &std::collections::BTreeSet<String>) -> bool {
        if set.contains(id) {
            return true;
        }
        self.ancestors(id).iter().any(|a| set.contains(*a))
    }

    pub fn segments(&self) -> impl Iterator<Item = &Element> {
        self.iter().filter(|e| e.scale.level == 1)
    }

    pub fn statements(&self) -> impl Iterator<Item = &Element> {
        self.iter().filter(|e| e.scale.level == 0)
    }

    fn insert(&mut self, parent: Option<&str>, element: Element) {
        if let Some(p) = parent {
            self.parent.insert(element.id.clone(), p.to_string());
        }
        self.order.push(element.id.clone());
        let prev = self.elements.insert(element.id.clone(), element);
        debug_assert!(prev.is_none(), "duplicate element id");
    }
}

/// Step one of the cycle: identify the bounded elements at each scale and
/// arrange them into a containment tree.
pub fn identify_elements(
    program: &Program,
    symbols: &SymbolTable,
    policy: ScalePolicy,
) -> ElementTree {
    let file = &program.span.file;
    let root_span = program.span.clone();
    let root = Element {
        id: element_id(2, file, root_span.start),
        name: "system".to_string(),
        scale: Scale::new(2),
        span: root_span,
        constituents: Vec::new(),
        properties: PropertySet::default(),
    };
    let root_id = root.id.clone();
    let mut tree = ElementTree {
        root_id: root_id.clone(),
        elements: BTreeMap::new(),
        order: Vec::new(),
        parent: BTreeMap::new(),
    };
    tree.insert(None, root);

    if !policy.with_segments() {
        return tree;
    }

    for info in &symbols.segments {
        let seg_id = element_id(1, file, info.span.start);
        let mut segment = Element {
            id: seg_id.clone(),
            name: info.name.clone(),
            scale: Scale::new(1),
            span: info.span.clone(),
            constituents: Vec::new(),
            properties: PropertySet::default(),
        };
        if policy.with_statements() {
            let stmts = segment_stmts(program, info);
            segment.constituents =
                stmts.iter().map(|s| element_id(0, file, s.span.start)).collect();
            tree.insert(None, segment);
            for s in stmts {
                add_stmt_element(&mut tree, file, &seg_id, s);
            }
        } else {
            tree.insert(None, segment);
        }
        tree.parent.insert(seg_id.clone(), root_id.clone());
        let child = seg_id;
        let root = tree.elements.get_mut(&root_id).unwrap();
        root.constituents.push(child);
    }
    tree
}

fn add_stmt_element(tree: &mut ElementTree, file: &str, parent: &str, stmt: &Stmt) {
    let id = element_id(0, file, stmt.span.start);
    let children: Vec<&Stmt> = match &stmt.kind {
        // The after body runs later as its own segment.
        StmtKind::After { .. } => Vec::new(),
        _ => stmt.blocks().into_iter().flat_map(|b| b.stmts.iter()).collect(),
    };
    let element = Element {
        id: id.clone(),
        name: format!("stmt@{}", stmt.span.start.line),
        scale: Scale::new(0),
        span: stmt.span.clone(),
        constituents: children.iter().map(|s| element_id(0, file, s.span.start)).collect(),
        properties: PropertySet::default(),
    };
    tree.insert(Some(parent), element);
    for child in children {
        add_stmt_element(tree, file, &id, child);
    }
}

/// The direct statement list of a segment.
pub fn segment_stmts<'p>(program: &'p Program, info: &SegmentInfo) -> Vec<&'p Stmt> {
    match &info.kind {
        SegmentKind::Script => program.script_stmts(),
        SegmentKind::Function { .. } => program
            .items
            .iter()
            .find_map(|item| match item {
                TopItem::Func(f) if f.span.start == info.key.0 => {
                    Some(f.body.stmts.iter().collect())
                }
                _ => None,
            })
            .unwrap_or_default(),
        SegmentKind::Handler { .. } => program
            .items
            .iter()
            .find_map(|item| match item {
                TopItem::Handler(h) if h.span.start == info.key.0 => {
                    Some(h.body.stmts.iter().collect())
                }
                _ => None,
            })
            .unwrap_or_default(),
        SegmentKind::AfterBody => {
            find_after_body(program, info.key.0).map(|b| b.stmts.iter().collect()).unwrap_or_default()
        }
    }
}

fn find_after_body(program: &Program, block_start: Pos) -> Option<&crate::lang::ast::Block> {
    fn in_stmt(stmt: &Stmt, block_start: Pos) -> Option<&crate::lang::ast::Block> {
        if let StmtKind::After { body, .. } = &stmt.kind {
            if body.span.start == block_start {
                return Some(body);
            }
        }
        for b in stmt.blocks() {
            for s in &b.stmts {
                if let Some(found) = in_stmt(s, block_start) {
                    return Some(found);
                }
            }
        }
        None
    }
    for item in &program.items {
        let stmts: Vec<&Stmt> = match item {
            TopItem::Func(f) => f.body.stmts.iter().collect(),
            TopItem::Handler(h) => h.body.stmts.iter().collect(),
            TopItem::Stmt(s) => vec![s],
        };
        for s in stmts {
            if let Some(found) = in_stmt(s, block_start) {
                return Some(found);
            }
        }
    }
    None
}

/// Find the statement with the given span start anywhere in the program.
pub fn find_stmt(program: &Program, pos: Pos) -> Option<&Stmt> {
    fn in_stmt(stmt: &Stmt, pos: Pos) -> Option<&Stmt> {
        if stmt.span.start == pos {
            return Some(stmt);
        }
        for b in stmt.blocks() {
            for s in &b.stmts {
                if let Some(found) = in_stmt(s, pos) {
                    return Some(found);
                }
            }
        }
        None
    }
    for item in &program.items {
        let stmts: Vec<&Stmt> = match item {
            TopItem::Func(f) => f.body.stmts.iter().collect(),
            TopItem::Handler(h) => h.body.stmts.iter().collect(),
            TopItem::Stmt(s) => vec![s],
        };
        for s in stmts {
            if let Some(found) = in_stmt(s, pos) {
                return Some(found);
            }
        }
    }
    None
}

/// The smallest element whose span contains `pos`.
pub fn element_at<'t>(tree: &'t ElementTree, pos: Pos) -> Result<&'t Element, NotFound> {
    tree.iter()
        .filter(|e| e.span.contains(pos))
        .min_by_key(|e| (e.span.extent_key(), e.scale.level))
        .ok_or_else(|| NotFound { file: tree.root().span.file.clone(), pos })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, resolve_names};

    fn tree_for(src: &str) -> (Program, SymbolTable, ElementTree) {
        let p = parse("t.flare", src).unwrap();
        let s = resolve_names(&p).unwrap();
        let t = identify_elements(&p, &s, ScalePolicy::All);
        (p, s, t)
    }

    #[test]
    fn empty_program_yields_bare_system_element() {
        let (_, _, t) = tree_for("");
        assert_eq!(t.len(), 1);
        assert_eq!(t.root().name, "system");
        assert!(t.root().constituents.is_empty());
    }

    #[test]
    fn single_statement_yields_script_segment() {
        let (_, _, t) = tree_for("print(\"Good\");");
        let segments: Vec<_> = t.segments().collect();
        assert_eq!(segments.len(), 1);
        assert_eq!(segments[0].name, "script");
        assert_eq!(segments[0].constituents.len(), 1);
        assert_eq!(t.statements().count(), 1);
    }

    #[test]
    fn compound_statements_nest_constituents() {
        let (_, _, t) = tree_for("if true {\n    print(1);\n    print(2);\n}");
        let stmts: Vec<_> = t.statements().collect();
        assert_eq!(stmts.len(), 3);
        let if_el = stmts.iter().find(|e| e.span.start.line == 1).unwrap();
        assert_eq!(if_el.constituents.len(), 2);
        for c in &if_el.constituents {
            assert_eq!(t.parent_of(c), Some(if_el.id.as_str()));
        }
    }

    #[test]
    fn after_statement_is_a_leaf_and_body_is_a_segment() {
        let (_, _, t) = tree_for("after 10 {\n    print(1);\n}");
        let after_el = t
            .statements()
            .find(|e| e.span.start.line == 1)
            .expect("after statement element");
        assert!(after_el.constituents.is_empty());
        let body_seg = t.segments().find(|e| e.name.starts_with("after@")).unwrap();
        assert_eq!(body_seg.constituents.len(), 1);
        let inner = t.get(&body_seg.constituents[0]).unwrap();
        assert_eq!(t.parent_of(&inner.id), Some(body_seg.id.as_str()));
    }

    #[test]
    fn policy_controls_depth() {
        let src = "func f() { print(1); }";
        let p = parse("t.flare", src).unwrap();
        let s = resolve_names(&p).unwrap();
        assert_eq!(identify_elements(&p, &s, ScalePolicy::System).len(), 1);
        assert_eq!(identify_elements(&p, &s, ScalePolicy::Segment).len(), 2);
        assert_eq!(identify_elements(&p, &s, ScalePolicy::All).len(), 3);
    }

    #[test]
    fn identify_is_deterministic() {
        let src = "global g = 1;\nfunc f(x) { if x < g { print(x); } }\nwhen go { f(2); }\n";
        let (p, s, t1) = tree_for(src);
        let t2 = identify_elements(&p, &s, ScalePolicy::All);
        assert_eq!(t1, t2);
    }

    #[test]
    fn element_at_prefers_smallest_container() {
        let (_, _, t) = tree_for("if true {\n    print(1);\n}");
        // Inside the condition: the if statement itself.
        let e = element_at(&t, Pos::new(1, 4)).unwrap();
        assert!(e.name.starts_with("stmt@1"));
        assert_eq!(e.scale.level, 0);
        // Inside the nested print.
        let e = element_at(&t, Pos::new(2, 6)).unwrap();
        assert_eq!(e.span.start.line, 2);
    }

    #[test]
    fn element_at_misses_positions_outside_spans() {
        let (_, _, t) = tree_for("# leading comment\nprint(1);\n");
        assert!(element_at(&t, Pos::new(1, 3)).is_err());
        assert!(element_at(&t, Pos::new(2, 1)).is_ok());
    }
}
