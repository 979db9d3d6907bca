//! The four observable properties of an element: Receives, Sends, Effects,
//! and Shares.
//!
//! Effects are private to the element (local state only) and never
//! participate in inter-element bindings. Anything observable outside the
//! boundary — globals and hardware — is a Share. Transient values passing
//! between elements (arguments, return values, event payloads) are Sends
//! and Receives, never Shares.

use crate::elements::{Element, ElementTree};
use crate::lang::ast::{Expr, ExprKind, Program, Stmt, StmtKind};
use crate::lang::symbols::{NameClass, SegmentInfo, SegmentKind, SegmentKey, SymbolTable};
use crate::span::SourceSpan;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyKind {
    Receive,
    Send,
    Effect,
    Share,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubjectKind {
    Parameter,
    EventTrigger,
    TimerTrigger,
    CallTrigger,
    ReturnValue,
    Message,
    HardwareCommand,
    LocalState,
    GlobalState,
    HardwareState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AccessMode {
    #[serde(rename = "read")]
    Read,
    #[serde(rename = "write")]
    Write,
    #[serde(rename = "read-write")]
    ReadWrite,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl PropertyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PropertyKind::Receive => "receive",
            PropertyKind::Send => "send",
            PropertyKind::Effect => "effect",
            PropertyKind::Share => "share",
        }
    }
}

impl SubjectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SubjectKind::Parameter => "parameter",
            SubjectKind::EventTrigger => "event-trigger",
            SubjectKind::TimerTrigger => "timer-trigger",
            SubjectKind::CallTrigger => "call-trigger",
            SubjectKind::ReturnValue => "return-value",
            SubjectKind::Message => "message",
            SubjectKind::HardwareCommand => "hardware-command",
            SubjectKind::LocalState => "local-state",
            SubjectKind::GlobalState => "global-state",
            SubjectKind::HardwareState => "hardware-state",
        }
    }
}

impl AccessMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AccessMode::Read => "read",
            AccessMode::Write => "write",
            AccessMode::ReadWrite => "read-write",
            AccessMode::NotApplicable => "n/a",
        }
    }

    fn merge(self, other: AccessMode) -> AccessMode {
        use AccessMode::*;
        match (self, other) {
            (NotApplicable, m) | (m, NotApplicable) => m,
            (a, b) if a == b => a,
            _ => ReadWrite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyEntry {
    pub kind: PropertyKind,
    pub subject_kind: SubjectKind,
    pub subject_name: String,
    pub mode: AccessMode,
    /// Span of the first evidencing syntax.
    pub span: SourceSpan,
}

impl PropertyEntry {
    pub fn new(
        kind: PropertyKind,
        subject_kind: SubjectKind,
        subject_name: impl Into<String>,
        mode: AccessMode,
        span: SourceSpan,
    ) -> Self {
        let entry = PropertyEntry {
            kind,
            subject_kind,
            subject_name: subject_name.into(),
            mode,
            span,
        };
        debug_assert!(entry.well_formed(), "malformed property entry: {entry:?}");
        entry
    }

    /// Kind/subject-kind pairing rules.
    pub fn well_formed(&self) -> bool {
        use PropertyKind::*;
        use SubjectKind::*;
        match self.kind {
            Effect => self.subject_kind == LocalState,
            Share => matches!(self.subject_kind, GlobalState | HardwareState),
            Receive => matches!(
                self.subject_kind,
                Parameter | EventTrigger | TimerTrigger | CallTrigger | Message
            ),
            Send => matches!(self.subject_kind, ReturnValue | Message | HardwareCommand),
        }
    }

    /// De-duplication key within one property list.
    pub fn key(&self) -> (SubjectKind, &str) {
        (self.subject_kind, &self.subject_name)
    }
}

/// The four ordered, de-duplicated property lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PropertySet {
    pub receives: Vec<PropertyEntry>,
    pub sends: Vec<PropertyEntry>,
    pub effects: Vec<PropertyEntry>,
    pub shares: Vec<PropertyEntry>,
}

impl PropertySet {
    fn list_mut(&mut self, kind: PropertyKind) -> &mut Vec<PropertyEntry> {
        match kind {
            PropertyKind::Receive => &mut self.receives,
            PropertyKind::Send => &mut self.sends,
            PropertyKind::Effect => &mut self.effects,
            PropertyKind::Share => &mut self.shares,
        }
    }

    pub fn list(&self, kind: PropertyKind) -> &[PropertyEntry] {
        match kind {
            PropertyKind::Receive => &self.receives,
            PropertyKind::Send => &self.sends,
            PropertyKind::Effect => &self.effects,
            PropertyKind::Share => &self.shares,
        }
    }

    /// Insert with the merge rule: a (subject-kind, subject-name) pair
    /// appears at most once per list; modes merge to read-write when both
    /// accesses occur; the span of the first occurrence is kept.
    pub fn insert(&mut self, entry: PropertyEntry) {
        let list = self.list_mut(entry.kind);
        if let Some(existing) = list.iter_mut().find(|e| e.key() == entry.key()) {
            existing.mode = existing.mode.merge(entry.mode);
            if entry.span.start < existing.span.start {
                existing.span = entry.span;
            }
        } else {
            list.push(entry);
        }
    }

    pub fn iter_all(&self) -> impl Iterator<Item = &PropertyEntry> {
        self.receives
            .iter()
            .chain(self.sends.iter())
            .chain(self.effects.iter())
            .chain(self.shares.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.receives.is_empty()
            && self.sends.is_empty()
            && self.effects.is_empty()
            && self.shares.is_empty()
    }

    pub fn len(&self) -> usize {
        self.receives.len() + self.sends.len() + self.effects.len() + self.shares.len()
    }

    /// Lists sorted by (subject kind, subject name); used when comparing
    /// composition results against the flattening oracle.
    pub fn canonical(&self) -> PropertySet {
        let mut out = self.clone();
        for kind in [
            PropertyKind::Receive,
            PropertyKind::Send,
            PropertyKind::Effect,
            PropertyKind::Share,
        ] {
            out.list_mut(kind)
                .sort_by(|a, b| a.key().cmp(&b.key()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PropertiesError {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("element `{0}` is not source-derived; use composition instead")]
    NotSourceDerived(String),
}

/// Classify one variable access as seen from its enclosing segment.
///
/// Locals are Effects; parameter reads evidence the Receive entry while
/// parameter writes are internal state changes; globals are Shares.
/// Function names return `None` — calls are handled as message flow.
pub fn classify_access(
    symbols: &SymbolTable,
    segment: SegmentKey,
    name: &str,
    write: bool,
    span: &SourceSpan,
) -> Option<PropertyEntry> {
    let mode = if write { AccessMode::Write } else { AccessMode::Read };
    match symbols.classify(segment, name)? {
        NameClass::Local => Some(PropertyEntry::new(
            PropertyKind::Effect,
            SubjectKind::LocalState,
            name,
            mode,
            span.clone(),
        )),
        NameClass::Parameter => {
            if write {
                Some(PropertyEntry::new(
                    PropertyKind::Effect,
                    SubjectKind::LocalState,
                    name,
                    AccessMode::Write,
                    span.clone(),
                ))
            } else {
                Some(PropertyEntry::new(
                    PropertyKind::Receive,
                    SubjectKind::Parameter,
                    name,
                    AccessMode::NotApplicable,
                    span.clone(),
                ))
            }
        }
        NameClass::Global => Some(PropertyEntry::new(
            PropertyKind::Share,
            SubjectKind::GlobalState,
            name,
            mode,
            span.clone(),
        )),
        NameClass::Function => None,
    }
}

/// Step two of the cycle: compute the four properties of a source-derived
/// element (a statement or a segment).
pub fn compute_properties(
    program: &Program,
    symbols: &SymbolTable,
    tree: &ElementTree,
    element_id: &str,
) -> Result<PropertySet, PropertiesError> {
    let element = tree
        .get(element_id)
        .ok_or_else(|| PropertiesError::UnknownElement(element_id.to_string()))?;
    match element.scale.level {
        1 => Ok(segment_properties(program, symbols, element)),
        0 => Ok(statement_properties(program, symbols, tree, element)),
        _ => Err(PropertiesError::NotSourceDerived(element_id.to_string())),
    }
}

fn segment_info<'s>(symbols: &'s SymbolTable, element: &Element) -> &'s SegmentInfo {
    symbols
        .segment(SegmentKey(element.span.start))
        .expect("segment element without symbol table entry")
}

fn segment_properties(
    program: &Program,
    symbols: &SymbolTable,
    element: &Element,
) -> PropertySet {
    let info = segment_info(symbols, element);
    let mut set = PropertySet::default();
    seed_triggers(&mut set, info);
    let ctx = WalkCtx {
        symbols,
        segment: info.key,
        func_name: match &info.kind {
            SegmentKind::Function { name } => Some(name.clone()),
            _ => None,
        },
    };
    for stmt in crate::elements::segment_stmts(program, info) {
        collect_stmt(&ctx, stmt, &mut set);
    }
    set
}

/// Structural Receive entries: what invokes this segment.
fn seed_triggers(set: &mut PropertySet, info: &SegmentInfo) {
    match &info.kind {
        SegmentKind::Function { name } => {
            // A parameterless function's receive is its call trigger; with
            // parameters, the received values evidence the invocation.
            if info.params.is_empty() {
                set.insert(PropertyEntry::new(
                    PropertyKind::Receive,
                    SubjectKind::CallTrigger,
                    name,
                    AccessMode::NotApplicable,
                    info.span.clone(),
                ));
            }
        }
        SegmentKind::Handler { event } => {
            set.insert(PropertyEntry::new(
                PropertyKind::Receive,
                SubjectKind::EventTrigger,
                event,
                AccessMode::NotApplicable,
                info.span.clone(),
            ));
        }
        SegmentKind::AfterBody => {
            set.insert(PropertyEntry::new(
                PropertyKind::Receive,
                SubjectKind::TimerTrigger,
                "timer",
                AccessMode::NotApplicable,
                info.span.clone(),
            ));
        }
        SegmentKind::Script => {}
    }
    for p in &info.params {
        set.insert(PropertyEntry::new(
            PropertyKind::Receive,
            SubjectKind::Parameter,
            &p.name,
            AccessMode::NotApplicable,
            p.span.clone(),
        ));
    }
}

fn statement_properties(
    program: &Program,
    symbols: &SymbolTable,
    tree: &ElementTree,
    element: &Element,
) -> PropertySet {
    let mut set = PropertySet::default();
    let Some(stmt) = crate::elements::find_stmt(program, element.span.start) else {
        return set;
    };
    // The owning segment decides how names classify.
    let owner = owning_segment(tree, symbols, &element.id);
    let ctx = WalkCtx {
        symbols,
        segment: owner.key,
        func_name: match &owner.kind {
            SegmentKind::Function { name } => Some(name.clone()),
            _ => None,
        },
    };
    collect_stmt(&ctx, stmt, &mut set);
    set
}

/// The segment element enclosing `id` (or `id` itself when it is a segment).
fn owning_segment<'s>(
    tree: &ElementTree,
    symbols: &'s SymbolTable,
    id: &str,
) -> &'s SegmentInfo {
    let mut cur = id.to_string();
    loop {
        let e = tree.get(&cur).expect("element in tree");
        if e.scale.level == 1 {
            return segment_info(symbols, e);
        }
        match tree.parent_of(&cur) {
            Some(p) => cur = p.to_string(),
            None => panic!("statement element without owning segment"),
        }
    }
}

struct WalkCtx<'s> {
    symbols: &'s SymbolTable,
    segment: SegmentKey,
    func_name: Option<String>,
}

fn collect_stmt(ctx: &WalkCtx<'_>, stmt: &Stmt, set: &mut PropertySet) {
    match &stmt.kind {
        StmtKind::VarDecl { name, value } => {
            collect_expr(ctx, value, set);
            set.insert(PropertyEntry::new(
                PropertyKind::Effect,
                SubjectKind::LocalState,
                &name.name,
                AccessMode::Write,
                name.span.clone(),
            ));
        }
        StmtKind::GlobalDecl { name, value } => {
            collect_expr(ctx, value, set);
            set.insert(PropertyEntry::new(
                PropertyKind::Share,
                SubjectKind::GlobalState,
                &name.name,
                AccessMode::Write,
                name.span.clone(),
            ));
        }
        StmtKind::Assign { name, value } => {
            collect_expr(ctx, value, set);
            if let Some(entry) =
                classify_access(ctx.symbols, ctx.segment, &name.name, true, &name.span)
            {
                set.insert(entry);
            }
        }
        StmtKind::If { cond, then_block, else_block } => {
            collect_expr(ctx, cond, set);
            for s in &then_block.stmts {
                collect_stmt(ctx, s, set);
            }
            if let Some(e) = else_block {
                for s in &e.stmts {
                    collect_stmt(ctx, s, set);
                }
            }
        }
        StmtKind::While { cond, body } => {
            collect_expr(ctx, cond, set);
            for s in &body.stmts {
                collect_stmt(ctx, s, set);
            }
        }
        StmtKind::Repeat { count, body } => {
            collect_expr(ctx, count, set);
            for s in &body.stmts {
                collect_stmt(ctx, s, set);
            }
        }
        StmtKind::After { delay, .. } => {
            // The body belongs to its own after-body segment.
            collect_expr(ctx, delay, set);
        }
        StmtKind::Print { value } => collect_expr(ctx, value, set),
        StmtKind::Emit { event, args } => {
            for a in args {
                collect_expr(ctx, a, set);
            }
            set.insert(PropertyEntry::new(
                PropertyKind::Send,
                SubjectKind::Message,
                &event.name,
                AccessMode::NotApplicable,
                stmt.span.clone(),
            ));
        }
        StmtKind::Return { value } => {
            if let Some(v) = value {
                collect_expr(ctx, v, set);
                let func = ctx
                    .func_name
                    .as_deref()
                    .expect("return statement outside function body");
                set.insert(PropertyEntry::new(
                    PropertyKind::Send,
                    SubjectKind::ReturnValue,
                    func,
                    AccessMode::NotApplicable,
                    stmt.span.clone(),
                ));
            }
        }
        StmtKind::Call { name, args } => {
            for a in args {
                collect_expr(ctx, a, set);
            }
            if !args.is_empty() {
                set.insert(PropertyEntry::new(
                    PropertyKind::Send,
                    SubjectKind::Message,
                    &name.name,
                    AccessMode::NotApplicable,
                    stmt.span.clone(),
                ));
            }
        }
        StmtKind::HwWrite { device, value } => {
            collect_expr(ctx, value, set);
            set.insert(PropertyEntry::new(
                PropertyKind::Send,
                SubjectKind::HardwareCommand,
                &device.name,
                AccessMode::NotApplicable,
                stmt.span.clone(),
            ));
            set.insert(PropertyEntry::new(
                PropertyKind::Share,
                SubjectKind::HardwareState,
                &device.name,
                AccessMode::Write,
                device.span.clone(),
            ));
        }
    }
}

fn collect_expr(ctx: &WalkCtx<'_>, expr: &Expr, set: &mut PropertySet) {
    match &expr.kind {
        ExprKind::Name(n) => {
            if let Some(entry) =
                classify_access(ctx.symbols, ctx.segment, &n.name, false, &n.span)
            {
                set.insert(entry);
            }
        }
        ExprKind::HwRead { device } => {
            set.insert(PropertyEntry::new(
                PropertyKind::Share,
                SubjectKind::HardwareState,
                &device.name,
                AccessMode::Read,
                expr.span.clone(),
            ));
        }
        ExprKind::Call { name, args } => {
            for a in args {
                collect_expr(ctx, a, set);
            }
            if !args.is_empty() {
                set.insert(PropertyEntry::new(
                    PropertyKind::Send,
                    SubjectKind::Message,
                    &name.name,
                    AccessMode::NotApplicable,
                    expr.span.clone(),
                ));
            }
            // Expression position: the returned value is consumed here.
            set.insert(PropertyEntry::new(
                PropertyKind::Receive,
                SubjectKind::Message,
                &name.name,
                AccessMode::NotApplicable,
                expr.span.clone(),
            ));
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            collect_expr(ctx, lhs, set);
            collect_expr(ctx, rhs, set);
        }
        ExprKind::Unary { operand, .. } => collect_expr(ctx, operand, set),
        ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) => {}
    }
}

/// Fill `properties` for every statement and segment element in the tree.
pub fn compute_all_properties(
    program: &Program,
    symbols: &SymbolTable,
    tree: &mut ElementTree,
) {
    let ids: Vec<String> = tree
        .iter()
        .filter(|e| e.scale.level <= 1)
        .map(|e| e.id.clone())
        .collect();
    for id in ids {
        let set = compute_properties(program, symbols, tree, &id)
            .expect("statement and segment elements are source-derived");
        tree.get_mut(&id).unwrap().properties = set;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{identify_elements, ScalePolicy};
    use crate::lang::{parse, resolve_names};

    fn analyzed(src: &str) -> (Program, SymbolTable, ElementTree) {
        let p = parse("t.flare", src).unwrap();
        let s = resolve_names(&p).unwrap();
        let mut t = identify_elements(&p, &s, ScalePolicy::All);
        compute_all_properties(&p, &s, &mut t);
        (p, s, t)
    }

    fn segment<'t>(t: &'t ElementTree, name: &str) -> &'t Element {
        t.segments().find(|e| e.name == name).unwrap_or_else(|| {
            panic!("no segment named {name}")
        })
    }

    #[test]
    fn dedup_merges_modes_to_read_write() {
        let (_, _, t) = analyzed("global g = 0;\nfunc f() { global g = g + 1; }");
        let f = segment(&t, "f");
        assert_eq!(f.properties.shares.len(), 1);
        let share = &f.properties.shares[0];
        assert_eq!(share.subject_kind, SubjectKind::GlobalState);
        assert_eq!(share.mode, AccessMode::ReadWrite);
    }

    #[test]
    fn effects_never_reference_globals_or_hardware() {
        let (_, _, t) = analyzed(
            "global g = 1;\nfunc f(p) { var l = g + p; hw.write(\"led\", l); }\n",
        );
        for e in t.iter() {
            for entry in &e.properties.effects {
                assert_eq!(entry.subject_kind, SubjectKind::LocalState);
            }
            for entry in e.properties.iter_all() {
                assert!(entry.well_formed(), "{entry:?}");
            }
        }
    }

    #[test]
    fn statement_scale_answers_the_same_questions() {
        let (_, _, t) = analyzed("global g = 1;\nfunc f() { global g = 0 - g; }\n");
        let stmt = t
            .statements()
            .find(|e| e.span.start.line == 2 && e.span.start.col > 10)
            .expect("inner statement");
        assert_eq!(stmt.properties.shares.len(), 1);
        assert_eq!(stmt.properties.shares[0].mode, AccessMode::ReadWrite);
    }

    #[test]
    fn call_argument_is_send_at_caller_and_parameter_at_callee() {
        let (_, _, t) = analyzed("func f(x) { print(x); }\nf(41 + 1);\n");
        let f = segment(&t, "f");
        let script = segment(&t, "script");
        assert!(f
            .properties
            .receives
            .iter()
            .any(|e| e.subject_kind == SubjectKind::Parameter && e.subject_name == "x"));
        assert!(script
            .properties
            .sends
            .iter()
            .any(|e| e.subject_kind == SubjectKind::Message && e.subject_name == "f"));
        // No share entries anywhere: argument passing is not sharing.
        assert!(f.properties.shares.is_empty());
        assert!(script.properties.shares.is_empty());
    }

    #[test]
    fn unused_return_value_is_not_received() {
        let (_, _, t) = analyzed("func f() { return 1; }\nf();\nvar y = f();\n");
        let script = segment(&t, "script");
        let receives: Vec<_> = script
            .properties
            .receives
            .iter()
            .filter(|e| e.subject_kind == SubjectKind::Message)
            .collect();
        assert_eq!(receives.len(), 1);
    }

    #[test]
    fn parameterless_function_receives_call_trigger() {
        let (_, _, t) = analyzed("func f() { return 1; }\nfunc g(a) { return a; }\n");
        let f = segment(&t, "f");
        assert!(f
            .properties
            .receives
            .iter()
            .any(|e| e.subject_kind == SubjectKind::CallTrigger));
        let g = segment(&t, "g");
        assert!(g
            .properties
            .receives
            .iter()
            .all(|e| e.subject_kind != SubjectKind::CallTrigger));
    }
}
