//! Step four of the cycle: treat a bound set of elements as a new element
//! at the next scale, with derived properties.
//!
//! Composition rules:
//! - Sends and Receives are boundary crossings. A matched send/receive pair
//!   wholly inside the member set is absorbed; one whose counterpart lies
//!   outside (or that has no counterpart at all, like hardware commands and
//!   unmatched emits) is retained.
//! - Event and timer triggers always remain Receives: the dispatcher lives
//!   outside any composite.
//! - Effects are inherited. Globals accessed only by the constituents (two
//!   or more of them) are confined by the new boundary and promoted to
//!   composite Effects; hardware never promotes.
//! - Self-reference stays with the element: a recursive call does not
//!   absorb its own trigger, so singleton composition is the identity.
//!
//! [`flatten_oracle`] recomputes the same four properties directly from the
//! AST with its own site scan and no use of per-member property sets; the
//! test suite holds `compose(...).retained` equal to the oracle.

use crate::bindings::Binding;
use crate::elements::{element_id, Element, ElementTree, Scale};
use crate::lang::ast::{Expr, ExprKind, Program, Stmt, StmtKind};
use crate::lang::symbols::{SegmentKind, SegmentKey, SymbolTable};
use crate::linkage::{Linkage, SharedSubject};
use crate::properties::{
    AccessMode, PropertyEntry, PropertyKind, PropertySet, SubjectKind,
};
use crate::span::SourceSpan;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompositionError {
    #[error("member set is empty")]
    EmptyMemberSet,
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("duplicate member `{0}`")]
    DuplicateMember(String),
    #[error("members span different scales")]
    MixedScales,
    #[error("members have different parents")]
    DifferentParents,
}

/// What happened to one constituent property entry under composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fate {
    /// Paired internally; appears in neither side of the composite.
    Absorbed,
    /// Share confined by the new boundary, reclassified as an Effect.
    Promoted,
    /// Crosses the composite boundary unchanged (modulo merging).
    Retained,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryFate {
    pub member: String,
    pub entry: PropertyEntry,
    pub fate: Fate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionResult {
    pub composite: Element,
    /// Ids of bindings internal to the composite.
    pub absorbed: Vec<String>,
    /// Share subjects reclassified as composite Effects.
    pub promoted: Vec<String>,
    /// The composite's property set, canonically ordered.
    pub retained: PropertySet,
    /// Per-entry accounting; every constituent entry appears exactly once.
    #[serde(skip)]
    pub accounting: Vec<EntryFate>,
}

pub fn compose(
    program: &Program,
    symbols: &SymbolTable,
    tree: &ElementTree,
    bindings: &[Binding],
    member_ids: &[String],
    label: &str,
) -> Result<CompositionResult, CompositionError> {
    let members = validate_members(tree, member_ids)?;
    let file = &program.span.file;
    let linkage = Linkage::build(program, symbols);
    let member_set: BTreeSet<String> = members.iter().map(|m| m.id.clone()).collect();

    let owner_of = |site_element: &str| owner_member(tree, &member_set, site_element);
    let within = |id: &str| tree.within(id, &member_set);

    // Promotion decisions, one per global subject touched by the members.
    let mut promoted_subjects: BTreeSet<String> = BTreeSet::new();
    for m in &members {
        for share in &m.properties.shares {
            if share.subject_kind != SubjectKind::GlobalState {
                continue;
            }
            let subject = SharedSubject::Global(share.subject_name.clone());
            let sites: Vec<_> = linkage.accesses_of(&subject).collect();
            let all_inside = sites.iter().all(|s| within(&s.stmt_element));
            let owners: BTreeSet<_> =
                sites.iter().filter_map(|s| owner_of(&s.stmt_element)).collect();
            if all_inside && owners.len() >= 2 {
                promoted_subjects.insert(share.subject_name.clone());
            }
        }
    }

    let mut accounting = Vec::new();
    for m in &members {
        let m_kind = symbols
            .segment(SegmentKey(m.span.start))
            .filter(|_| m.scale.level == 1)
            .map(|info| info.kind.clone());
        for entry in m.properties.iter_all() {
            let fate = entry_fate(
                entry,
                m,
                m_kind.as_ref(),
                symbols,
                tree,
                &linkage,
                &member_set,
                &promoted_subjects,
                file,
            );
            accounting.push(EntryFate { member: m.id.clone(), entry: entry.clone(), fate });
        }
    }

    // Assemble the composite property set.
    let mut retained = PropertySet::default();
    for ef in &accounting {
        if ef.fate == Fate::Retained {
            retained.insert(ef.entry.clone());
        }
    }
    let mut promoted_merge: BTreeMap<String, (AccessMode, SourceSpan)> = BTreeMap::new();
    for ef in &accounting {
        if ef.fate != Fate::Promoted {
            continue;
        }
        promoted_merge
            .entry(ef.entry.subject_name.clone())
            .and_modify(|(mode, span)| {
                *mode = merge_modes(*mode, ef.entry.mode);
                if ef.entry.span.start < span.start {
                    *span = ef.entry.span.clone();
                }
            })
            .or_insert((ef.entry.mode, ef.entry.span.clone()));
    }
    for (name, (mode, span)) in &promoted_merge {
        retained.insert(PropertyEntry::new(
            PropertyKind::Effect,
            SubjectKind::LocalState,
            name,
            *mode,
            span.clone(),
        ));
    }
    let retained = retained.canonical();

    let absorbed: Vec<String> = {
        let mut ids: Vec<String> = bindings
            .iter()
            .filter(|b| within(&b.from) && within(&b.to))
            .map(|b| b.id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    };

    let level = members.iter().map(|m| m.scale.level).max().unwrap() + 1;
    let span = members
        .iter()
        .map(|m| m.span.clone())
        .reduce(|a, b| a.hull(&b))
        .unwrap();
    let composite = Element {
        id: format!("{}:compose:{}", crate::elements::scale_name(level), label),
        name: label.to_string(),
        scale: Scale::new(level),
        span,
        constituents: members.iter().map(|m| m.id.clone()).collect(),
        properties: retained.clone(),
    };

    Ok(CompositionResult {
        composite,
        absorbed,
        promoted: promoted_subjects.into_iter().collect(),
        retained,
        accounting,
    })
}

fn validate_members<'t>(
    tree: &'t ElementTree,
    member_ids: &[String],
) -> Result<Vec<&'t Element>, CompositionError> {
    if member_ids.is_empty() {
        return Err(CompositionError::EmptyMemberSet);
    }
    let mut seen = BTreeSet::new();
    let mut members = Vec::new();
    for id in member_ids {
        if !seen.insert(id.clone()) {
            return Err(CompositionError::DuplicateMember(id.clone()));
        }
        members.push(
            tree.get(id).ok_or_else(|| CompositionError::UnknownElement(id.clone()))?,
        );
    }
    members.sort_by_key(|m| m.span.start);
    let scale = members[0].scale.level;
    if members.iter().any(|m| m.scale.level != scale) {
        return Err(CompositionError::MixedScales);
    }
    let parent = tree.parent_of(&members[0].id);
    if members.iter().any(|m| tree.parent_of(&m.id) != parent) {
        return Err(CompositionError::DifferentParents);
    }
    Ok(members)
}

fn merge_modes(a: AccessMode, b: AccessMode) -> AccessMode {
    use AccessMode::*;
    match (a, b) {
        (NotApplicable, m) | (m, NotApplicable) => m,
        (x, y) if x == y => x,
        _ => ReadWrite,
    }
}

/// The member element whose subtree contains `id`, if any.
fn owner_member(
    tree: &ElementTree,
    members: &BTreeSet<String>,
    id: &str,
) -> Option<String> {
    if members.contains(id) {
        return Some(id.to_string());
    }
    tree.ancestors(id)
        .into_iter()
        .find(|a| members.contains(*a))
        .map(|a| a.to_string())
}

#[allow(clippy::too_many_arguments)]
fn entry_fate(
    entry: &PropertyEntry,
    member: &Element,
    member_kind: Option<&SegmentKind>,
    symbols: &SymbolTable,
    tree: &ElementTree,
    linkage: &Linkage,
    member_set: &BTreeSet<String>,
    promoted_subjects: &BTreeSet<String>,
    file: &str,
) -> Fate {
    let within = |id: &str| tree.within(id, member_set);
    let func_elem = |name: &str| {
        symbols.functions.get(name).map(|sig| element_id(1, file, sig.segment.0))
    };
    // Counterpart sites owned by the entry's own member do not count:
    // self-reference never absorbs.
    let foreign = |site_element: &str| {
        owner_member(tree, member_set, site_element).as_deref() != Some(member.id.as_str())
    };

    match (entry.kind, entry.subject_kind) {
        (PropertyKind::Effect, _) => Fate::Retained,
        (PropertyKind::Share, SubjectKind::GlobalState) => {
            if promoted_subjects.contains(&entry.subject_name) {
                Fate::Promoted
            } else {
                Fate::Retained
            }
        }
        (PropertyKind::Share, _) => Fate::Retained,
        (PropertyKind::Send, SubjectKind::HardwareCommand) => Fate::Retained,
        (PropertyKind::Receive, SubjectKind::EventTrigger)
        | (PropertyKind::Receive, SubjectKind::TimerTrigger) => Fate::Retained,
        (PropertyKind::Receive, SubjectKind::Parameter) => {
            // Only a whole function segment can have its parameters fed
            // entirely from inside the set; handler payloads may always
            // arrive from external events.
            match member_kind {
                Some(SegmentKind::Function { name }) => {
                    let counterparts: Vec<_> = linkage
                        .calls_of(name)
                        .filter(|c| c.has_args && foreign(&c.stmt_element))
                        .collect();
                    absorb_if_all_inside(&counterparts, |c| within(&c.stmt_element))
                }
                _ => Fate::Retained,
            }
        }
        (PropertyKind::Receive, SubjectKind::CallTrigger) => match member_kind {
            Some(SegmentKind::Function { name }) => {
                let counterparts: Vec<_> = linkage
                    .calls_of(name)
                    .filter(|c| foreign(&c.stmt_element))
                    .collect();
                absorb_if_all_inside(&counterparts, |c| within(&c.stmt_element))
            }
            _ => Fate::Retained,
        },
        (PropertyKind::Receive, SubjectKind::Message)
        | (PropertyKind::Send, SubjectKind::Message)
            if symbols.functions.contains_key(&entry.subject_name) =>
        {
            // Caller-side value flow; absorbed when the callee segment is a
            // different member of the set.
            match func_elem(&entry.subject_name) {
                Some(callee) if callee != member.id && within(&callee) => Fate::Absorbed,
                _ => Fate::Retained,
            }
        }
        (PropertyKind::Send, SubjectKind::Message) => {
            // Emit: absorbed when every foreign handler lies inside.
            let handlers: Vec<String> = symbols
                .events
                .get(&entry.subject_name)
                .map(|info| {
                    info.handlers
                        .iter()
                        .map(|k| element_id(1, file, k.0))
                        .filter(|h| h != &member.id)
                        .collect()
                })
                .unwrap_or_default();
            absorb_if_all_inside(&handlers, |h| within(h))
        }
        (PropertyKind::Receive, SubjectKind::Message) => Fate::Retained,
        (PropertyKind::Send, SubjectKind::ReturnValue) => {
            let counterparts: Vec<_> = linkage
                .calls_of(&entry.subject_name)
                .filter(|c| foreign(&c.stmt_element))
                .collect();
            absorb_if_all_inside(&counterparts, |c| within(&c.stmt_element))
        }
        _ => Fate::Retained,
    }
}

fn absorb_if_all_inside<T>(counterparts: &[T], inside: impl Fn(&T) -> bool) -> Fate {
    if !counterparts.is_empty() && counterparts.iter().all(inside) {
        Fate::Absorbed
    } else {
        Fate::Retained
    }
}

// ---------------------------------------------------------------------------
// Flattening oracle
// ---------------------------------------------------------------------------

/// Recompute the four properties of a member region directly from the AST,
/// treating the region as one boundary. Performs its own site scan and
/// never consults per-member property sets.
pub fn flatten_oracle(
    program: &Program,
    symbols: &SymbolTable,
    tree: &ElementTree,
    member_ids: &[String],
) -> PropertySet {
    if member_ids.is_empty() {
        return PropertySet::default();
    }
    let members: BTreeSet<String> = member_ids.iter().cloned().collect();
    let file = program.span.file.clone();

    let scan = OracleScan::run(program, symbols, &file);
    let o = Oracle { program, symbols, tree, members, file, scan };
    o.compute()
}

/// The oracle's private whole-program site scan.
#[derive(Default)]
struct OracleScan {
    /// callee -> (stmt element id, has_args)
    calls: BTreeMap<String, Vec<(String, bool)>>,
    /// global name -> (stmt element id, write, span)
    globals: BTreeMap<String, Vec<(String, bool, SourceSpan)>>,
}

impl OracleScan {
    fn run(program: &Program, symbols: &SymbolTable, file: &str) -> OracleScan {
        let mut scan = OracleScan::default();
        for info in &symbols.segments {
            for stmt in crate::elements::segment_stmts(program, info) {
                scan.stmt(symbols, file, info.key, stmt);
            }
        }
        scan
    }

    fn stmt(&mut self, symbols: &SymbolTable, file: &str, seg: SegmentKey, stmt: &Stmt) {
        let elem = element_id(0, file, stmt.span.start);
        match &stmt.kind {
            StmtKind::Call { name, args } => {
                self.calls
                    .entry(name.name.clone())
                    .or_default()
                    .push((elem.clone(), !args.is_empty()));
            }
            StmtKind::GlobalDecl { name, .. } => {
                self.globals.entry(name.name.clone()).or_default().push((
                    elem.clone(),
                    true,
                    name.span.clone(),
                ));
            }
            StmtKind::Assign { name, .. } => {
                if symbols.classify(seg, &name.name)
                    == Some(crate::lang::symbols::NameClass::Global)
                {
                    self.globals.entry(name.name.clone()).or_default().push((
                        elem.clone(),
                        true,
                        name.span.clone(),
                    ));
                }
            }
            _ => {}
        }
        for e in stmt.exprs() {
            self.expr(symbols, seg, &elem, e);
        }
        if !matches!(stmt.kind, StmtKind::After { .. }) {
            for b in stmt.blocks() {
                for s in &b.stmts {
                    self.stmt(symbols, file, seg, s);
                }
            }
        }
    }

    fn expr(&mut self, symbols: &SymbolTable, seg: SegmentKey, elem: &str, expr: &Expr) {
        match &expr.kind {
            ExprKind::Name(n) => {
                if symbols.classify(seg, &n.name)
                    == Some(crate::lang::symbols::NameClass::Global)
                {
                    self.globals.entry(n.name.clone()).or_default().push((
                        elem.to_string(),
                        false,
                        n.span.clone(),
                    ));
                }
            }
            ExprKind::Call { name, args } => {
                for a in args {
                    self.expr(symbols, seg, elem, a);
                }
                self.calls
                    .entry(name.name.clone())
                    .or_default()
                    .push((elem.to_string(), !args.is_empty()));
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(symbols, seg, elem, lhs);
                self.expr(symbols, seg, elem, rhs);
            }
            ExprKind::Unary { operand, .. } => self.expr(symbols, seg, elem, operand),
            _ => {}
        }
    }
}

struct Oracle<'a> {
    program: &'a Program,
    symbols: &'a SymbolTable,
    tree: &'a ElementTree,
    members: BTreeSet<String>,
    file: String,
    scan: OracleScan,
}

impl<'a> Oracle<'a> {
    fn within(&self, id: &str) -> bool {
        self.tree.within(id, &self.members)
    }

    fn owner(&self, id: &str) -> Option<String> {
        owner_member(self.tree, &self.members, id)
    }

    fn compute(&self) -> PropertySet {
        let mut set = PropertySet::default();
        let mut global_in_region: BTreeMap<String, (AccessMode, SourceSpan)> = BTreeMap::new();

        for info in &self.symbols.segments {
            let seg_elem = element_id(1, &self.file, info.span.start);
            let seg_is_member = self.members.contains(&seg_elem);
            if seg_is_member {
                self.structural_entries(info, &seg_elem, &mut set);
            }
            for stmt in crate::elements::segment_stmts(self.program, info) {
                self.walk_stmt(info, &seg_elem, seg_is_member, stmt, &mut set, &mut global_in_region);
            }
        }

        // Globals: promote those confined to two or more members, keep the
        // rest as shares with the modes seen inside the region.
        for (name, (mode, span)) in &global_in_region {
            let all_sites = self.scan.globals.get(name).cloned().unwrap_or_default();
            let all_inside = all_sites.iter().all(|(elem, _, _)| self.within(elem));
            let owners: BTreeSet<_> =
                all_sites.iter().filter_map(|(elem, _, _)| self.owner(elem)).collect();
            if all_inside && owners.len() >= 2 {
                set.insert(PropertyEntry::new(
                    PropertyKind::Effect,
                    SubjectKind::LocalState,
                    name,
                    *mode,
                    span.clone(),
                ));
            } else {
                set.insert(PropertyEntry::new(
                    PropertyKind::Share,
                    SubjectKind::GlobalState,
                    name,
                    *mode,
                    span.clone(),
                ));
            }
        }

        set.canonical()
    }

    fn structural_entries(
        &self,
        info: &crate::lang::symbols::SegmentInfo,
        seg_elem: &str,
        set: &mut PropertySet,
    ) {
        match &info.kind {
            SegmentKind::Function { name } => {
                if info.params.is_empty() {
                    if self.trigger_kept(name, seg_elem, false) {
                        set.insert(PropertyEntry::new(
                            PropertyKind::Receive,
                            SubjectKind::CallTrigger,
                            name,
                            AccessMode::NotApplicable,
                            info.span.clone(),
                        ));
                    }
                } else if self.trigger_kept(name, seg_elem, true) {
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
            }
            SegmentKind::Handler { event } => {
                set.insert(PropertyEntry::new(
                    PropertyKind::Receive,
                    SubjectKind::EventTrigger,
                    event,
                    AccessMode::NotApplicable,
                    info.span.clone(),
                ));
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
    }

    /// True when the invocation of function `name` (a whole-segment member
    /// at `seg_elem`) still crosses the region boundary.
    fn trigger_kept(&self, name: &str, seg_elem: &str, args_only: bool) -> bool {
        let sites = self.scan.calls.get(name).cloned().unwrap_or_default();
        let foreign: Vec<_> = sites
            .iter()
            .filter(|(elem, has_args)| {
                (!args_only || *has_args) && self.owner(elem).as_deref() != Some(seg_elem)
            })
            .collect();
        foreign.is_empty() || foreign.iter().any(|(elem, _)| !self.within(elem))
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_stmt(
        &self,
        info: &crate::lang::symbols::SegmentInfo,
        seg_elem: &str,
        seg_is_member: bool,
        stmt: &Stmt,
        set: &mut PropertySet,
        globals: &mut BTreeMap<String, (AccessMode, SourceSpan)>,
    ) {
        let elem = element_id(0, &self.file, stmt.span.start);
        let in_region = self.within(&elem);
        if in_region {
            match &stmt.kind {
                StmtKind::VarDecl { name, .. } => {
                    set.insert(PropertyEntry::new(
                        PropertyKind::Effect,
                        SubjectKind::LocalState,
                        &name.name,
                        AccessMode::Write,
                        name.span.clone(),
                    ));
                }
                StmtKind::GlobalDecl { name, .. } => {
                    note_global(globals, &name.name, AccessMode::Write, &name.span);
                }
                StmtKind::Assign { name, .. } => {
                    match self.symbols.classify(info.key, &name.name) {
                        Some(crate::lang::symbols::NameClass::Global) => {
                            note_global(globals, &name.name, AccessMode::Write, &name.span);
                        }
                        Some(_) => {
                            set.insert(PropertyEntry::new(
                                PropertyKind::Effect,
                                SubjectKind::LocalState,
                                &name.name,
                                AccessMode::Write,
                                name.span.clone(),
                            ));
                        }
                        None => {}
                    }
                }
                StmtKind::Emit { event, .. } => {
                    if self.emit_kept(&event.name, &elem) {
                        set.insert(PropertyEntry::new(
                            PropertyKind::Send,
                            SubjectKind::Message,
                            &event.name,
                            AccessMode::NotApplicable,
                            stmt.span.clone(),
                        ));
                    }
                }
                StmtKind::Return { value: Some(_) } => {
                    if let SegmentKind::Function { name } = &info.kind {
                        if self.return_kept(name, &elem) {
                            set.insert(PropertyEntry::new(
                                PropertyKind::Send,
                                SubjectKind::ReturnValue,
                                name,
                                AccessMode::NotApplicable,
                                stmt.span.clone(),
                            ));
                        }
                    }
                }
                StmtKind::Call { name, args } => {
                    if !args.is_empty() && self.call_msg_kept(&name.name, &elem) {
                        set.insert(PropertyEntry::new(
                            PropertyKind::Send,
                            SubjectKind::Message,
                            &name.name,
                            AccessMode::NotApplicable,
                            stmt.span.clone(),
                        ));
                    }
                }
                StmtKind::HwWrite { device, .. } => {
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
                _ => {}
            }
            for e in stmt.exprs() {
                self.walk_expr(info, seg_is_member, &elem, e, set, globals);
            }
        }
        if !matches!(stmt.kind, StmtKind::After { .. }) {
            for b in stmt.blocks() {
                for s in &b.stmts {
                    self.walk_stmt(info, seg_elem, seg_is_member, s, set, globals);
                }
            }
        }
    }

    fn walk_expr(
        &self,
        info: &crate::lang::symbols::SegmentInfo,
        seg_is_member: bool,
        elem: &str,
        expr: &Expr,
        set: &mut PropertySet,
        globals: &mut BTreeMap<String, (AccessMode, SourceSpan)>,
    ) {
        match &expr.kind {
            ExprKind::Name(n) => match self.symbols.classify(info.key, &n.name) {
                Some(crate::lang::symbols::NameClass::Local) => {
                    set.insert(PropertyEntry::new(
                        PropertyKind::Effect,
                        SubjectKind::LocalState,
                        &n.name,
                        AccessMode::Read,
                        n.span.clone(),
                    ));
                }
                Some(crate::lang::symbols::NameClass::Parameter) => {
                    // For whole-segment members the structural pass decides
                    // whether parameter receives survive.
                    if !seg_is_member {
                        set.insert(PropertyEntry::new(
                            PropertyKind::Receive,
                            SubjectKind::Parameter,
                            &n.name,
                            AccessMode::NotApplicable,
                            n.span.clone(),
                        ));
                    }
                }
                Some(crate::lang::symbols::NameClass::Global) => {
                    note_global(globals, &n.name, AccessMode::Read, &n.span);
                }
                _ => {}
            },
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
                    self.walk_expr(info, seg_is_member, elem, a, set, globals);
                }
                if !args.is_empty() && self.call_msg_kept(&name.name, elem) {
                    set.insert(PropertyEntry::new(
                        PropertyKind::Send,
                        SubjectKind::Message,
                        &name.name,
                        AccessMode::NotApplicable,
                        expr.span.clone(),
                    ));
                }
                if self.call_msg_kept(&name.name, elem) {
                    set.insert(PropertyEntry::new(
                        PropertyKind::Receive,
                        SubjectKind::Message,
                        &name.name,
                        AccessMode::NotApplicable,
                        expr.span.clone(),
                    ));
                }
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.walk_expr(info, seg_is_member, elem, lhs, set, globals);
                self.walk_expr(info, seg_is_member, elem, rhs, set, globals);
            }
            ExprKind::Unary { operand, .. } => {
                self.walk_expr(info, seg_is_member, elem, operand, set, globals)
            }
            ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) => {}
        }
    }

    /// Caller-side message flow survives unless the callee segment is a
    /// different member inside the region.
    fn call_msg_kept(&self, callee: &str, site_elem: &str) -> bool {
        let Some(sig) = self.symbols.functions.get(callee) else { return false };
        let callee_elem = element_id(1, &self.file, sig.segment.0);
        let own = self.owner(site_elem);
        !(self.within(&callee_elem) && own.as_deref() != Some(callee_elem.as_str()))
    }

    fn emit_kept(&self, event: &str, site_elem: &str) -> bool {
        let own = self.owner(site_elem);
        let handlers: Vec<String> = self
            .symbols
            .events
            .get(event)
            .map(|info| {
                info.handlers
                    .iter()
                    .map(|k| element_id(1, &self.file, k.0))
                    .filter(|h| own.as_deref() != Some(h.as_str()))
                    .collect()
            })
            .unwrap_or_default();
        handlers.is_empty() || handlers.iter().any(|h| !self.within(h))
    }

    fn return_kept(&self, func: &str, return_site_elem: &str) -> bool {
        let own = self.owner(return_site_elem);
        let sites = self.scan.calls.get(func).cloned().unwrap_or_default();
        let foreign: Vec<_> = sites.iter().filter(|(elem, _)| self.owner(elem) != own).collect();
        foreign.is_empty() || foreign.iter().any(|(elem, _)| !self.within(elem))
    }
}

fn note_global(
    globals: &mut BTreeMap<String, (AccessMode, SourceSpan)>,
    name: &str,
    mode: AccessMode,
    span: &SourceSpan,
) {
    globals
        .entry(name.to_string())
        .and_modify(|(m, s)| {
            *m = merge_modes(*m, mode);
            if span.start < s.start {
                *s = span.clone();
            }
        })
        .or_insert((mode, span.clone()));
}
