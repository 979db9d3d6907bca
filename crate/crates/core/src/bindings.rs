//! Inter-element bindings along two orthogonal dimensions.
//!
//! Causal-Temporal bindings describe how control moves and come in three
//! subtypes: Sequential (fall-through between adjacent statements), Branch
//! (a jump authored in the user's code: conditionals, loops, calls), and
//! Event (a transfer performed by the runtime dispatcher: `when`, `after`,
//! and `emit`). Communicative bindings describe how data moves, through
//! matched Sends/Receives and through Shares. Effects never participate.
//!
//! Conditions are not a third dimension: the Boolean expression of an
//! `if`/`while`/`repeat` governs its Branch binding and is attached to it.

use crate::elements::ElementTree;
use crate::lang::ast::{Expr, ExprKind, Program, Stmt, StmtKind};
use crate::lang::symbols::{SegmentKey, SymbolTable};
use crate::lang::unparse::unparse_expr;
use crate::properties::{AccessMode, PropertyEntry, PropertyKind, SubjectKind};
use crate::span::SourceSpan;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    CausalTemporal,
    Communicative,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::CausalTemporal => "causal-temporal",
            Dimension::Communicative => "communicative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CtSubtype {
    Sequential,
    Branch,
    Event,
}

impl CtSubtype {
    pub fn as_str(self) -> &'static str {
        match self {
            CtSubtype::Sequential => "sequential",
            CtSubtype::Branch => "branch",
            CtSubtype::Event => "event",
        }
    }
}

/// Reference to a property entry on a specific element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRef {
    pub element: String,
    pub kind: PropertyKind,
    pub subject_kind: SubjectKind,
    pub subject_name: String,
}

impl EntryRef {
    fn new(element: &str, entry: &PropertyEntry) -> Self {
        EntryRef {
            element: element.to_string(),
            kind: entry.kind,
            subject_kind: entry.subject_kind,
            subject_name: entry.subject_name.clone(),
        }
    }
}

/// Communicative payload: either a matched send/receive pair or a shared
/// subject with each side's access mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Payload {
    SendReceive { send: EntryRef, receive: EntryRef },
    Share {
        subject_kind: SubjectKind,
        subject_name: String,
        from_mode: AccessMode,
        to_mode: AccessMode,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub id: String,
    pub from: String,
    pub to: String,
    pub dimension: Dimension,
    /// Present iff the dimension is causal-temporal.
    pub subtype: Option<CtSubtype>,
    /// Present iff the dimension is communicative.
    pub payload: Option<Payload>,
    /// Present for branch bindings governed by `if`/`while`/`repeat`;
    /// calls carry none.
    pub condition_span: Option<SourceSpan>,
    pub condition_text: Option<String>,
    pub evidence: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub code: String,
    pub message: String,
    pub span: SourceSpan,
}

fn ct_binding(
    subtype: CtSubtype,
    from: &str,
    to: &str,
    evidence: SourceSpan,
    condition: Option<&Expr>,
) -> Binding {
    Binding {
        id: format!(
            "ct:{}:{}->{}@{}:{}",
            subtype.as_str(),
            from,
            to,
            evidence.start.line,
            evidence.start.col
        ),
        from: from.to_string(),
        to: to.to_string(),
        dimension: Dimension::CausalTemporal,
        subtype: Some(subtype),
        payload: None,
        condition_span: condition.map(|c| c.span.clone()),
        condition_text: condition.map(unparse_expr),
        evidence,
    }
}

/// Step three of the cycle, control half: extract every causal-temporal
/// binding. Returns `unbound-emit` warnings for `emit` sites without a
/// matching handler.
pub fn extract_causal_temporal(
    program: &Program,
    symbols: &SymbolTable,
    tree: &ElementTree,
) -> (Vec<Binding>, Vec<Warning>) {
    let mut ctx = CtWalk {
        file: program.span.file.clone(),
        symbols,
        root_id: tree.root_id.clone(),
        bindings: Vec::new(),
        warnings: Vec::new(),
    };

    // Handler registration: dispatch arrives from outside any segment.
    let root_id = ctx.root_id.clone();
    for info in symbols.events.values() {
        for (key, span) in info.handlers.iter().zip(&info.handler_spans) {
            let to = seg_element_id(&ctx.file, *key);
            ctx.bindings
                .push(ct_binding(CtSubtype::Event, &root_id, &to, span.clone(), None));
        }
    }

    for info in &symbols.segments {
        let stmts = crate::elements::segment_stmts(program, info);
        ctx.block(&stmts);
    }

    (ctx.bindings, ctx.warnings)
}

fn seg_element_id(file: &str, key: SegmentKey) -> String {
    crate::elements::element_id(1, file, key.0)
}

fn stmt_element_id(file: &str, stmt: &Stmt) -> String {
    crate::elements::element_id(0, file, stmt.span.start)
}

struct CtWalk<'s> {
    file: String,
    symbols: &'s SymbolTable,
    root_id: String,
    bindings: Vec<Binding>,
    warnings: Vec<Warning>,
}

impl<'s> CtWalk<'s> {
    fn block(&mut self, stmts: &[&Stmt]) {
        // Fall-through: adjacent statements bind sequentially.
        for pair in stmts.windows(2) {
            let from = stmt_element_id(&self.file, pair[0]);
            let to = stmt_element_id(&self.file, pair[1]);
            self.bindings.push(ct_binding(
                CtSubtype::Sequential,
                &from,
                &to,
                pair[1].span.clone(),
                None,
            ));
        }
        for stmt in stmts {
            self.stmt(stmt);
        }
    }

    fn owned_block(&mut self, stmts: &[Stmt]) {
        let refs: Vec<&Stmt> = stmts.iter().collect();
        self.block(&refs);
    }

    fn stmt(&mut self, stmt: &Stmt) {
        let from = stmt_element_id(&self.file, stmt);
        match &stmt.kind {
            StmtKind::If { cond, then_block, else_block } => {
                for block in std::iter::once(then_block).chain(else_block.iter()) {
                    if let Some(first) = block.stmts.first() {
                        let to = stmt_element_id(&self.file, first);
                        self.bindings.push(ct_binding(
                            CtSubtype::Branch,
                            &from,
                            &to,
                            stmt.span.clone(),
                            Some(cond),
                        ));
                    }
                    self.owned_block(&block.stmts);
                }
            }
            StmtKind::While { cond, body } => {
                if let Some(first) = body.stmts.first() {
                    let to = stmt_element_id(&self.file, first);
                    self.bindings.push(ct_binding(
                        CtSubtype::Branch,
                        &from,
                        &to,
                        stmt.span.clone(),
                        Some(cond),
                    ));
                }
                self.owned_block(&body.stmts);
            }
            StmtKind::Repeat { count, body } => {
                if let Some(first) = body.stmts.first() {
                    let to = stmt_element_id(&self.file, first);
                    self.bindings.push(ct_binding(
                        CtSubtype::Branch,
                        &from,
                        &to,
                        stmt.span.clone(),
                        Some(count),
                    ));
                }
                self.owned_block(&body.stmts);
            }
            StmtKind::After { body, .. } => {
                // The runtime clock performs the dispatch: Event, not Branch.
                let to = crate::elements::element_id(1, &self.file, body.span.start);
                self.bindings.push(ct_binding(
                    CtSubtype::Event,
                    &from,
                    &to,
                    stmt.span.clone(),
                    None,
                ));
                // Body statements are walked as their own segment.
            }
            StmtKind::Emit { event, .. } => {
                let handlers = self
                    .symbols
                    .events
                    .get(&event.name)
                    .map(|info| info.handlers.clone())
                    .unwrap_or_default();
                if handlers.is_empty() {
                    self.warnings.push(Warning {
                        code: "unbound-emit".to_string(),
                        message: format!("emit `{}` has no matching handler", event.name),
                        span: stmt.span.clone(),
                    });
                } else {
                    for key in handlers {
                        let to = seg_element_id(&self.file, key);
                        self.bindings.push(ct_binding(
                            CtSubtype::Event,
                            &from,
                            &to,
                            stmt.span.clone(),
                            None,
                        ));
                    }
                }
            }
            _ => {}
        }
        // Every call is a user-authored jump to the callee segment.
        for expr in stmt.exprs() {
            self.calls_in_expr(&from, expr);
        }
        if let StmtKind::Call { name, .. } = &stmt.kind {
            self.call_edge(&from, &name.name, &stmt.span);
        }
    }

    fn calls_in_expr(&mut self, from: &str, expr: &Expr) {
        expr.walk(&mut |e| {
            if let ExprKind::Call { name, .. } = &e.kind {
                self.call_edge(from, &name.name, &e.span);
            }
        });
    }

    fn call_edge(&mut self, from: &str, callee: &str, span: &SourceSpan) {
        if let Some(sig) = self.symbols.functions.get(callee) {
            let to = seg_element_id(&self.file, sig.segment);
            self.bindings
                .push(ct_binding(CtSubtype::Branch, from, &to, span.clone(), None));
        }
    }
}

/// Warnings for handlers whose event is never emitted in source; such
/// handlers fire only on external stimuli.
pub fn collect_event_warnings(symbols: &SymbolTable) -> Vec<Warning> {
    let mut out = Vec::new();
    for (event, info) in &symbols.events {
        if info.emit_sites.is_empty() {
            for span in &info.handler_spans {
                out.push(Warning {
                    code: "orphan-handler".to_string(),
                    message: format!(
                        "no `emit {event}` in source; this handler fires only on external events"
                    ),
                    span: span.clone(),
                });
            }
        }
    }
    out
}

/// Step three, data half: extract communicative bindings from the segment
/// property sets alone. Control constructs are never consulted; matching
/// works through message subjects and shared-state subjects.
pub fn extract_communicative(symbols: &SymbolTable, tree: &ElementTree) -> Vec<Binding> {
    let mut bindings = Vec::new();

    let segments: Vec<_> = tree.segments().collect();
    let seg_by_key: BTreeMap<SegmentKey, &crate::elements::Element> = segments
        .iter()
        .map(|e| (SegmentKey(e.span.start), *e))
        .collect();

    for sender in &segments {
        for send in &sender.properties.sends {
            match send.subject_kind {
                SubjectKind::Message => {
                    // A message subject is either a callee function or an
                    // emitted event.
                    if let Some(sig) = symbols.functions.get(&send.subject_name) {
                        if let Some(callee) = seg_by_key.get(&sig.segment) {
                            for recv in &callee.properties.receives {
                                if recv.subject_kind == SubjectKind::Parameter {
                                    bindings.push(send_receive_binding(
                                        sender, callee, send, recv,
                                    ));
                                }
                            }
                        }
                    } else if let Some(info) = symbols.events.get(&send.subject_name) {
                        for key in &info.handlers {
                            if let Some(handler) = seg_by_key.get(key) {
                                for recv in &handler.properties.receives {
                                    if recv.subject_kind == SubjectKind::Parameter {
                                        bindings.push(send_receive_binding(
                                            sender, handler, send, recv,
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
                SubjectKind::ReturnValue => {
                    // Matched by callers that consume the value.
                    for consumer in &segments {
                        for recv in &consumer.properties.receives {
                            if recv.subject_kind == SubjectKind::Message
                                && recv.subject_name == send.subject_name
                            {
                                bindings.push(send_receive_binding(
                                    sender, consumer, send, recv,
                                ));
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }

    // Shares: one binding per pair of elements touching the same subject.
    let mut by_subject: BTreeMap<(SubjectKind, String), Vec<(&crate::elements::Element, &PropertyEntry)>> =
        BTreeMap::new();
    for seg in &segments {
        for share in &seg.properties.shares {
            by_subject
                .entry((share.subject_kind, share.subject_name.clone()))
                .or_default()
                .push((seg, share));
        }
    }
    for ((subject_kind, subject_name), accessors) in by_subject {
        for i in 0..accessors.len() {
            for j in (i + 1)..accessors.len() {
                let (a, ea) = accessors[i];
                let (b, eb) = accessors[j];
                bindings.push(Binding {
                    id: format!(
                        "comm:share:{}:{}:{}<->{}",
                        subject_kind.as_str(),
                        subject_name,
                        a.id,
                        b.id
                    ),
                    from: a.id.clone(),
                    to: b.id.clone(),
                    dimension: Dimension::Communicative,
                    subtype: None,
                    payload: Some(Payload::Share {
                        subject_kind,
                        subject_name: subject_name.clone(),
                        from_mode: ea.mode,
                        to_mode: eb.mode,
                    }),
                    condition_span: None,
                    condition_text: None,
                    evidence: ea.span.clone(),
                });
            }
        }
    }

    dedup_bindings(&mut bindings);
    bindings
}

fn send_receive_binding(
    from: &crate::elements::Element,
    to: &crate::elements::Element,
    send: &PropertyEntry,
    recv: &PropertyEntry,
) -> Binding {
    debug_assert!(send.kind != PropertyKind::Effect && recv.kind != PropertyKind::Effect);
    Binding {
        id: format!(
            "comm:sr:{}:{}->{}:{}:{}->{}",
            send.subject_kind.as_str(),
            send.subject_name,
            recv.subject_kind.as_str(),
            recv.subject_name,
            from.id,
            to.id
        ),
        from: from.id.clone(),
        to: to.id.clone(),
        dimension: Dimension::Communicative,
        subtype: None,
        payload: Some(Payload::SendReceive {
            send: EntryRef::new(&from.id, send),
            receive: EntryRef::new(&to.id, recv),
        }),
        condition_span: None,
        condition_text: None,
        evidence: send.span.clone(),
    }
}

fn dedup_bindings(bindings: &mut Vec<Binding>) {
    let mut seen = std::collections::BTreeSet::new();
    bindings.retain(|b| seen.insert(b.id.clone()));
}

/// Canonical report order: by evidence position, then dimension, subtype,
/// and endpoints.
pub fn sort_bindings(bindings: &mut [Binding]) {
    bindings.sort_by(|a, b| {
        (a.evidence.start, a.dimension, a.subtype, &a.from, &a.to, &a.id).cmp(&(
            b.evidence.start,
            b.dimension,
            b.subtype,
            &b.from,
            &b.to,
            &b.id,
        ))
    });
}

/// The four questions askable of any element, at every scale.
pub fn element_stems() -> [&'static str; 4] {
    [
        "What does this element receive?",
        "What does it send?",
        "What does it change inside itself?",
        "What does it share?",
    ]
}

/// The question stems attached to a binding, keyed by its subtype.
pub fn binding_stems(dimension: Dimension, subtype: Option<CtSubtype>) -> &'static [&'static str] {
    match (dimension, subtype) {
        (Dimension::CausalTemporal, Some(CtSubtype::Sequential)) => {
            &["What happens next?", "What runs after this?"]
        }
        (Dimension::CausalTemporal, Some(CtSubtype::Branch)) => {
            &["Under what conditions does this run?", "How many times?"]
        }
        (Dimension::CausalTemporal, Some(CtSubtype::Event)) => {
            &["What triggers this?", "When does this fire?"]
        }
        _ => &["What does this receive?", "What does it send?", "What do these share?"],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{identify_elements, ScalePolicy};
    use crate::lang::{parse, resolve_names};
    use crate::properties::compute_all_properties;

    fn setup(src: &str) -> (Vec<Binding>, Vec<Warning>, ElementTree) {
        let p = parse("t.flare", src).unwrap();
        let s = resolve_names(&p).unwrap();
        let mut t = identify_elements(&p, &s, ScalePolicy::All);
        compute_all_properties(&p, &s, &mut t);
        let (mut ct, warnings) = extract_causal_temporal(&p, &s, &t);
        let comm = extract_communicative(&s, &t);
        ct.extend(comm);
        sort_bindings(&mut ct);
        (ct, warnings, t)
    }

    #[test]
    fn single_statement_program_has_no_bindings() {
        let (bindings, warnings, _) = setup("print(1);");
        assert!(bindings.is_empty());
        assert!(warnings.is_empty());
    }

    #[test]
    fn adjacent_statements_bind_sequentially() {
        let (bindings, _, _) = setup("print(1);\nprint(2);\nprint(3);\n");
        let seq: Vec<_> =
            bindings.iter().filter(|b| b.subtype == Some(CtSubtype::Sequential)).collect();
        assert_eq!(seq.len(), 2);
        assert!(bindings.iter().all(|b| b.subtype == Some(CtSubtype::Sequential)));
    }

    #[test]
    fn branch_bindings_carry_conditions_only_for_governed_jumps() {
        let (bindings, _, _) =
            setup("func f() { print(1); }\nif 1 < 2 { f(); } else { print(0); }\n");
        let branches: Vec<_> =
            bindings.iter().filter(|b| b.subtype == Some(CtSubtype::Branch)).collect();
        // if->then-first, if->else-first, call->callee
        assert_eq!(branches.len(), 3);
        let with_cond: Vec<_> =
            branches.iter().filter(|b| b.condition_span.is_some()).collect();
        assert_eq!(with_cond.len(), 2);
        assert!(with_cond.iter().all(|b| b.condition_text.as_deref() == Some("1 < 2")));
        let call = branches.iter().find(|b| b.condition_span.is_none()).unwrap();
        assert!(call.to.starts_with("segment:"));
    }

    #[test]
    fn when_after_emit_yield_event_bindings_only() {
        let (bindings, _, t) =
            setup("when go { print(1); }\nemit go;\nafter 5 { print(2); }\n");
        let events: Vec<_> =
            bindings.iter().filter(|b| b.subtype == Some(CtSubtype::Event)).collect();
        assert_eq!(events.len(), 3);
        // Registration edge originates at the system element.
        assert!(events.iter().any(|b| b.from == t.root_id));
        // No event binding carries a condition.
        assert!(events.iter().all(|b| b.condition_span.is_none()));
    }

    #[test]
    fn unbound_emit_warns_instead_of_failing() {
        let (bindings, warnings, _) = setup("emit ghost;\n");
        assert!(bindings.is_empty());
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].code, "unbound-emit");
    }

    #[test]
    fn shares_pair_each_accessor_once() {
        let (bindings, _, _) = setup(
            "when a { global score = 1; }\nwhen b { global score = 2; }\n",
        );
        let shares: Vec<_> = bindings
            .iter()
            .filter(|b| matches!(b.payload, Some(Payload::Share { .. })))
            .collect();
        assert_eq!(shares.len(), 1);
        match shares[0].payload.as_ref().unwrap() {
            Payload::Share { from_mode, to_mode, subject_name, .. } => {
                assert_eq!(subject_name, "score");
                assert_eq!(*from_mode, AccessMode::Write);
                assert_eq!(*to_mode, AccessMode::Write);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_accessor_share_has_no_binding() {
        let (bindings, _, _) = setup("global t = 5;\nprint(t);\n");
        assert!(bindings
            .iter()
            .all(|b| !matches!(b.payload, Some(Payload::Share { .. }))));
    }

    #[test]
    fn no_binding_payload_references_effects() {
        let (bindings, _, _) = setup(
            "func f(x) { var l = x + 1; return l; }\nvar y = f(2);\nprint(y);\n",
        );
        for b in &bindings {
            if let Some(Payload::SendReceive { send, receive }) = &b.payload {
                assert_ne!(send.kind, PropertyKind::Effect);
                assert_ne!(receive.kind, PropertyKind::Effect);
            }
        }
    }

    #[test]
    fn stems_match_fixed_strings() {
        assert_eq!(
            binding_stems(Dimension::CausalTemporal, Some(CtSubtype::Event)),
            &["What triggers this?", "When does this fire?"]
        );
        assert_eq!(
            binding_stems(Dimension::CausalTemporal, Some(CtSubtype::Branch)),
            &["Under what conditions does this run?", "How many times?"]
        );
        assert_eq!(
            binding_stems(Dimension::CausalTemporal, Some(CtSubtype::Sequential)),
            &["What happens next?", "What runs after this?"]
        );
        assert_eq!(
            binding_stems(Dimension::Communicative, None),
            &["What does this receive?", "What does it send?", "What do these share?"]
        );
        assert_eq!(
            element_stems(),
            [
                "What does this element receive?",
                "What does it send?",
                "What does it change inside itself?",
                "What does it share?"
            ]
        );
    }
}
