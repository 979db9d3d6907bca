//! Name resolution and the scoped symbol table.
//!
//! Classification rules:
//! - `var` declares a segment-local, visible from its declaration point to
//!   the end of the enclosing segment body. Locals never cross segment
//!   boundaries; an `after` body is its own segment and cannot see the
//!   locals of the segment that scheduled it.
//! - `global` declares or assigns a program global, from anywhere.
//! - A bare assignment resolves to an enclosing local or parameter. At top
//!   level an assignment to an undeclared name declares a global; inside
//!   any other segment it is a resolve error.
//! - A name has one classification per program: globals, functions, locals,
//!   and parameters may not shadow each other. Event names and hardware
//!   device names live in separate namespaces, except that event names may
//!   not collide with function names (both can carry message payloads).

use crate::lang::ast::*;
use crate::span::{Pos, SourceSpan};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ResolveError {
    pub span: SourceSpan,
    pub message: String,
}

/// Identifies a segment by the start position of its element span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentKey(pub Pos);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentKind {
    /// The ordered top-level statements outside any definition.
    Script,
    Function { name: String },
    Handler { event: String },
    /// The body of an `after` statement; runs later as its own segment.
    AfterBody,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentInfo {
    pub key: SegmentKey,
    pub kind: SegmentKind,
    /// Human label: `script`, the function name, `handler:<event>`, or
    /// `after@<line>`.
    pub name: String,
    pub span: SourceSpan,
    pub params: Vec<Ident>,
    pub locals: BTreeMap<String, SourceSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSig {
    pub arity: usize,
    pub name_span: SourceSpan,
    pub segment: SegmentKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventInfo {
    /// Handler segments in declaration order.
    pub handlers: Vec<SegmentKey>,
    pub handler_spans: Vec<SourceSpan>,
    pub emit_sites: Vec<SourceSpan>,
}

/// Classification of a value-namespace name within a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameClass {
    Local,
    Parameter,
    Global,
    Function,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    pub file: String,
    pub globals: BTreeMap<String, SourceSpan>,
    pub functions: BTreeMap<String, FunctionSig>,
    pub events: BTreeMap<String, EventInfo>,
    pub devices: BTreeMap<String, SourceSpan>,
    /// All segments in source order of their element spans.
    pub segments: Vec<SegmentInfo>,
}

impl SymbolTable {
    pub fn segment(&self, key: SegmentKey) -> Option<&SegmentInfo> {
        self.segments.iter().find(|s| s.key == key)
    }

    /// Classify `name` as seen from inside the segment at `key`.
    pub fn classify(&self, key: SegmentKey, name: &str) -> Option<NameClass> {
        if let Some(seg) = self.segment(key) {
            if seg.locals.contains_key(name) {
                return Some(NameClass::Local);
            }
            if seg.params.iter().any(|p| p.name == name) {
                return Some(NameClass::Parameter);
            }
        }
        if self.globals.contains_key(name) {
            return Some(NameClass::Global);
        }
        if self.functions.contains_key(name) {
            return Some(NameClass::Function);
        }
        None
    }

    /// Count of user-introduced value names (globals, functions, locals,
    /// parameters).
    pub fn user_name_count(&self) -> usize {
        self.globals.len()
            + self.functions.len()
            + self
                .segments
                .iter()
                .map(|s| s.locals.len() + s.params.len())
                .sum::<usize>()
    }
}

/// Resolve every name in `program` and build the symbol table.
pub fn resolve_names(program: &Program) -> Result<SymbolTable, ResolveError> {
    let mut resolver = Resolver {
        table: SymbolTable {
            file: program.span.file.clone(),
            globals: BTreeMap::new(),
            functions: BTreeMap::new(),
            events: BTreeMap::new(),
            devices: BTreeMap::new(),
            segments: Vec::new(),
        },
    };
    resolver.collect(program)?;
    resolver.check_segments(program)?;
    resolver.table.segments.sort_by_key(|s| s.key.0);
    Ok(resolver.table)
}

struct Resolver {
    table: SymbolTable,
}

fn err(span: &SourceSpan, message: impl Into<String>) -> ResolveError {
    ResolveError { span: span.clone(), message: message.into() }
}

impl Resolver {
    // Phase one: functions, events, devices, globals, and the segment list.
    fn collect(&mut self, program: &Program) -> Result<(), ResolveError> {
        for item in &program.items {
            if let TopItem::Func(f) = item {
                let sig = FunctionSig {
                    arity: f.params.len(),
                    name_span: f.name.span.clone(),
                    segment: SegmentKey(f.span.start),
                };
                if self.table.functions.insert(f.name.name.clone(), sig).is_some() {
                    return Err(err(
                        &f.name.span,
                        format!("duplicate function name `{}`", f.name.name),
                    ));
                }
            }
        }

        for item in &program.items {
            match item {
                TopItem::Func(f) => {
                    self.collect_block(&f.body)?;
                }
                TopItem::Handler(h) => {
                    let info = self.table.events.entry(h.event.name.clone()).or_default();
                    info.handlers.push(SegmentKey(h.span.start));
                    info.handler_spans.push(h.span.clone());
                    self.collect_block(&h.body)?;
                }
                TopItem::Stmt(s) => self.collect_stmt(s)?,
            }
        }

        // Implicit globals: top-level bare assignments to names that are not
        // script locals declared earlier.
        let script_stmts = program.script_stmts();
        let mut script_locals: Vec<String> = Vec::new();
        for s in &script_stmts {
            self.scan_implicit_globals(s, &mut script_locals)?;
        }

        for (event, _) in self.table.events.clone() {
            if self.table.functions.contains_key(&event) {
                let span = self.table.events[&event]
                    .handler_spans
                    .first()
                    .cloned()
                    .or_else(|| self.table.events[&event].emit_sites.first().cloned())
                    .expect("event with no evidence");
                return Err(err(
                    &span,
                    format!("event name `{event}` collides with a function name"),
                ));
            }
        }

        // Segment inventory.
        if let Some(first) = script_stmts.first() {
            let span = script_stmts
                .iter()
                .map(|s| s.span.clone())
                .reduce(|a, b| a.hull(&b))
                .unwrap();
            let _ = first;
            self.table.segments.push(SegmentInfo {
                key: SegmentKey(span.start),
                kind: SegmentKind::Script,
                name: "script".to_string(),
                span,
                params: Vec::new(),
                locals: BTreeMap::new(),
            });
        }
        for item in &program.items {
            match item {
                TopItem::Func(f) => {
                    self.table.segments.push(SegmentInfo {
                        key: SegmentKey(f.span.start),
                        kind: SegmentKind::Function { name: f.name.name.clone() },
                        name: f.name.name.clone(),
                        span: f.span.clone(),
                        params: f.params.clone(),
                        locals: BTreeMap::new(),
                    });
                    self.collect_after_segments(&f.body);
                }
                TopItem::Handler(h) => {
                    self.table.segments.push(SegmentInfo {
                        key: SegmentKey(h.span.start),
                        kind: SegmentKind::Handler { event: h.event.name.clone() },
                        name: format!("handler:{}", h.event.name),
                        span: h.span.clone(),
                        params: h.params.clone(),
                        locals: BTreeMap::new(),
                    });
                    self.collect_after_segments(&h.body);
                }
                TopItem::Stmt(s) => self.collect_after_segments_stmt(s),
            }
        }
        Ok(())
    }

    /// Record globals, events, and devices evidenced inside one statement,
    /// recursing into every nested block (including `after` bodies).
    fn collect_stmt(&mut self, stmt: &Stmt) -> Result<(), ResolveError> {
        if let StmtKind::GlobalDecl { name, .. } = &stmt.kind {
            self.table
                .globals
                .entry(name.name.clone())
                .or_insert_with(|| name.span.clone());
        }
        if let StmtKind::Emit { event, .. } = &stmt.kind {
            self.table
                .events
                .entry(event.name.clone())
                .or_default()
                .emit_sites
                .push(stmt.span.clone());
        }
        if let StmtKind::HwWrite { device, .. } = &stmt.kind {
            self.table
                .devices
                .entry(device.name.clone())
                .or_insert_with(|| device.span.clone());
        }
        for e in stmt.exprs() {
            e.walk(&mut |x| {
                if let ExprKind::HwRead { device } = &x.kind {
                    self.table
                        .devices
                        .entry(device.name.clone())
                        .or_insert_with(|| device.span.clone());
                }
            });
        }
        for b in stmt.blocks() {
            self.collect_block(b)?;
        }
        Ok(())
    }

    fn collect_block(&mut self, block: &Block) -> Result<(), ResolveError> {
        for s in &block.stmts {
            self.collect_stmt(s)?;
        }
        Ok(())
    }

    fn scan_implicit_globals(
        &mut self,
        stmt: &Stmt,
        script_locals: &mut Vec<String>,
    ) -> Result<(), ResolveError> {
        match &stmt.kind {
            StmtKind::VarDecl { name, .. } => script_locals.push(name.name.clone()),
            StmtKind::Assign { name, .. } => {
                if !script_locals.contains(&name.name)
                    && !self.table.functions.contains_key(&name.name)
                {
                    self.table
                        .globals
                        .entry(name.name.clone())
                        .or_insert_with(|| name.span.clone());
                }
            }
            StmtKind::After { .. } => return Ok(()), // separate segment
            _ => {}
        }
        for b in stmt.blocks() {
            for s in &b.stmts {
                self.scan_implicit_globals(s, script_locals)?;
            }
        }
        Ok(())
    }

    fn collect_after_segments(&mut self, block: &Block) {
        for s in &block.stmts {
            self.collect_after_segments_stmt(s);
        }
    }

    fn collect_after_segments_stmt(&mut self, stmt: &Stmt) {
        if let StmtKind::After { body, .. } = &stmt.kind {
            self.table.segments.push(SegmentInfo {
                key: SegmentKey(body.span.start),
                kind: SegmentKind::AfterBody,
                name: format!("after@{}", stmt.span.start.line),
                span: body.span.clone(),
                params: Vec::new(),
                locals: BTreeMap::new(),
            });
        }
        for b in stmt.blocks() {
            self.collect_after_segments(b);
        }
    }

    // Phase two: per-segment scope checks and local inventories.
    fn check_segments(&mut self, program: &Program) -> Result<(), ResolveError> {
        let script_key = self
            .table
            .segments
            .iter()
            .find(|s| s.kind == SegmentKind::Script)
            .map(|s| s.key);

        for item in &program.items {
            match item {
                TopItem::Func(f) => {
                    self.check_params(&f.params)?;
                    let key = SegmentKey(f.span.start);
                    self.check_body(&f.body, key, &f.params, false)?;
                }
                TopItem::Handler(h) => {
                    self.check_params(&h.params)?;
                    let key = SegmentKey(h.span.start);
                    self.check_body(&h.body, key, &h.params, false)?;
                }
                TopItem::Stmt(_) => {}
            }
        }
        if let Some(key) = script_key {
            let stmts: Vec<&Stmt> = program.script_stmts();
            let mut scope = Scope::new(key, &[], true);
            for s in stmts {
                self.check_stmt(s, &mut scope)?;
            }
            self.store_locals(scope);
        }
        Ok(())
    }

    fn check_params(&self, params: &[Ident]) -> Result<(), ResolveError> {
        for (i, p) in params.iter().enumerate() {
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(err(&p.span, format!("duplicate parameter `{}`", p.name)));
            }
            if self.table.globals.contains_key(&p.name) {
                return Err(err(
                    &p.span,
                    format!("parameter `{}` shadows a global of the same name", p.name),
                ));
            }
            if self.table.functions.contains_key(&p.name) {
                return Err(err(
                    &p.span,
                    format!("parameter `{}` shadows a function of the same name", p.name),
                ));
            }
        }
        Ok(())
    }

    fn check_body(
        &mut self,
        body: &Block,
        key: SegmentKey,
        params: &[Ident],
        is_script: bool,
    ) -> Result<(), ResolveError> {
        let mut scope = Scope::new(key, params, is_script);
        for s in &body.stmts {
            self.check_stmt(s, &mut scope)?;
        }
        self.store_locals(scope);
        Ok(())
    }

    fn store_locals(&mut self, scope: Scope) {
        if let Some(seg) = self.table.segments.iter_mut().find(|s| s.key == scope.key) {
            seg.locals = scope.locals;
        }
    }

    fn check_stmt(&mut self, stmt: &Stmt, scope: &mut Scope) -> Result<(), ResolveError> {
        match &stmt.kind {
            StmtKind::VarDecl { name, value } => {
                self.check_expr(value, scope)?;
                if scope.params.contains(&name.name) {
                    return Err(err(
                        &name.span,
                        format!("`{}` is already a parameter of this segment", name.name),
                    ));
                }
                if self.table.globals.contains_key(&name.name) {
                    return Err(err(
                        &name.span,
                        format!("local `{}` would shadow a global of the same name", name.name),
                    ));
                }
                if self.table.functions.contains_key(&name.name) {
                    return Err(err(
                        &name.span,
                        format!("local `{}` would shadow a function of the same name", name.name),
                    ));
                }
                scope
                    .locals
                    .entry(name.name.clone())
                    .or_insert_with(|| name.span.clone());
            }
            StmtKind::GlobalDecl { name, value } => {
                self.check_expr(value, scope)?;
                if scope.locals.contains_key(&name.name) || scope.params.contains(&name.name) {
                    return Err(err(
                        &name.span,
                        format!(
                            "`{}` is already a local name in this segment and cannot be \
                             declared global",
                            name.name
                        ),
                    ));
                }
                if self.table.functions.contains_key(&name.name) {
                    return Err(err(
                        &name.span,
                        format!("global `{}` collides with a function name", name.name),
                    ));
                }
            }
            StmtKind::Assign { name, value } => {
                self.check_expr(value, scope)?;
                if scope.locals.contains_key(&name.name) || scope.params.contains(&name.name) {
                    // local or parameter write
                } else if self.table.functions.contains_key(&name.name) {
                    return Err(err(
                        &name.span,
                        format!("cannot assign to function `{}`", name.name),
                    ));
                } else if scope.is_script {
                    // implicit global, registered in the collect phase
                    debug_assert!(self.table.globals.contains_key(&name.name));
                } else if self.table.globals.contains_key(&name.name) {
                    return Err(err(
                        &name.span,
                        format!(
                            "assignment to global `{}` requires `global {} = ...;`",
                            name.name, name.name
                        ),
                    ));
                } else {
                    return Err(err(
                        &name.span,
                        format!("assignment to undeclared name `{}`", name.name),
                    ));
                }
            }
            StmtKind::If { cond, then_block, else_block } => {
                self.check_expr(cond, scope)?;
                for s in &then_block.stmts {
                    self.check_stmt(s, scope)?;
                }
                if let Some(e) = else_block {
                    for s in &e.stmts {
                        self.check_stmt(s, scope)?;
                    }
                }
            }
            StmtKind::While { cond, body } => {
                self.check_expr(cond, scope)?;
                for s in &body.stmts {
                    self.check_stmt(s, scope)?;
                }
            }
            StmtKind::Repeat { count, body } => {
                self.check_expr(count, scope)?;
                for s in &body.stmts {
                    self.check_stmt(s, scope)?;
                }
            }
            StmtKind::After { delay, body } => {
                self.check_expr(delay, scope)?;
                // Fresh segment scope: the body cannot see enclosing locals.
                let key = SegmentKey(body.span.start);
                self.check_body(body, key, &[], false)?;
            }
            StmtKind::Print { value } => self.check_expr(value, scope)?,
            StmtKind::Emit { args, .. } => {
                for a in args {
                    self.check_expr(a, scope)?;
                }
            }
            StmtKind::Return { value } => {
                if let Some(v) = value {
                    self.check_expr(v, scope)?;
                }
            }
            StmtKind::Call { name, args } => {
                self.check_callee(name)?;
                for a in args {
                    self.check_expr(a, scope)?;
                }
            }
            StmtKind::HwWrite { value, .. } => self.check_expr(value, scope)?,
        }
        Ok(())
    }

    fn check_callee(&self, name: &Ident) -> Result<(), ResolveError> {
        if self.table.functions.contains_key(&name.name) {
            Ok(())
        } else if self.table.globals.contains_key(&name.name) {
            Err(err(&name.span, format!("`{}` is a global, not a function", name.name)))
        } else {
            Err(err(&name.span, format!("call to undefined function `{}`", name.name)))
        }
    }

    fn check_expr(&self, expr: &Expr, scope: &Scope) -> Result<(), ResolveError> {
        match &expr.kind {
            ExprKind::Name(n) => {
                if scope.locals.contains_key(&n.name)
                    || scope.params.contains(&n.name)
                    || self.table.globals.contains_key(&n.name)
                {
                    Ok(())
                } else if self.table.functions.contains_key(&n.name) {
                    Err(err(&n.span, format!("function `{}` used as a value", n.name)))
                } else {
                    Err(err(&n.span, format!("use of undeclared name `{}`", n.name)))
                }
            }
            ExprKind::Call { name, args } => {
                self.check_callee(name)?;
                for a in args {
                    self.check_expr(a, scope)?;
                }
                Ok(())
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.check_expr(lhs, scope)?;
                self.check_expr(rhs, scope)
            }
            ExprKind::Unary { operand, .. } => self.check_expr(operand, scope),
            _ => Ok(()),
        }
    }

}

struct Scope {
    key: SegmentKey,
    params: Vec<String>,
    locals: BTreeMap<String, SourceSpan>,
    is_script: bool,
}

impl Scope {
    fn new(key: SegmentKey, params: &[Ident], is_script: bool) -> Self {
        Scope {
            key,
            params: params.iter().map(|p| p.name.clone()).collect(),
            locals: BTreeMap::new(),
            is_script,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse;

    fn resolve(src: &str) -> Result<SymbolTable, ResolveError> {
        resolve_names(&parse("t.flare", src).unwrap())
    }

    #[test]
    fn trivial_program_has_no_user_names() {
        let table = resolve("print(1);").unwrap();
        assert_eq!(table.user_name_count(), 0);
        assert_eq!(table.segments.len(), 1);
        assert_eq!(table.segments[0].name, "script");
    }

    #[test]
    fn undeclared_assignment_in_function_is_an_error() {
        let e = resolve("func f() { x = 1; }").unwrap_err();
        assert!(e.message.contains("`x`"), "{}", e.message);
    }

    #[test]
    fn top_level_bare_assignment_declares_global() {
        let table = resolve("x = 1; func f() { print(x); }").unwrap();
        assert!(table.globals.contains_key("x"));
    }

    #[test]
    fn duplicate_function_names_rejected() {
        assert!(resolve("func f() {} func f() {}").is_err());
    }

    #[test]
    fn local_shadowing_a_global_rejected() {
        assert!(resolve("global g = 1; func f() { var g = 2; }").is_err());
    }

    #[test]
    fn global_write_from_segment_requires_keyword() {
        assert!(resolve("global g = 1; func f() { g = 2; }").is_err());
        assert!(resolve("global g = 1; func f() { global g = 2; }").is_ok());
    }

    #[test]
    fn after_body_cannot_see_enclosing_locals() {
        let e = resolve("func f() { var x = 1; after 10 { print(x); } }").unwrap_err();
        assert!(e.message.contains("undeclared name `x`"));
    }

    #[test]
    fn use_before_declaration_rejected() {
        assert!(resolve("func f() { print(y); var y = 1; }").is_err());
        assert!(resolve("func f() { var y = y + 1; }").is_err());
    }

    #[test]
    fn devices_and_events_collected() {
        let table =
            resolve("when go(n) { hw.write(\"led\", n); } emit go(hw.read(\"light\"));").unwrap();
        assert!(table.devices.contains_key("led"));
        assert!(table.devices.contains_key("light"));
        let info = &table.events["go"];
        assert_eq!(info.handlers.len(), 1);
        assert_eq!(info.emit_sites.len(), 1);
    }

    #[test]
    fn after_bodies_become_segments() {
        let table = resolve("func f() { after 5 { print(1); } }").unwrap();
        let kinds: Vec<_> = table.segments.iter().map(|s| &s.kind).collect();
        assert!(kinds.iter().any(|k| matches!(k, SegmentKind::AfterBody)));
        assert_eq!(table.segments.len(), 2);
    }

    #[test]
    fn classify_covers_all_name_kinds() {
        let table = resolve(
            "global g = 1;\nfunc f(p) { var l = p + g; print(l); }\nf(2);",
        )
        .unwrap();
        let fseg = table
            .segments
            .iter()
            .find(|s| matches!(s.kind, SegmentKind::Function { .. }))
            .unwrap()
            .key;
        assert_eq!(table.classify(fseg, "l"), Some(NameClass::Local));
        assert_eq!(table.classify(fseg, "p"), Some(NameClass::Parameter));
        assert_eq!(table.classify(fseg, "g"), Some(NameClass::Global));
        assert_eq!(table.classify(fseg, "f"), Some(NameClass::Function));
        assert_eq!(table.classify(fseg, "zzz"), None);
    }
}
