//! Program-wide site index: who calls whom, who emits what, and who
//! touches which shared subject. Built once per analysis and consumed by
//! binding extraction and composition.

use crate::elements::element_id;
use crate::lang::ast::{Expr, ExprKind, Program, Stmt, StmtKind};
use crate::lang::symbols::{NameClass, SegmentKey, SymbolTable};
use crate::span::SourceSpan;

/// One call occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub callee: String,
    /// Id of the innermost statement element containing the call.
    pub stmt_element: String,
    /// Segment the call occurs in.
    pub segment: SegmentKey,
    pub has_args: bool,
    /// True for calls in expression position, whose value is consumed.
    pub value_used: bool,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitSite {
    pub event: String,
    pub stmt_element: String,
    pub segment: SegmentKey,
    pub has_args: bool,
    pub arg_count: usize,
    pub span: SourceSpan,
}

/// One read or write of a global or hardware subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessSite {
    pub subject: SharedSubject,
    pub stmt_element: String,
    pub segment: SegmentKey,
    pub write: bool,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SharedSubject {
    Global(String),
    Hardware(String),
}

#[derive(Debug, Clone, Default)]
pub struct Linkage {
    pub calls: Vec<CallSite>,
    pub emits: Vec<EmitSite>,
    pub accesses: Vec<AccessSite>,
}

impl Linkage {
    pub fn build(program: &Program, symbols: &SymbolTable) -> Linkage {
        let mut w = Walker {
            linkage: Linkage::default(),
            file: program.span.file.clone(),
            symbols,
        };
        for info in &symbols.segments {
            for stmt in crate::elements::segment_stmts(program, info) {
                w.stmt(info.key, stmt);
            }
        }
        w.linkage
    }

    pub fn calls_of<'l>(&'l self, callee: &'l str) -> impl Iterator<Item = &'l CallSite> {
        self.calls.iter().filter(move |c| c.callee == callee)
    }

    pub fn emits_of<'l>(&'l self, event: &'l str) -> impl Iterator<Item = &'l EmitSite> {
        self.emits.iter().filter(move |e| e.event == event)
    }

    pub fn accesses_of<'l>(
        &'l self,
        subject: &'l SharedSubject,
    ) -> impl Iterator<Item = &'l AccessSite> {
        self.accesses.iter().filter(move |a| &a.subject == subject)
    }
}

struct Walker<'s> {
    linkage: Linkage,
    file: String,
    symbols: &'s SymbolTable,
}

impl<'s> Walker<'s> {
    fn stmt(&mut self, segment: SegmentKey, stmt: &Stmt) {
        let stmt_element = element_id(0, &self.file, stmt.span.start);
        match &stmt.kind {
            StmtKind::Call { name, args } => {
                self.linkage.calls.push(CallSite {
                    callee: name.name.clone(),
                    stmt_element: stmt_element.clone(),
                    segment,
                    has_args: !args.is_empty(),
                    value_used: false,
                    span: stmt.span.clone(),
                });
            }
            StmtKind::Emit { event, args } => {
                self.linkage.emits.push(EmitSite {
                    event: event.name.clone(),
                    stmt_element: stmt_element.clone(),
                    segment,
                    has_args: !args.is_empty(),
                    arg_count: args.len(),
                    span: stmt.span.clone(),
                });
            }
            StmtKind::GlobalDecl { name, .. } => {
                self.linkage.accesses.push(AccessSite {
                    subject: SharedSubject::Global(name.name.clone()),
                    stmt_element: stmt_element.clone(),
                    segment,
                    write: true,
                    span: name.span.clone(),
                });
            }
            StmtKind::Assign { name, .. } => {
                if self.symbols.classify(segment, &name.name) == Some(NameClass::Global) {
                    self.linkage.accesses.push(AccessSite {
                        subject: SharedSubject::Global(name.name.clone()),
                        stmt_element: stmt_element.clone(),
                        segment,
                        write: true,
                        span: name.span.clone(),
                    });
                }
            }
            StmtKind::HwWrite { device, .. } => {
                self.linkage.accesses.push(AccessSite {
                    subject: SharedSubject::Hardware(device.name.clone()),
                    stmt_element: stmt_element.clone(),
                    segment,
                    write: true,
                    span: device.span.clone(),
                });
            }
            _ => {}
        }
        for e in stmt.exprs() {
            self.expr(segment, &stmt_element, e);
        }
        // Nested blocks stay within this segment except after bodies,
        // which are walked as their own segments.
        if !matches!(stmt.kind, StmtKind::After { .. }) {
            for b in stmt.blocks() {
                for s in &b.stmts {
                    self.stmt(segment, s);
                }
            }
        }
    }

    fn expr(&mut self, segment: SegmentKey, stmt_element: &str, expr: &Expr) {
        match &expr.kind {
            ExprKind::Name(n) => {
                if self.symbols.classify(segment, &n.name) == Some(NameClass::Global) {
                    self.linkage.accesses.push(AccessSite {
                        subject: SharedSubject::Global(n.name.clone()),
                        stmt_element: stmt_element.to_string(),
                        segment,
                        write: false,
                        span: n.span.clone(),
                    });
                }
            }
            ExprKind::Call { name, args } => {
                for a in args {
                    self.expr(segment, stmt_element, a);
                }
                self.linkage.calls.push(CallSite {
                    callee: name.name.clone(),
                    stmt_element: stmt_element.to_string(),
                    segment,
                    has_args: !args.is_empty(),
                    value_used: true,
                    span: expr.span.clone(),
                });
            }
            ExprKind::HwRead { device } => {
                self.linkage.accesses.push(AccessSite {
                    subject: SharedSubject::Hardware(device.name.clone()),
                    stmt_element: stmt_element.to_string(),
                    segment,
                    write: false,
                    span: expr.span.clone(),
                });
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(segment, stmt_element, lhs);
                self.expr(segment, stmt_element, rhs);
            }
            ExprKind::Unary { operand, .. } => self.expr(segment, stmt_element, operand),
            ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, resolve_names};

    #[test]
    fn sites_are_indexed_with_owners() {
        let src = "global g = 1;\nfunc f(x) { return x + g; }\nwhen go { var v = f(2); emit tick(v); }\n";
        let p = parse("t.flare", src).unwrap();
        let s = resolve_names(&p).unwrap();
        let l = Linkage::build(&p, &s);
        assert_eq!(l.calls.len(), 1);
        let call = &l.calls[0];
        assert_eq!(call.callee, "f");
        assert!(call.value_used && call.has_args);
        assert_eq!(l.emits.len(), 1);
        let g = SharedSubject::Global("g".to_string());
        let accesses: Vec<_> = l.accesses_of(&g).collect();
        assert_eq!(accesses.len(), 2);
        assert!(accesses[0].write && !accesses[1].write);
    }
}
