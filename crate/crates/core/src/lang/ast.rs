//! FlareLang abstract syntax tree.
//!
//! Spans are kept on every node; structural equality that ignores spans is
//! available through [`crate::testgen::zero_spans`].

use crate::span::{Pos, SourceSpan};

/// An identifier occurrence (variable, function, or event name).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: SourceSpan,
}

/// A hardware device name, written as a string literal in source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceName {
    pub name: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub items: Vec<TopItem>,
    pub span: SourceSpan,
}

impl Program {
    /// Top-level statements in source order (function and handler
    /// definitions excluded).
    pub fn script_stmts(&self) -> Vec<&Stmt> {
        self.items
            .iter()
            .filter_map(|item| match item {
                TopItem::Stmt(s) => Some(s),
                _ => None,
            })
            .collect()
    }

    pub fn functions(&self) -> impl Iterator<Item = &FuncDef> {
        self.items.iter().filter_map(|item| match item {
            TopItem::Func(f) => Some(f),
            _ => None,
        })
    }

    pub fn handlers(&self) -> impl Iterator<Item = &HandlerDef> {
        self.items.iter().filter_map(|item| match item {
            TopItem::Handler(h) => Some(h),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopItem {
    Func(FuncDef),
    Handler(HandlerDef),
    Stmt(Stmt),
}

impl TopItem {
    pub fn span(&self) -> &SourceSpan {
        match self {
            TopItem::Func(f) => &f.span,
            TopItem::Handler(h) => &h.span,
            TopItem::Stmt(s) => &s.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncDef {
    pub name: Ident,
    pub params: Vec<Ident>,
    pub body: Block,
    pub span: SourceSpan,
}

/// `when <event> [(params)] { ... }` — an event handler registration.
#[derive(Debug, Clone, PartialEq)]
pub struct HandlerDef {
    pub event: Ident,
    pub params: Vec<Ident>,
    pub body: Block,
    pub span: SourceSpan,
}

/// A braced statement list. The span covers the braces.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// `var x = e;` — declares a segment-local variable.
    VarDecl { name: Ident, value: Expr },
    /// `global g = e;` — declares or assigns a program global.
    GlobalDecl { name: Ident, value: Expr },
    /// `x = e;` — assigns an existing local or parameter (or, at top
    /// level, a global).
    Assign { name: Ident, value: Expr },
    If { cond: Expr, then_block: Block, else_block: Option<Block> },
    While { cond: Expr, body: Block },
    Repeat { count: Expr, body: Block },
    /// `after <ms> { ... }` — schedules the body on the virtual clock.
    After { delay: Expr, body: Block },
    Print { value: Expr },
    Emit { event: Ident, args: Vec<Expr> },
    Return { value: Option<Expr> },
    /// `f(args);` — a call whose value is discarded.
    Call { name: Ident, args: Vec<Expr> },
    /// `hw.write("device", e);`
    HwWrite { device: DeviceName, value: Expr },
}

impl Stmt {
    /// Direct child blocks, in source order.
    pub fn blocks(&self) -> Vec<&Block> {
        match &self.kind {
            StmtKind::If { then_block, else_block, .. } => {
                let mut out = vec![then_block];
                if let Some(e) = else_block {
                    out.push(e);
                }
                out
            }
            StmtKind::While { body, .. }
            | StmtKind::Repeat { body, .. }
            | StmtKind::After { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    /// Expressions evaluated directly by this statement (not those in
    /// nested blocks).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::VarDecl { value, .. }
            | StmtKind::GlobalDecl { value, .. }
            | StmtKind::Assign { value, .. }
            | StmtKind::Print { value }
            | StmtKind::HwWrite { value, .. } => vec![value],
            StmtKind::If { cond, .. } => vec![cond],
            StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Repeat { count, .. } => vec![count],
            StmtKind::After { delay, .. } => vec![delay],
            StmtKind::Emit { args, .. } | StmtKind::Call { args, .. } => args.iter().collect(),
            StmtKind::Return { value } => value.iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Str(String),
    Bool(bool),
    Name(Ident),
    /// `hw.read("device")`
    HwRead { device: DeviceName },
    /// `f(args)` in expression position; the value is consumed.
    Call { name: Ident, args: Vec<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr> },
}

impl Expr {
    /// Walk this expression tree, visiting every node.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Expr)) {
        visit(self);
        match &self.kind {
            ExprKind::Call { args, .. } => {
                for a in args {
                    a.walk(visit);
                }
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(visit);
                rhs.walk(visit);
            }
            ExprKind::Unary { operand, .. } => operand.walk(visit),
            _ => {}
        }
    }
}

/// Hull of a statement list, or an empty span at `fallback`.
pub fn stmts_hull(stmts: &[Stmt], file: &str, fallback: Pos) -> SourceSpan {
    stmts
        .iter()
        .map(|s| s.span.clone())
        .reduce(|a, b| a.hull(&b))
        .unwrap_or_else(|| SourceSpan::point(file, fallback))
}
