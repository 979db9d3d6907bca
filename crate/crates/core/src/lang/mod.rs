//! The FlareLang front end: tokens, AST, parser, canonical printer, and
//! name resolution.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod symbols;
pub mod token;
pub mod unparse;

pub use ast::{Block, Expr, ExprKind, Program, Stmt, StmtKind, TopItem};
pub use lexer::{tokenize, LexError};
pub use parser::{parse, FrontendError, ParseError};
pub use symbols::{resolve_names, NameClass, ResolveError, SegmentKey, SegmentKind, SymbolTable};
pub use unparse::unparse;
