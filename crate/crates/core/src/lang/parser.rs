//! Recursive-descent parser for FlareLang.
//!
//! Reports the first syntax violation with the set of expected tokens; no
//! error recovery is attempted.

use crate::lang::ast::*;
use crate::lang::lexer::{tokenize, LexError};
use crate::lang::token::{Token, TokenKind};
use crate::span::{Pos, SourceSpan};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Parse `source` into a [`Program`].
pub fn parse(file: &str, source: &str) -> Result<Program, FrontendError> {
    let tokens = tokenize(file, source)?;
    let mut parser = Parser { file: file.to_string(), tokens, pos: 0 };
    Ok(parser.program()?)
}

struct Parser {
    file: String,
    tokens: Vec<Token>,
    pos: usize,
}

/// What `return` is allowed to do in the current block.
#[derive(Clone, Copy, PartialEq)]
enum ReturnCtx {
    /// Inside a function body (and not inside a nested `after` body).
    Function,
    /// Top-level script, handler bodies, and every `after` body.
    Forbidden,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek2(&self) -> Option<&Token> {
        self.tokens.get(self.pos + 1)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eof_pos(&self) -> Pos {
        self.tokens
            .last()
            .map(|t| t.span.end)
            .unwrap_or_else(|| Pos::new(1, 1))
    }

    fn here(&self) -> SourceSpan {
        match self.peek() {
            Some(t) => t.span.clone(),
            None => SourceSpan::point(&self.file, self.eof_pos()),
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => t.kind.to_string(),
            None => "end of input".to_string(),
        }
    }

    fn err(&self, expected: &[&str]) -> ParseError {
        ParseError {
            span: self.here(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.found(),
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => Ok(self.bump().unwrap()),
            _ => Err(self.err(&[what])),
        }
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek().map(|t| &t.kind == kind).unwrap_or(false)
    }

    fn ident(&mut self, what: &str) -> Result<Ident, ParseError> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(_), .. }) => {
                let t = self.bump().unwrap();
                match t.kind {
                    TokenKind::Ident(name) => Ok(Ident { name, span: t.span }),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.err(&[what])),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut items = Vec::new();
        while self.peek().is_some() {
            items.push(self.top_item()?);
        }
        let span = items
            .iter()
            .map(|i| i.span().clone())
            .reduce(|a, b| a.hull(&b))
            .unwrap_or_else(|| SourceSpan::point(&self.file, Pos::new(1, 1)));
        Ok(Program { items, span })
    }

    fn top_item(&mut self) -> Result<TopItem, ParseError> {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::KwFunc) => self.func_def().map(TopItem::Func),
            Some(TokenKind::KwWhen) => self.handler_def().map(TopItem::Handler),
            _ => self.stmt(ReturnCtx::Forbidden).map(TopItem::Stmt),
        }
    }

    fn func_def(&mut self) -> Result<FuncDef, ParseError> {
        let kw = self.expect(TokenKind::KwFunc, "`func`")?;
        let name = self.ident("function name")?;
        self.expect(TokenKind::LParen, "`(`")?;
        let params = self.param_list()?;
        self.expect(TokenKind::RParen, "`)`")?;
        let body = self.block(ReturnCtx::Function)?;
        let span = kw.span.hull(&body.span);
        Ok(FuncDef { name, params, body, span })
    }

    fn handler_def(&mut self) -> Result<HandlerDef, ParseError> {
        let kw = self.expect(TokenKind::KwWhen, "`when`")?;
        let event = self.ident("event name")?;
        let params = if self.at(&TokenKind::LParen) {
            self.bump();
            let params = self.param_list()?;
            self.expect(TokenKind::RParen, "`)`")?;
            params
        } else {
            Vec::new()
        };
        let body = self.block(ReturnCtx::Forbidden)?;
        let span = kw.span.hull(&body.span);
        Ok(HandlerDef { event, params, body, span })
    }

    fn param_list(&mut self) -> Result<Vec<Ident>, ParseError> {
        let mut params = Vec::new();
        if self.at(&TokenKind::RParen) {
            return Ok(params);
        }
        loop {
            match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Ident(_)) => params.push(self.ident("parameter name")?),
                _ => return Err(self.err(&["parameter name", "`)`"])),
            }
            if self.at(&TokenKind::Comma) {
                self.bump();
            } else {
                return Ok(params);
            }
        }
    }

    fn block(&mut self, ctx: ReturnCtx) -> Result<Block, ParseError> {
        let open = self.expect(TokenKind::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        loop {
            if self.at(&TokenKind::RBrace) {
                let close = self.bump().unwrap();
                let span = open.span.hull(&close.span);
                return Ok(Block { stmts, span });
            }
            if self.peek().is_none() {
                return Err(self.err(&["statement", "`}`"]));
            }
            stmts.push(self.stmt(ctx)?);
        }
    }

    fn stmt(&mut self, ctx: ReturnCtx) -> Result<Stmt, ParseError> {
        use TokenKind::*;
        match self.peek().map(|t| &t.kind) {
            Some(KwVar) => self.var_decl(),
            Some(KwGlobal) => self.global_decl(),
            Some(KwIf) => self.if_stmt(ctx),
            Some(KwWhile) => self.while_stmt(ctx),
            Some(KwRepeat) => self.repeat_stmt(ctx),
            Some(KwAfter) => self.after_stmt(),
            Some(KwPrint) => self.print_stmt(),
            Some(KwEmit) => self.emit_stmt(),
            Some(KwReturn) => self.return_stmt(ctx),
            Some(KwHw) => self.hw_write_stmt(),
            Some(Ident(_)) => self.assign_or_call(),
            _ => Err(self.err(&["statement"])),
        }
    }

    fn semi(&mut self) -> Result<Token, ParseError> {
        self.expect(TokenKind::Semi, "`;`")
    }

    fn var_decl(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump().unwrap();
        let name = self.ident("variable name")?;
        self.expect(TokenKind::Assign, "`=`")?;
        let value = self.expr()?;
        let end = self.semi()?;
        let span = kw.span.hull(&end.span);
        Ok(Stmt { kind: StmtKind::VarDecl { name, value }, span })
    }

    fn global_decl(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump().unwrap();
        let name = self.ident("global name")?;
        self.expect(TokenKind::Assign, "`=`")?;
        let value = self.expr()?;
        let end = self.semi()?;
        let span = kw.span.hull(&end.span);
        Ok(Stmt { kind: StmtKind::GlobalDecl { name, value }, span })
    }

    fn if_stmt(&mut self, ctx: ReturnCtx) -> Result<Stmt, ParseError> {
        let kw = self.bump().unwrap();
        let cond = self.expr()?;
        let then_block = self.block(ctx)?;
        let mut span = kw.span.hull(&then_block.span);
        let else_block = if self.at(&TokenKind::KwElse) {
            self.bump();
            let b = self.block(ctx)?;
            span = span.hull(&b.span);
            Some(b)
        } else {
            None
        };
        Ok(Stmt { kind: StmtKind::If { cond, then_block, else_block }, span })
    }

    fn while_stmt(&mut self, ctx: ReturnCtx) -> Result<Stmt, ParseError> {
        let kw = self.bump().unwrap();
        let cond = self.expr()?;
        let body = self.block(ctx)?;
        let span = kw.span.hull(&body.span);
        Ok(Stmt { kind: StmtKind::While { cond, body }, span })
    }

    fn repeat_stmt(&mut self, ctx: ReturnCtx) -> Result<Stmt, ParseError> {
        let kw = self.bump().unwrap();
        let count = self.expr()?;
        let body = self.block(ctx)?;
        let span = kw.span.hull(&body.span);
        Ok(Stmt { kind: StmtKind::Repeat { count, body }, span })
    }

    fn after_stmt(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump().unwrap();
        let delay = self.expr()?;
        // An `after` body runs later as its own segment; `return` cannot
        // cross into it.
        let body = self.block(ReturnCtx::Forbidden)?;
        let span = kw.span.hull(&body.span);
        Ok(Stmt { kind: StmtKind::After { delay, body }, span })
    }

    fn print_stmt(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump().unwrap();
        self.expect(TokenKind::LParen, "`(`")?;
        let value = self.expr()?;
        self.expect(TokenKind::RParen, "`)`")?;
        let end = self.semi()?;
        let span = kw.span.hull(&end.span);
        Ok(Stmt { kind: StmtKind::Print { value }, span })
    }

    fn emit_stmt(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump().unwrap();
        let event = self.ident("event name")?;
        let args = if self.at(&TokenKind::LParen) {
            self.bump();
            let args = self.arg_list()?;
            self.expect(TokenKind::RParen, "`)`")?;
            args
        } else {
            Vec::new()
        };
        let end = self.semi()?;
        let span = kw.span.hull(&end.span);
        Ok(Stmt { kind: StmtKind::Emit { event, args }, span })
    }

    fn return_stmt(&mut self, ctx: ReturnCtx) -> Result<Stmt, ParseError> {
        if ctx != ReturnCtx::Function {
            return Err(ParseError {
                span: self.here(),
                expected: vec!["statement (`return` is only allowed inside function bodies)"
                    .to_string()],
                found: "`return`".to_string(),
            });
        }
        let kw = self.bump().unwrap();
        let value = if self.at(&TokenKind::Semi) { None } else { Some(self.expr()?) };
        let end = self.semi()?;
        let span = kw.span.hull(&end.span);
        Ok(Stmt { kind: StmtKind::Return { value }, span })
    }

    fn hw_write_stmt(&mut self) -> Result<Stmt, ParseError> {
        let kw = self.bump().unwrap();
        self.expect(TokenKind::Dot, "`.`")?;
        let op = self.ident("`write`")?;
        if op.name != "write" {
            return Err(ParseError {
                span: op.span,
                expected: vec!["`write`".to_string()],
                found: format!("identifier `{}`", op.name),
            });
        }
        self.expect(TokenKind::LParen, "`(`")?;
        let device = self.device_name()?;
        self.expect(TokenKind::Comma, "`,`")?;
        let value = self.expr()?;
        self.expect(TokenKind::RParen, "`)`")?;
        let end = self.semi()?;
        let span = kw.span.hull(&end.span);
        Ok(Stmt { kind: StmtKind::HwWrite { device, value }, span })
    }

    fn device_name(&mut self) -> Result<DeviceName, ParseError> {
        match self.peek() {
            Some(Token { kind: TokenKind::Str(_), .. }) => {
                let t = self.bump().unwrap();
                match t.kind {
                    TokenKind::Str(name) => Ok(DeviceName { name, span: t.span }),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.err(&["device name string"])),
        }
    }

    fn assign_or_call(&mut self) -> Result<Stmt, ParseError> {
        match self.peek2().map(|t| &t.kind) {
            Some(TokenKind::Assign) => {
                let name = self.ident("name")?;
                self.bump(); // `=`
                let value = self.expr()?;
                let end = self.semi()?;
                let span = name.span.hull(&end.span);
                Ok(Stmt { kind: StmtKind::Assign { name, value }, span })
            }
            Some(TokenKind::LParen) => {
                let name = self.ident("name")?;
                self.bump(); // `(`
                let args = self.arg_list()?;
                self.expect(TokenKind::RParen, "`)`")?;
                let end = self.semi()?;
                let span = name.span.hull(&end.span);
                Ok(Stmt { kind: StmtKind::Call { name, args }, span })
            }
            _ => {
                self.bump();
                Err(self.err(&["`=`", "`(`"]))
            }
        }
    }

    fn arg_list(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        if self.at(&TokenKind::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.at(&TokenKind::Comma) {
                self.bump();
            } else {
                return Ok(args);
            }
        }
    }

    // Expression parsing, lowest precedence first.

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn binary_chain(
        &mut self,
        next: impl Fn(&mut Self) -> Result<Expr, ParseError>,
        ops: &[(TokenKind, BinaryOp)],
    ) -> Result<Expr, ParseError> {
        let mut lhs = next(self)?;
        'outer: loop {
            for (kind, op) in ops {
                if self.at(kind) {
                    self.bump();
                    let rhs = next(self)?;
                    let span = lhs.span.hull(&rhs.span);
                    lhs = Expr {
                        kind: ExprKind::Binary { op: *op, lhs: Box::new(lhs), rhs: Box::new(rhs) },
                        span,
                    };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        self.binary_chain(Self::and_expr, &[(TokenKind::KwOr, BinaryOp::Or)])
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        self.binary_chain(Self::equality, &[(TokenKind::KwAnd, BinaryOp::And)])
    }

    fn equality(&mut self) -> Result<Expr, ParseError> {
        self.binary_chain(
            Self::comparison,
            &[(TokenKind::EqEq, BinaryOp::Eq), (TokenKind::Ne, BinaryOp::Ne)],
        )
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        self.binary_chain(
            Self::additive,
            &[
                (TokenKind::Le, BinaryOp::Le),
                (TokenKind::Lt, BinaryOp::Lt),
                (TokenKind::Ge, BinaryOp::Ge),
                (TokenKind::Gt, BinaryOp::Gt),
            ],
        )
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        self.binary_chain(
            Self::multiplicative,
            &[(TokenKind::Plus, BinaryOp::Add), (TokenKind::Minus, BinaryOp::Sub)],
        )
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        self.binary_chain(
            Self::unary,
            &[(TokenKind::Star, BinaryOp::Mul), (TokenKind::Slash, BinaryOp::Div)],
        )
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let op = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Minus) => Some(UnaryOp::Neg),
            Some(TokenKind::KwNot) => Some(UnaryOp::Not),
            _ => None,
        };
        if let Some(op) = op {
            let tok = self.bump().unwrap();
            let operand = self.unary()?;
            let span = tok.span.hull(&operand.span);
            return Ok(Expr { kind: ExprKind::Unary { op, operand: Box::new(operand) }, span });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        use TokenKind::*;
        match self.peek().map(|t| &t.kind) {
            Some(Int(_)) => {
                let t = self.bump().unwrap();
                match t.kind {
                    Int(v) => Ok(Expr { kind: ExprKind::Int(v), span: t.span }),
                    _ => unreachable!(),
                }
            }
            Some(Str(_)) => {
                let t = self.bump().unwrap();
                match t.kind {
                    Str(s) => Ok(Expr { kind: ExprKind::Str(s), span: t.span }),
                    _ => unreachable!(),
                }
            }
            Some(KwTrue) => {
                let t = self.bump().unwrap();
                Ok(Expr { kind: ExprKind::Bool(true), span: t.span })
            }
            Some(KwFalse) => {
                let t = self.bump().unwrap();
                Ok(Expr { kind: ExprKind::Bool(false), span: t.span })
            }
            Some(KwHw) => {
                let kw = self.bump().unwrap();
                self.expect(Dot, "`.`")?;
                let op = self.ident("`read`")?;
                if op.name != "read" {
                    return Err(ParseError {
                        span: op.span,
                        expected: vec!["`read`".to_string()],
                        found: format!("identifier `{}`", op.name),
                    });
                }
                self.expect(LParen, "`(`")?;
                let device = self.device_name()?;
                let close = self.expect(RParen, "`)`")?;
                let span = kw.span.hull(&close.span);
                Ok(Expr { kind: ExprKind::HwRead { device }, span })
            }
            Some(Ident(_)) => {
                let name = self.ident("name")?;
                if self.at(&LParen) {
                    self.bump();
                    let args = self.arg_list()?;
                    let close = self.expect(RParen, "`)`")?;
                    let span = name.span.hull(&close.span);
                    Ok(Expr { kind: ExprKind::Call { name, args }, span })
                } else {
                    let span = name.span.clone();
                    Ok(Expr { kind: ExprKind::Name(name), span })
                }
            }
            Some(LParen) => {
                self.bump();
                let inner = self.expr()?;
                self.expect(RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.err(&["expression"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_program_has_zero_items() {
        let p = parse("t.flare", "").unwrap();
        assert!(p.items.is_empty());
    }

    #[test]
    fn timer_then_print_structure() {
        let src = "after 1000 { print(\"morning\"); } print(\"Good\");";
        let p = parse("t.flare", src).unwrap();
        assert_eq!(p.items.len(), 2);
        match &p.items[0] {
            TopItem::Stmt(Stmt { kind: StmtKind::After { body, .. }, .. }) => {
                assert_eq!(body.stmts.len(), 1);
                assert!(matches!(body.stmts[0].kind, StmtKind::Print { .. }));
            }
            other => panic!("expected after statement, got {other:?}"),
        }
        match &p.items[1] {
            TopItem::Stmt(Stmt { kind: StmtKind::Print { .. }, .. }) => {}
            other => panic!("expected print statement, got {other:?}"),
        }
    }

    #[test]
    fn malformed_params_report_expected_set() {
        let err = match parse("t.flare", "func f( {") {
            Err(FrontendError::Parse(e)) => e,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert!(err.expected.iter().any(|e| e.contains("parameter name")));
        assert!(err.expected.iter().any(|e| e.contains(")")));
    }

    #[test]
    fn return_outside_function_rejected() {
        assert!(parse("t.flare", "return 1;").is_err());
        assert!(parse("t.flare", "when go { return; }").is_err());
        assert!(parse("t.flare", "func f() { after 1 { return; } }").is_err());
        assert!(parse("t.flare", "func f() { return 1; }").is_ok());
    }

    #[test]
    fn precedence_shapes_tree() {
        let p = parse("t.flare", "var x = 1 + 2 * 3 < 4 and not true;").unwrap();
        let TopItem::Stmt(stmt) = &p.items[0] else { panic!() };
        let StmtKind::VarDecl { value, .. } = &stmt.kind else { panic!() };
        // Top node is `and`.
        let ExprKind::Binary { op: BinaryOp::And, lhs, rhs } = &value.kind else {
            panic!("expected and at root, got {value:?}")
        };
        assert!(matches!(lhs.kind, ExprKind::Binary { op: BinaryOp::Lt, .. }));
        assert!(matches!(rhs.kind, ExprKind::Unary { op: UnaryOp::Not, .. }));
    }

    #[test]
    fn statement_spans_nest_in_block_spans() {
        let src = "func f() {\n    var a = 1;\n    if a < 2 {\n        a = 3;\n    }\n}\n";
        let p = parse("t.flare", src).unwrap();
        let TopItem::Func(f) = &p.items[0] else { panic!() };
        for s in &f.body.stmts {
            assert!(f.body.span.contains_span(&s.span));
        }
        let StmtKind::If { then_block, .. } = &f.body.stmts[1].kind else { panic!() };
        assert!(f.body.stmts[1].span.contains_span(&then_block.span));
    }
}
