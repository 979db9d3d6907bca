//! Token kinds for the FlareLang lexer.

use crate::span::SourceSpan;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    // Literals and names
    Int(i64),
    Str(String),
    Ident(String),
    // Keywords
    KwVar,
    KwGlobal,
    KwIf,
    KwElse,
    KwWhile,
    KwRepeat,
    KwAfter,
    KwFunc,
    KwWhen,
    KwEmit,
    KwPrint,
    KwReturn,
    KwTrue,
    KwFalse,
    KwAnd,
    KwOr,
    KwNot,
    KwHw,
    // Punctuation and operators
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
}

impl TokenKind {
    pub fn keyword(word: &str) -> Option<TokenKind> {
        use TokenKind::*;
        Some(match word {
            "var" => KwVar,
            "global" => KwGlobal,
            "if" => KwIf,
            "else" => KwElse,
            "while" => KwWhile,
            "repeat" => KwRepeat,
            "after" => KwAfter,
            "func" => KwFunc,
            "when" => KwWhen,
            "emit" => KwEmit,
            "print" => KwPrint,
            "return" => KwReturn,
            "true" => KwTrue,
            "false" => KwFalse,
            "and" => KwAnd,
            "or" => KwOr,
            "not" => KwNot,
            "hw" => KwHw,
            _ => return None,
        })
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TokenKind::*;
        match self {
            Int(v) => write!(f, "integer `{v}`"),
            Str(_) => write!(f, "string literal"),
            Ident(name) => write!(f, "identifier `{name}`"),
            KwVar => write!(f, "`var`"),
            KwGlobal => write!(f, "`global`"),
            KwIf => write!(f, "`if`"),
            KwElse => write!(f, "`else`"),
            KwWhile => write!(f, "`while`"),
            KwRepeat => write!(f, "`repeat`"),
            KwAfter => write!(f, "`after`"),
            KwFunc => write!(f, "`func`"),
            KwWhen => write!(f, "`when`"),
            KwEmit => write!(f, "`emit`"),
            KwPrint => write!(f, "`print`"),
            KwReturn => write!(f, "`return`"),
            KwTrue => write!(f, "`true`"),
            KwFalse => write!(f, "`false`"),
            KwAnd => write!(f, "`and`"),
            KwOr => write!(f, "`or`"),
            KwNot => write!(f, "`not`"),
            KwHw => write!(f, "`hw`"),
            LParen => write!(f, "`(`"),
            RParen => write!(f, "`)`"),
            LBrace => write!(f, "`{{`"),
            RBrace => write!(f, "`}}`"),
            Comma => write!(f, "`,`"),
            Semi => write!(f, "`;`"),
            Dot => write!(f, "`.`"),
            Assign => write!(f, "`=`"),
            Plus => write!(f, "`+`"),
            Minus => write!(f, "`-`"),
            Star => write!(f, "`*`"),
            Slash => write!(f, "`/`"),
            Lt => write!(f, "`<`"),
            Le => write!(f, "`<=`"),
            Gt => write!(f, "`>`"),
            Ge => write!(f, "`>=`"),
            EqEq => write!(f, "`==`"),
            Ne => write!(f, "`!=`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}
