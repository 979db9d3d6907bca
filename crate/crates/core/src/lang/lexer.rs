//! FlareLang tokenizer.
//!
//! Tokens cover the non-whitespace, non-comment source exactly; `#` begins
//! a comment that runs to the end of the line.

use crate::lang::token::{Token, TokenKind};
use crate::span::{Pos, SourceSpan};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct LexError {
    pub span: SourceSpan,
    pub message: String,
}

struct Lexer<'s> {
    file: String,
    chars: Vec<char>,
    idx: usize,
    line: u32,
    col: u32,
    source_len: usize,
    _marker: std::marker::PhantomData<&'s ()>,
}

/// Tokenize `source`, attributing spans to `file`.
pub fn tokenize(file: &str, source: &str) -> Result<Vec<Token>, LexError> {
    let mut lexer = Lexer {
        file: file.to_string(),
        chars: source.chars().collect(),
        idx: 0,
        line: 1,
        col: 1,
        source_len: source.len(),
        _marker: std::marker::PhantomData,
    };
    lexer.run()
}

impl<'s> Lexer<'s> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.idx + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn span_from(&self, start: Pos) -> SourceSpan {
        SourceSpan::new(self.file.clone(), start, self.pos())
    }

    fn error(&self, start: Pos, message: impl Into<String>) -> LexError {
        LexError { span: self.span_from(start), message: message.into() }
    }

    fn run(&mut self) -> Result<Vec<Token>, LexError> {
        let _ = self.source_len;
        let mut tokens = Vec::new();
        while let Some(c) = self.peek() {
            if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            let start = self.pos();
            if c.is_ascii_digit() {
                tokens.push(self.number(start)?);
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                tokens.push(self.word(start));
                continue;
            }
            if c == '"' {
                tokens.push(self.string(start)?);
                continue;
            }
            let kind = self.punct(start)?;
            tokens.push(Token { kind, span: self.span_from(start) });
        }
        Ok(tokens)
    }

    fn number(&mut self, start: Pos) -> Result<Token, LexError> {
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if !c.is_ascii_digit() {
                break;
            }
            text.push(c);
            self.bump();
        }
        let value: i64 = text
            .parse()
            .map_err(|_| self.error(start, format!("integer literal `{text}` is too large")))?;
        Ok(Token { kind: TokenKind::Int(value), span: self.span_from(start) })
    }

    fn word(&mut self, start: Pos) -> Token {
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if !(c.is_ascii_alphanumeric() || c == '_') {
                break;
            }
            text.push(c);
            self.bump();
        }
        let kind = TokenKind::keyword(&text).unwrap_or(TokenKind::Ident(text));
        Token { kind, span: self.span_from(start) }
    }

    fn string(&mut self, start: Pos) -> Result<Token, LexError> {
        self.bump(); // opening quote
        let mut text = String::new();
        loop {
            match self.peek() {
                None => return Err(self.error(start, "unterminated string literal")),
                Some('\n') => return Err(self.error(start, "unterminated string literal")),
                Some('"') => {
                    self.bump();
                    break;
                }
                Some('\\') => {
                    self.bump();
                    let esc_start = self.pos();
                    match self.bump() {
                        Some('"') => text.push('"'),
                        Some('\\') => text.push('\\'),
                        Some('n') => text.push('\n'),
                        Some(other) => {
                            return Err(self.error(
                                esc_start,
                                format!("unknown escape sequence `\\{other}`"),
                            ))
                        }
                        None => return Err(self.error(start, "unterminated string literal")),
                    }
                }
                Some(c) => {
                    text.push(c);
                    self.bump();
                }
            }
        }
        Ok(Token { kind: TokenKind::Str(text), span: self.span_from(start) })
    }

    fn punct(&mut self, start: Pos) -> Result<TokenKind, LexError> {
        use TokenKind::*;
        let c = self.peek().expect("punct called at end of input");
        let two = |l: &mut Self, kind: TokenKind| {
            l.bump();
            l.bump();
            kind
        };
        let kind = match (c, self.peek2()) {
            ('=', Some('=')) => two(self, EqEq),
            ('!', Some('=')) => two(self, Ne),
            ('<', Some('=')) => two(self, Le),
            ('>', Some('=')) => two(self, Ge),
            ('!', _) => {
                self.bump();
                return Err(self.error(start, "unexpected character `!` (use `not` or `!=`)"));
            }
            _ => {
                let kind = match c {
                    '(' => LParen,
                    ')' => RParen,
                    '{' => LBrace,
                    '}' => RBrace,
                    ',' => Comma,
                    ';' => Semi,
                    '.' => Dot,
                    '=' => Assign,
                    '+' => Plus,
                    '-' => Minus,
                    '*' => Star,
                    '/' => Slash,
                    '<' => Lt,
                    '>' => Gt,
                    other => {
                        self.bump();
                        return Err(
                            self.error(start, format!("unexpected character `{other}`"))
                        );
                    }
                };
                self.bump();
                kind
            }
        };
        Ok(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn print_call_tokens() {
        let tokens = tokenize("t.flare", "print(1);").unwrap();
        let kinds: Vec<_> = tokens.into_iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokenKind::KwPrint,
                TokenKind::LParen,
                TokenKind::Int(1),
                TokenKind::RParen,
                TokenKind::Semi,
            ]
        );
    }

    #[test]
    fn empty_input_yields_no_tokens() {
        assert!(tokenize("t.flare", "").unwrap().is_empty());
    }

    #[test]
    fn at_sign_is_rejected_with_span() {
        let err = tokenize("t.flare", "var x = @;").unwrap_err();
        assert_eq!(err.span.start, Pos::new(1, 9));
        assert!(err.message.contains('@'));
    }

    #[test]
    fn comments_and_whitespace_are_skipped() {
        let tokens = tokenize("t.flare", "# heading\n  var x = 1; # tail\n").unwrap();
        assert_eq!(tokens.len(), 5);
        assert_eq!(tokens[0].span.start, Pos::new(2, 3));
    }

    #[test]
    fn string_escapes() {
        let tokens = tokenize("t.flare", r#"print("a\"b\\c\n");"#).unwrap();
        match &tokens[2].kind {
            TokenKind::Str(s) => assert_eq!(s, "a\"b\\c\n"),
            other => panic!("expected string, got {other:?}"),
        }
    }

    #[test]
    fn spans_cover_tokens_exactly() {
        let tokens = tokenize("t.flare", "while x {").unwrap();
        assert_eq!(tokens[0].span.start, Pos::new(1, 1));
        assert_eq!(tokens[0].span.end, Pos::new(1, 6));
        assert_eq!(tokens[1].span.start, Pos::new(1, 7));
        assert_eq!(tokens[2].span.start, Pos::new(1, 9));
    }
}
