//! Source positions and spans.
//!
//! Every AST node and element carries exactly one [`SourceSpan`]. Positions
//! are 1-based; `end` points one past the last character, so `start == end`
//! denotes an empty span and `start <= end` always holds.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A 1-based line/column position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A contiguous region of one source file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "SpanRepr", into = "SpanRepr")]
pub struct SourceSpan {
    pub file: String,
    pub start: Pos,
    pub end: Pos,
}

/// Wire shape: `{file, line, col, end_line, end_col}`.
#[derive(Serialize, Deserialize)]
struct SpanRepr {
    file: String,
    line: u32,
    col: u32,
    end_line: u32,
    end_col: u32,
}

impl From<SpanRepr> for SourceSpan {
    fn from(r: SpanRepr) -> Self {
        SourceSpan {
            file: r.file,
            start: Pos::new(r.line, r.col),
            end: Pos::new(r.end_line, r.end_col),
        }
    }
}

impl From<SourceSpan> for SpanRepr {
    fn from(s: SourceSpan) -> Self {
        SpanRepr {
            file: s.file,
            line: s.start.line,
            col: s.start.col,
            end_line: s.end.line,
            end_col: s.end.col,
        }
    }
}

impl SourceSpan {
    pub fn new(file: impl Into<String>, start: Pos, end: Pos) -> Self {
        let span = SourceSpan { file: file.into(), start, end };
        debug_assert!(span.start <= span.end, "span start must not exceed end");
        span
    }

    /// Empty span at a single position.
    pub fn point(file: impl Into<String>, pos: Pos) -> Self {
        SourceSpan::new(file, pos, pos)
    }

    /// True when `pos` lies within the span (`start <= pos < end`).
    pub fn contains(&self, pos: Pos) -> bool {
        self.start <= pos && pos < self.end
    }

    /// True when `other` lies wholly within `self`.
    pub fn contains_span(&self, other: &SourceSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Smallest span covering both `self` and `other`.
    pub fn hull(&self, other: &SourceSpan) -> SourceSpan {
        SourceSpan::new(
            self.file.clone(),
            self.start.min(other.start),
            self.end.max(other.end),
        )
    }

    /// Ordering key for "smallest containing span" queries. Nested spans
    /// compare by line extent first, then by a single-line column extent.
    pub fn extent_key(&self) -> (u32, u64, Pos) {
        let lines = self.end.line - self.start.line;
        let cols = if lines == 0 {
            u64::from(self.end.col - self.start.col)
        } else {
            u64::MAX
        };
        (lines, cols, self.start)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.start)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(l1: u32, c1: u32, l2: u32, c2: u32) -> SourceSpan {
        SourceSpan::new("t.flare", Pos::new(l1, c1), Pos::new(l2, c2))
    }

    #[test]
    fn containment_is_end_exclusive() {
        let s = span(1, 1, 1, 6);
        assert!(s.contains(Pos::new(1, 1)));
        assert!(s.contains(Pos::new(1, 5)));
        assert!(!s.contains(Pos::new(1, 6)));
    }

    #[test]
    fn hull_covers_both() {
        let a = span(2, 5, 2, 9);
        let b = span(4, 1, 4, 3);
        let h = a.hull(&b);
        assert!(h.contains_span(&a) && h.contains_span(&b));
    }

    #[test]
    fn json_shape_uses_flat_fields() {
        let s = span(3, 1, 3, 22);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["line"], 3);
        assert_eq!(v["col"], 1);
        assert_eq!(v["end_line"], 3);
        assert_eq!(v["end_col"], 22);
        assert_eq!(v["file"], "t.flare");
        let back: SourceSpan = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
