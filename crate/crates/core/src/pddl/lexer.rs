//! S-expression reader with source positions.
//!
//! Builds the tree iteratively so hostile input cannot blow the stack; list
//! nesting is capped at [`MAX_DEPTH`].

use alloc::string::String;
use alloc::vec::Vec;

use super::parser::ParseError;

/// Deepest list nesting accepted by the reader.
pub const MAX_DEPTH: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug)]
pub enum Kind {
    /// Lower-cased token text.
    Atom(String),
    List(Vec<Node>),
}

#[derive(Clone, Debug)]
pub struct Node {
    pub kind: Kind,
    pub pos: Pos,
    pub end_line: u32,
    /// Byte range in the source, for `raw` facets.
    pub start: usize,
    pub end: usize,
    /// `; comment` that follows this node on the same line.
    pub comment: Option<String>,
}

impl Node {
    pub fn atom(&self) -> Option<&str> {
        match &self.kind {
            Kind::Atom(s) => Some(s),
            Kind::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Node]> {
        match &self.kind {
            Kind::List(items) => Some(items),
            Kind::Atom(_) => None,
        }
    }

    /// Head keyword of a list, e.g. `and` for `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(Node::atom)
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Atom(s) => alloc::format!("`{s}`"),
            Kind::List(_) => String::from("a list"),
        }
    }
}

struct Frame {
    items: Vec<Node>,
    pos: Pos,
    start: usize,
}

/// Reads exactly one top-level list from `src`.
pub fn read(src: &str) -> Result<Node, ParseError> {
    let bytes = src.as_bytes();
    let mut stack: Vec<Frame> = Vec::new();
    let mut top: Option<Node> = None;
    let mut line: u32 = 1;
    let mut line_start = 0usize;
    let mut i = 0usize;

    let pos_at = |i: usize, line: u32, line_start: usize| Pos {
        line,
        col: (src[line_start..i].chars().count() + 1) as u32,
    };

    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'\n' => {
                line += 1;
                i += 1;
                line_start = i;
            }
            b' ' | b'\t' | b'\r' | 0x0c => i += 1,
            b';' => {
                let end = src[i..].find('\n').map_or(bytes.len(), |off| i + off);
                let text = src[i + 1..end].trim_start_matches(';').trim();
                if let Some(frame) = stack.last_mut() {
                    if let Some(last) = frame.items.last_mut() {
                        if last.end_line == line && last.comment.is_none() {
                            last.comment = Some(text.into());
                        }
                    }
                } else if let Some(t) = top.as_mut() {
                    if t.end_line == line && t.comment.is_none() {
                        t.comment = Some(text.into());
                    }
                }
                i = end;
            }
            b'(' => {
                let pos = pos_at(i, line, line_start);
                if top.is_some() {
                    return Err(ParseError::syntax(pos, "end of input", "`(`"));
                }
                if stack.len() >= MAX_DEPTH {
                    return Err(ParseError::syntax(
                        pos,
                        "shallower nesting",
                        "nesting deeper than the reader limit",
                    ));
                }
                stack.push(Frame {
                    items: Vec::new(),
                    pos,
                    start: i,
                });
                i += 1;
            }
            b')' => {
                let pos = pos_at(i, line, line_start);
                let frame = stack
                    .pop()
                    .ok_or_else(|| ParseError::syntax(pos, "`(`", "`)`"))?;
                i += 1;
                let node = Node {
                    kind: Kind::List(frame.items),
                    pos: frame.pos,
                    end_line: line,
                    start: frame.start,
                    end: i,
                    comment: None,
                };
                match stack.last_mut() {
                    Some(parent) => parent.items.push(node),
                    None => top = Some(node),
                }
            }
            _ => {
                let pos = pos_at(i, line, line_start);
                let start = i;
                while i < bytes.len()
                    && !matches!(
                        bytes[i],
                        b'(' | b')' | b';' | b' ' | b'\t' | b'\r' | b'\n' | 0x0c
                    )
                {
                    i += 1;
                }
                let text = src[start..i].to_lowercase();
                let Some(frame) = stack.last_mut() else {
                    let expected = if top.is_some() { "end of input" } else { "`(`" };
                    return Err(ParseError::syntax(
                        pos,
                        expected,
                        &alloc::format!("`{text}`"),
                    ));
                };
                frame.items.push(Node {
                    kind: Kind::Atom(text),
                    pos,
                    end_line: line,
                    start,
                    end: i,
                    comment: None,
                });
            }
        }
    }

    if let Some(open) = stack.last() {
        return Err(ParseError::syntax(open.pos, "`)`", "end of input"));
    }
    top.ok_or_else(|| ParseError::syntax(Pos { line, col: 1 }, "`(`", "end of input"))
}
