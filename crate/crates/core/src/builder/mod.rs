//! LLM-driven construction of domains and tasks, and critique rounds over
//! the results.

pub mod domain;
pub mod feedback;
pub mod task;

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::marker::PhantomData;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::llm::{LlmError, SectionError, TemplateError};
use crate::pddl::{is_variable, ParseError};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("completion has no `### {0}` section")]
    MissingSection(String),
    #[error("cannot read the {section} block: {reason}")]
    MalformedBlock { section: String, reason: String },
    #[error("goal section has no literal")]
    EmptyGoal,
    #[error("predicate vocabulary is empty")]
    EmptyVocabulary,
    #[error("duplicate {kind} `{name}`")]
    DuplicateName { kind: String, name: String },
    #[error("invalid type hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error("max_iter must be at least 1")]
    ZeroIterations,
    #[error("sweep {sweep}, action `{action}`: {source}")]
    InSweep {
        sweep: usize,
        action: String,
        #[source]
        source: Box<BuildError>,
    },
}

impl From<SectionError> for BuildError {
    fn from(e: SectionError) -> Self {
        match e {
            SectionError::MissingSection(h) => BuildError::MissingSection(h),
        }
    }
}

pub(crate) fn malformed(section: &str, e: impl fmt::Display) -> BuildError {
    BuildError::MalformedBlock {
        section: section.to_string(),
        reason: e.to_string(),
    }
}

impl From<ParseError> for BuildError {
    fn from(e: ParseError) -> Self {
        malformed("PDDL", e)
    }
}

/// Drops list markers (`-`, `*`, `1.`, `2)`) and surrounding backticks.
pub(crate) fn strip_marker(line: &str) -> &str {
    let t = line.trim();
    let t = if let Some(r) = t.strip_prefix("- ").or_else(|| t.strip_prefix("* ")) {
        r
    } else {
        let digits = t.bytes().take_while(u8::is_ascii_digit).count();
        match t.as_bytes().get(digits) {
            Some(b'.' | b')') if digits > 0 => &t[digits + 1..],
            _ => t,
        }
    };
    t.trim().trim_matches('`').trim()
}

/// Cuts `line` at the first `;` or `:` outside parentheses, dropping the
/// trailing description or comment.
pub(crate) fn strip_trailer(line: &str) -> &str {
    let mut depth = 0i32;
    for (i, c) in line.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ';' => return &line[..i],
            ':' if depth == 0 => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Top-level parenthesised groups of `block`, line descriptions removed.
pub(crate) fn paren_groups(block: &str) -> Result<Vec<String>, String> {
    let mut groups = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for line in block.lines() {
        let line = strip_trailer(strip_marker(line));
        for c in line.chars() {
            match c {
                '(' => {
                    depth += 1;
                    cur.push(c);
                }
                ')' => {
                    if depth == 0 {
                        return Err("unbalanced `)`".into());
                    }
                    depth -= 1;
                    cur.push(c);
                    if depth == 0 {
                        groups.push(core::mem::take(&mut cur));
                    }
                }
                _ if depth > 0 => cur.push(c),
                _ => {}
            }
        }
        if depth > 0 {
            cur.push(' ');
        }
    }
    if depth > 0 {
        return Err("unbalanced `(`".into());
    }
    Ok(groups)
}

/// `?x` stays, `x` becomes `?x` when `x` names a parameter.
pub(crate) fn normalize_variable(term: &str, params: &[String]) -> String {
    if !is_variable(term) && params.iter().any(|p| &p[1..] == term) {
        alloc::format!("?{term}")
    } else {
        term.to_string()
    }
}

/// Deserializes a JSON-style object into `(key, value)` pairs in document
/// order.
pub(crate) fn ordered_map<'de, D, V>(de: D) -> Result<Vec<(String, V)>, D::Error>
where
    D: Deserializer<'de>,
    V: Deserialize<'de>,
{
    struct V2<V>(PhantomData<V>);
    impl<'de, V: Deserialize<'de>> Visitor<'de> for V2<V> {
        type Value = Vec<(String, V)>;
        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a map")
        }
        fn visit_map<A: MapAccess<'de>>(self, mut m: A) -> Result<Self::Value, A::Error> {
            let mut out = Vec::new();
            while let Some((k, v)) = m.next_entry::<String, V>()? {
                out.push((k, v));
            }
            Ok(out)
        }
    }
    de.deserialize_map(V2(PhantomData))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markers_and_trailers() {
        assert_eq!(strip_marker("1. (a ?x): d"), "(a ?x): d");
        assert_eq!(strip_marker("- `?t - truck`"), "?t - truck");
        assert_eq!(strip_marker("10) x"), "x");
        assert_eq!(strip_trailer("(clear a): a is clear"), "(clear a)");
        assert_eq!(strip_trailer("?t - truck: the truck"), "?t - truck");
    }

    #[test]
    fn groups() {
        let g = paren_groups("(clear a) (clear b): both clear\n(on\n a b) ; c").unwrap();
        assert_eq!(g, ["(clear a)", "(clear b)", "(on a b)"]);
        assert!(paren_groups("(a").is_err());
    }
}
