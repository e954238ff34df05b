use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Predicate, TypedParam, OBJECT};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("malformed predicate signature `{line}`: {reason}")]
    Malformed { line: String, reason: String },
}

fn malformed(line: &str, reason: impl Into<String>) -> SignatureError {
    SignatureError::Malformed {
        line: line.into(),
        reason: reason.into(),
    }
}

/// Parses `(name ?a - t ?b - u): description` (or `; description`) into a
/// [`Predicate`]. `raw` keeps the input verbatim.
pub fn parse_predicate_signature(line: &str) -> Result<Predicate, SignatureError> {
    let text = line.trim();
    let Some(body_start) = text.strip_prefix('(') else {
        return Err(malformed(line, "expected `(`"));
    };
    let close = match body_start.find([')', '(']) {
        Some(i) if body_start.as_bytes()[i] == b')' => i,
        Some(_) => return Err(malformed(line, "nested parentheses")),
        None => return Err(malformed(line, "unbalanced parentheses")),
    };
    let inner = &body_start[..close];
    let rest = body_start[close + 1..].trim();

    let mut tokens = inner.split_whitespace();
    let name = tokens
        .next()
        .ok_or_else(|| malformed(line, "missing predicate name"))?
        .to_lowercase();
    if name.starts_with('?') || name.starts_with(':') || name == "-" {
        return Err(malformed(
            line,
            alloc::format!("`{name}` is not a predicate name"),
        ));
    }

    let toks: Vec<String> = tokens.map(str::to_lowercase).collect();
    let mut params: Vec<TypedParam> = Vec::new();
    let mut pending = 0usize;
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        if t == "-" {
            let ty = toks
                .get(i + 1)
                .filter(|ty| !ty.starts_with('?') && *ty != "-")
                .ok_or_else(|| malformed(line, "`-` without a type"))?;
            if pending == 0 {
                return Err(malformed(line, "`-` without a parameter"));
            }
            let n = params.len();
            for p in &mut params[n - pending..] {
                p.type_name = ty.clone();
            }
            pending = 0;
            i += 2;
            continue;
        }
        if !t.starts_with('?') || t.len() < 2 {
            return Err(malformed(line, alloc::format!("parameter `{t}` lacks `?`")));
        }
        if params.iter().any(|p| &p.name == t) {
            return Err(malformed(line, alloc::format!("duplicate parameter `{t}`")));
        }
        params.push(TypedParam::new(t.clone(), OBJECT));
        pending += 1;
        i += 1;
    }

    let desc = if rest.is_empty() {
        String::new()
    } else if let Some(d) = rest.strip_prefix(':').or_else(|| rest.strip_prefix(';')) {
        d.trim().to_string()
    } else {
        return Err(malformed(line, "unexpected text after signature"));
    };

    Ok(Predicate::new(name, params, desc, line))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_binary_signature() {
        let p = parse_predicate_signature(
            "(holding ?a - arm ?b - block): true if the arm ?a is holding the block ?b",
        )
        .unwrap();
        assert_eq!(p.name, "holding");
        assert_eq!(p.arity(), 2);
        assert_eq!(p.params.get("?a").unwrap().type_name, "arm");
        assert_eq!(p.params.get("?b").unwrap().type_name, "block");
        assert_eq!(p.desc, "true if the arm ?a is holding the block ?b");
        assert_eq!(p.clean, p.raw);
    }

    #[test]
    fn nullary_and_semicolon_forms() {
        assert_eq!(parse_predicate_signature("(arm-empty)").unwrap().arity(), 0);
        let p = parse_predicate_signature("(on ?x ?y - block) ; x is on y").unwrap();
        assert_eq!(p.params.0[0].type_name, "block");
        assert_eq!(p.desc, "x is on y");
        let untyped = parse_predicate_signature("(clear ?x)").unwrap();
        assert_eq!(untyped.params.0[0].type_name, OBJECT);
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "(on ?x ?y",
            "(on x ?y)",
            "on ?x",
            "()",
            "(p ?x - )",
            "(p - t)",
            "(p ?x ?x)",
            "(p (either a b))",
            "(p ?x) trailing",
        ] {
            assert!(
                matches!(
                    parse_predicate_signature(bad),
                    Err(SignatureError::Malformed { .. })
                ),
                "{bad}"
            );
        }
    }
}
