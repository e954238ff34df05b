use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};

use crate::pddl::Predicate;

/// Placeholders a template may mention. Anything else in `{ident}` form is
/// rejected when the template is loaded.
pub const PLACEHOLDERS: [&str; 8] = [
    "domain_desc",
    "types",
    "predicates",
    "action_name",
    "action_desc",
    "action_list",
    "problem_desc",
    "llm_response",
];

pub type Bindings = BTreeMap<&'static str, String>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template placeholder `{{{0}}}` is not bound")]
    MissingPlaceholder(String),
    #[error("unknown template placeholder `{{{0}}}`")]
    UnknownPlaceholder(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    body: String,
    required: BTreeSet<String>,
}

/// `{ident}` spans in `body`: (start, end, ident). Braces around anything
/// other than a lower-case identifier are literal text.
fn placeholders(body: &str) -> impl Iterator<Item = (usize, usize, &str)> {
    let bytes = body.as_bytes();
    let mut i = 0;
    core::iter::from_fn(move || {
        while i < bytes.len() {
            if bytes[i] == b'{' {
                let start = i;
                let mut j = i + 1;
                while j < bytes.len()
                    && (bytes[j].is_ascii_lowercase()
                        || bytes[j] == b'_'
                        || bytes[j].is_ascii_digit())
                {
                    j += 1;
                }
                if j < bytes.len()
                    && bytes[j] == b'}'
                    && j > start + 1
                    && bytes[start + 1].is_ascii_lowercase()
                {
                    i = j + 1;
                    return Some((start, j + 1, &body[start + 1..j]));
                }
            }
            i += 1;
        }
        None
    })
}

impl PromptTemplate {
    pub fn new(body: impl Into<String>) -> Result<Self, TemplateError> {
        let body = body.into();
        let mut required = BTreeSet::new();
        for (_, _, name) in placeholders(&body) {
            if !PLACEHOLDERS.contains(&name) {
                return Err(TemplateError::UnknownPlaceholder(name.to_string()));
            }
            required.insert(name.to_string());
        }
        Ok(PromptTemplate { body, required })
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    /// Placeholders that occur in the body; all must be bound to render.
    pub fn required(&self) -> impl Iterator<Item = &str> {
        self.required.iter().map(String::as_str)
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.required.contains(name)
    }

    /// Exact substitution. Bindings the body does not mention are ignored.
    pub fn render(&self, bindings: &Bindings) -> Result<String, TemplateError> {
        if let Some(missing) = self
            .required
            .iter()
            .find(|r| !bindings.contains_key(r.as_str()))
        {
            return Err(TemplateError::MissingPlaceholder(missing.clone()));
        }
        let mut out = String::with_capacity(self.body.len());
        let mut last = 0;
        for (start, end, name) in placeholders(&self.body) {
            out.push_str(&self.body[last..start]);
            out.push_str(&bindings[name]);
            last = end;
        }
        out.push_str(&self.body[last..]);
        Ok(out)
    }
}

/// Value for `{predicates}`: a numbered list of raw signatures, each on its
/// own line, or a sentinel line when there are none.
pub fn render_predicate_list(preds: &[Predicate]) -> String {
    if preds.is_empty() {
        return String::from("\nNo predicate has been defined yet");
    }
    let mut out = String::new();
    for (i, p) in preds.iter().enumerate() {
        let raw = if p.raw.is_empty() { &p.clean } else { &p.raw };
        out.push_str(&format!("\n{}. {}", i + 1, raw));
    }
    out
}
