use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Section headings of the completion contract, written as `### <heading>`.
pub mod headings {
    pub const NEW_PREDICATES: &str = "New Predicates";
    pub const PARAMETERS: &str = "Action Parameters";
    pub const PRECONDITIONS: &str = "Action Preconditions";
    pub const EFFECTS: &str = "Action Effects";
    pub const OBJECTS: &str = "Objects";
    pub const INITIAL: &str = "Initial";
    pub const GOAL: &str = "Goal";
    pub const SUGGESTIONS: &str = "Suggestions";
}

/// Sentinels that stand for an empty block.
const EMPTY_SENTINELS: [&str; 3] = ["no new predicates", "none", "no new predicates needed"];

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SectionError {
    #[error("completion has no `### {0}` section")]
    MissingSection(String),
}

/// Heading → block text, keyed by the heading as requested.
pub type Sections = BTreeMap<String, String>;

fn heading_of(line: &str) -> Option<String> {
    let t = line.trim_start();
    let rest = t.strip_prefix('#')?;
    let rest = rest.trim_start_matches('#');
    let h = rest.trim().trim_end_matches(':').trim();
    (!h.is_empty()).then(|| h.to_lowercase())
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

fn is_sentinel(block: &str) -> bool {
    let t = block.trim().trim_end_matches('.').trim().to_lowercase();
    EMPTY_SENTINELS.contains(&t.as_str())
}

/// Body of one section: the last fenced block inside it, else its plain text.
fn block_of(lines: &[&str]) -> String {
    let mut fences: Vec<Vec<&str>> = Vec::new();
    let mut cur: Option<Vec<&str>> = None;
    for line in lines {
        if is_fence(line) {
            match cur.take() {
                Some(b) => fences.push(b),
                None => cur = Some(Vec::new()),
            }
        } else if let Some(b) = cur.as_mut() {
            b.push(line);
        }
    }
    // An unterminated fence still counts.
    if let Some(b) = cur {
        fences.push(b);
    }
    let body = match fences.pop() {
        Some(f) => f.join("\n"),
        None => lines.join("\n"),
    };
    let body = body.trim_matches('\n').to_string();
    if is_sentinel(&body) {
        String::new()
    } else {
        body
    }
}

/// Splits a completion on `#`-headings outside code fences and returns the
/// block under each requested heading (case-insensitive). When a heading
/// occurs more than once the last occurrence wins.
pub fn extract_sections(completion: &str, wanted: &[&str]) -> Result<Sections, SectionError> {
    let mut spans: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    let mut current: Option<(String, Vec<&str>)> = None;
    let mut in_fence = false;
    for line in completion.lines() {
        if is_fence(line) {
            in_fence = !in_fence;
        } else if !in_fence {
            if let Some(h) = heading_of(line) {
                if let Some((name, body)) = current.take() {
                    spans.insert(name, body);
                }
                current = Some((h, Vec::new()));
                continue;
            }
        }
        if let Some((_, body)) = current.as_mut() {
            body.push(line);
        }
    }
    if let Some((name, body)) = current {
        spans.insert(name, body);
    }

    let whole_is_sentinel = spans.is_empty() && is_sentinel(completion);
    let mut out = Sections::new();
    for &w in wanted {
        match spans.get(&w.to_lowercase()) {
            Some(lines) => {
                out.insert(w.to_string(), block_of(lines));
            }
            None if whole_is_sentinel => {
                out.insert(w.to_string(), String::new());
            }
            None => return Err(SectionError::MissingSection(w.to_string())),
        }
    }
    Ok(out)
}
