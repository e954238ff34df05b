use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub action: String,
    pub args: Vec<String>,
}

impl PlanStep {
    pub fn new<I, S>(action: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PlanStep {
            action: action.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn label(&self) -> String {
        let mut out = String::from("(");
        out.push_str(&self.action);
        for a in &self.args {
            out.push(' ');
            out.push_str(a);
        }
        out.push(')');
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub solver: String,
    pub seed: Option<u64>,
}

/// Ordered ground-action sequence with unit cost.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub cost: usize,
    pub provenance: Provenance,
}

impl Plan {
    pub fn new(steps: Vec<PlanStep>, provenance: Provenance) -> Self {
        Plan {
            cost: steps.len(),
            steps,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One `(name obj ...)` per line followed by a cost comment.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&s.label());
            out.push('\n');
        }
        let _ = writeln!(out, "; cost = {} (unit cost)", self.cost);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("plan line {line}: {reason}")]
pub struct PlanParseError {
    pub line: usize,
    pub reason: String,
}

/// Reads a plan file: one `(name obj ...)` per line, `;` comments, and an
/// optional `N:` step prefix as written by common planners.
pub fn parse_plan(text: &str) -> Result<Vec<PlanStep>, PlanParseError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: &str| PlanParseError {
            line: i + 1,
            reason: reason.to_string(),
        };
        let line = match line.split_once(':') {
            Some((n, rest)) if n.trim().chars().all(|c| c.is_ascii_digit() || c == '.') => {
                rest.trim()
            }
            _ => line,
        };
        let inner = line
            .strip_prefix('(')
            .and_then(|l| l.split_once(')'))
            .ok_or_else(|| err("expected `(name args...)`"))?;
        if !inner.1.trim().is_empty() && !inner.1.trim().starts_with('[') {
            return Err(err("unexpected text after step"));
        }
        let mut toks = inner.0.split_whitespace().map(str::to_lowercase);
        let action = toks.next().ok_or_else(|| err("empty step"))?;
        steps.push(PlanStep {
            action,
            args: toks.collect(),
        });
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let plan = Plan::new(
            alloc::vec![
                PlanStep::new("unstack", ["c", "a"]),
                PlanStep::new("putdown", ["c"])
            ],
            Provenance {
                solver: "bfs".into(),
                seed: None,
            },
        );
        let text = plan.to_text();
        assert_eq!(text, "(unstack c a)\n(putdown c)\n; cost = 2 (unit cost)\n");
        assert_eq!(parse_plan(&text).unwrap(), plan.steps);
    }

    #[test]
    fn tolerates_planner_prefixes() {
        let steps = parse_plan("0: (PICKUP A) [1]\n1.000: (stack a b)\n").unwrap();
        assert_eq!(steps[0], PlanStep::new("pickup", ["a"]));
        assert_eq!(steps[1], PlanStep::new("stack", ["a", "b"]));
        assert!(parse_plan("pickup a").is_err());
    }
}
