//! Human review gates: an interactive terminal and a scripted answers file.
//!
//! Answers file format, one reply per line:
//!
//! ```text
//! # comments and blank lines are ignored
//! y                      accept the suggestion
//! n                      reject it
//! e (clear b)            apply it with this literal instead
//! >>> critique           the reviewer's own critique, verbatim,
//! 1. ... No.             up to the closing marker
//! <<<
//! ```

use std::collections::VecDeque;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use pddlkit_core::builder::feedback::{Edit, GateDecision, ReviewGate};

/// Prompts on `out`, reads replies from `input`. Unreadable replies are
/// asked again; end of input rejects.
pub struct TerminalGate<R, W> {
    input: R,
    out: W,
}

impl TerminalGate<io::StdinLock<'static>, io::Stderr> {
    pub fn stdio() -> Self {
        TerminalGate::new(io::stdin().lock(), io::stderr())
    }
}

impl<R: BufRead, W: Write> TerminalGate<R, W> {
    pub fn new(input: R, out: W) -> Self {
        TerminalGate { input, out }
    }

    fn line(&mut self) -> Option<String> {
        let mut s = String::new();
        match self.input.read_line(&mut s) {
            Ok(0) | Err(_) => None,
            Ok(_) => Some(s.trim_end_matches(['\n', '\r']).to_string()),
        }
    }
}

impl<R: BufRead, W: Write> ReviewGate for TerminalGate<R, W> {
    fn review(&mut self, edit: &Edit) -> GateDecision {
        loop {
            let _ = write!(self.out, "suggestion: {edit}\naccept? [y/n/e <literal>] ");
            let _ = self.out.flush();
            let Some(reply) = self.line() else {
                return GateDecision::Reject;
            };
            match GateDecision::from_reply(edit, &reply) {
                Ok(d) => return d,
                Err(e) => {
                    let _ = writeln!(self.out, "{e}");
                }
            }
        }
    }

    fn critique(&mut self, prompt: &str) -> Option<String> {
        let _ = writeln!(
            self.out,
            "{prompt}\n\nWrite your critique; finish with a line holding only `.`, or send an empty first line to use the LLM critique."
        );
        let _ = self.out.flush();
        let mut lines = Vec::new();
        while let Some(l) = self.line() {
            if l.trim() == "." || (lines.is_empty() && l.trim().is_empty()) {
                break;
            }
            lines.push(l);
        }
        (!lines.is_empty()).then(|| lines.join("\n"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Reply {
    Decision(String),
    Critique(String),
}

/// Replays an answers file. Decisions are consumed in order; running out
/// rejects, so a short script never applies more than it says.
#[derive(Clone, Debug, Default)]
pub struct ScriptedGate {
    replies: VecDeque<Reply>,
    pub transcript: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("cannot read answers file: {0}")]
    Io(#[from] io::Error),
    #[error("answers file line {line}: {reason}")]
    Syntax { line: usize, reason: String },
}

impl ScriptedGate {
    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let mut replies = VecDeque::new();
        let mut lines = text.lines().enumerate();
        while let Some((i, l)) = lines.next() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if t == ">>> critique" {
                let mut body = Vec::new();
                let closed = lines.by_ref().any(|(_, l)| {
                    if l.trim() == "<<<" {
                        return true;
                    }
                    body.push(l);
                    false
                });
                if !closed {
                    return Err(ScriptError::Syntax {
                        line: i + 1,
                        reason: "critique block is not closed with `<<<`".into(),
                    });
                }
                replies.push_back(Reply::Critique(body.join("\n")));
                continue;
            }
            let head = t.split_whitespace().next().unwrap_or("").to_lowercase();
            if !matches!(head.as_str(), "y" | "yes" | "n" | "no" | "e" | "edit") {
                return Err(ScriptError::Syntax {
                    line: i + 1,
                    reason: format!("expected y, n, e <literal> or `>>> critique`, got `{t}`"),
                });
            }
            replies.push_back(Reply::Decision(t.to_string()));
        }
        Ok(ScriptedGate {
            replies,
            transcript: Vec::new(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Accepts every suggestion.
    pub fn accept_all(n: usize) -> Self {
        ScriptedGate {
            replies: (0..n).map(|_| Reply::Decision("y".into())).collect(),
            transcript: Vec::new(),
        }
    }
}

impl ReviewGate for ScriptedGate {
    fn review(&mut self, edit: &Edit) -> GateDecision {
        let pos = self
            .replies
            .iter()
            .position(|r| matches!(r, Reply::Decision(_)));
        let decision = match pos.and_then(|i| self.replies.remove(i)) {
            Some(Reply::Decision(d)) => {
                GateDecision::from_reply(edit, &d).unwrap_or(GateDecision::Reject)
            }
            _ => GateDecision::Reject,
        };
        self.transcript.push(format!("{edit} -> {decision:?}"));
        decision
    }

    fn critique(&mut self, _prompt: &str) -> Option<String> {
        let pos = self
            .replies
            .iter()
            .position(|r| matches!(r, Reply::Critique(_)))?;
        match self.replies.remove(pos) {
            Some(Reply::Critique(c)) => Some(c),
            _ => None,
        }
    }
}
