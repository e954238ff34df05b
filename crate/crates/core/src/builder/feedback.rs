//! Checklist critique of generated models and mechanical application of the
//! edits it suggests.
//!
//! A critique answers the numbered questions of its template and may carry a
//! `### Suggestions` block in the edit grammar below, one edit per line:
//!
//! ```text
//! add-init (atom)              remove-init (atom)
//! add-goal (literal)           remove-goal (literal)
//! add-object name - type       remove-object name
//! retype-object name type
//! add-predicate (sig): desc    remove-predicate name
//! add-precondition act (lit)   remove-precondition act (lit)
//! add-effect act (lit)         remove-effect act (lit)
//! retype-param act ?p type
//! ```

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::domain::TypeHierarchy;
use super::strip_marker;
use super::task::{check_vocabulary, TaskTriple};
use crate::diagnostics::{check_domain, Diagnostic};
use crate::llm::{
    extract_sections, headings, render_predicate_list, Bindings, CompletionRequest, LanguageModel,
    LlmError, PromptTemplate, TemplateError,
};
use crate::pddl::{
    format_domain, format_literal, parse_formula, parse_predicate_signature, Atom, Domain, Literal,
    ObjectDecl, Predicate, EQUALITY,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    /// LLM critique, every suggestion applied.
    Llm,
    /// Reviewer gates each suggestion and may write the critique itself;
    /// without one the LLM critique is used.
    Human,
    /// LLM critique, each suggestion gated by the reviewer.
    Hybrid,
}

impl core::str::FromStr for FeedbackMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "llm" => Ok(FeedbackMode::Llm),
            "human" => Ok(FeedbackMode::Human),
            "hybrid" => Ok(FeedbackMode::Hybrid),
            other => Err(format!("unknown feedback mode `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
    Unanswered,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecklistAnswer {
    pub question: String,
    pub answer: Answer,
    pub rationale: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Revise,
    Accept,
}

/// One edit from the closed suggestion vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "edit", rename_all = "kebab-case")]
pub enum Edit {
    AddInit {
        atom: Atom,
    },
    RemoveInit {
        atom: Atom,
    },
    AddGoal {
        literal: Literal,
    },
    RemoveGoal {
        literal: Literal,
    },
    AddObject {
        name: String,
        type_name: String,
    },
    RemoveObject {
        name: String,
    },
    RetypeObject {
        name: String,
        type_name: String,
    },
    AddPredicate {
        signature: String,
    },
    RemovePredicate {
        name: String,
    },
    AddPrecondition {
        action: String,
        literal: Literal,
    },
    RemovePrecondition {
        action: String,
        literal: Literal,
    },
    AddEffect {
        action: String,
        literal: Literal,
    },
    RemoveEffect {
        action: String,
        literal: Literal,
    },
    RetypeParam {
        action: String,
        param: String,
        type_name: String,
    },
}

impl fmt::Display for Edit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lit = format_literal;
        let atom = |a: &Atom| format_literal(&Literal::pos(a.clone()));
        match self {
            Edit::AddInit { atom: a } => write!(f, "add-init {}", atom(a)),
            Edit::RemoveInit { atom: a } => write!(f, "remove-init {}", atom(a)),
            Edit::AddGoal { literal } => write!(f, "add-goal {}", lit(literal)),
            Edit::RemoveGoal { literal } => write!(f, "remove-goal {}", lit(literal)),
            Edit::AddObject { name, type_name } => write!(f, "add-object {name} - {type_name}"),
            Edit::RemoveObject { name } => write!(f, "remove-object {name}"),
            Edit::RetypeObject { name, type_name } => write!(f, "retype-object {name} {type_name}"),
            Edit::AddPredicate { signature } => write!(f, "add-predicate {signature}"),
            Edit::RemovePredicate { name } => write!(f, "remove-predicate {name}"),
            Edit::AddPrecondition { action, literal } => {
                write!(f, "add-precondition {action} {}", lit(literal))
            }
            Edit::RemovePrecondition { action, literal } => {
                write!(f, "remove-precondition {action} {}", lit(literal))
            }
            Edit::AddEffect { action, literal } => {
                write!(f, "add-effect {action} {}", lit(literal))
            }
            Edit::RemoveEffect { action, literal } => {
                write!(f, "remove-effect {action} {}", lit(literal))
            }
            Edit::RetypeParam {
                action,
                param,
                type_name,
            } => write!(f, "retype-param {action} {param} {type_name}"),
        }
    }
}

fn one_literal(text: &str) -> Result<Literal, String> {
    let lits = parse_formula(text.trim()).map_err(|e| e.to_string())?;
    match <[Literal; 1]>::try_from(lits) {
        Ok([l]) => Ok(l),
        Err(v) => Err(format!("expected one literal, found {}", v.len())),
    }
}

fn one_atom(text: &str) -> Result<Atom, String> {
    let l = one_literal(text)?;
    if l.positive {
        Ok(l.atom)
    } else {
        Err("expected a positive atom".into())
    }
}

fn split_word(s: &str) -> (&str, &str) {
    let s = s.trim();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim()),
        None => (s, ""),
    }
}

impl core::str::FromStr for Edit {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let (verb, rest) = split_word(line);
        let verb = verb.to_lowercase();
        let word = |s: &str| s.trim().to_lowercase();
        Ok(match verb.as_str() {
            "add-init" => Edit::AddInit {
                atom: one_atom(rest)?,
            },
            "remove-init" => Edit::RemoveInit {
                atom: one_atom(rest)?,
            },
            "add-goal" => Edit::AddGoal {
                literal: one_literal(rest)?,
            },
            "remove-goal" => Edit::RemoveGoal {
                literal: one_literal(rest)?,
            },
            "add-object" => {
                let (name, t) = match rest.split_once(" - ") {
                    Some((n, t)) => (word(n), word(t)),
                    None => (word(rest), crate::pddl::OBJECT.to_string()),
                };
                if name.is_empty()
                    || name.contains(char::is_whitespace)
                    || t.contains(char::is_whitespace)
                {
                    return Err("expected `add-object name - type`".into());
                }
                Edit::AddObject { name, type_name: t }
            }
            "remove-object" => {
                let name = word(rest);
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err("expected `remove-object name`".into());
                }
                Edit::RemoveObject { name }
            }
            "retype-object" => {
                let (n, t) = split_word(rest);
                if n.is_empty() || t.is_empty() || t.contains(char::is_whitespace) {
                    return Err("expected `retype-object name type`".into());
                }
                Edit::RetypeObject {
                    name: word(n),
                    type_name: word(t),
                }
            }
            "add-predicate" => {
                parse_predicate_signature(rest).map_err(|e| e.to_string())?;
                Edit::AddPredicate {
                    signature: rest.trim().to_string(),
                }
            }
            "remove-predicate" => {
                let name = word(rest.trim_matches(|c| c == '(' || c == ')'));
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err("expected `remove-predicate name`".into());
                }
                Edit::RemovePredicate { name }
            }
            "add-precondition" | "remove-precondition" | "add-effect" | "remove-effect" => {
                let (action, lit) = split_word(rest);
                if action.is_empty() {
                    return Err(format!("expected `{verb} action (literal)`"));
                }
                let action = word(action);
                let literal = one_literal(lit)?;
                match verb.as_str() {
                    "add-precondition" => Edit::AddPrecondition { action, literal },
                    "remove-precondition" => Edit::RemovePrecondition { action, literal },
                    "add-effect" => Edit::AddEffect { action, literal },
                    _ => Edit::RemoveEffect { action, literal },
                }
            }
            "retype-param" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [action, param, ty] = parts[..] else {
                    return Err("expected `retype-param action ?param type`".into());
                };
                let param = word(param);
                if !param.starts_with('?') {
                    return Err("parameter names start with `?`".into());
                }
                Edit::RetypeParam {
                    action: word(action),
                    param,
                    type_name: word(ty),
                }
            }
            other => return Err(format!("unknown edit `{other}`")),
        })
    }
}

impl Edit {
    /// Element the edit touches. Two edits with the same target in one
    /// report overlap.
    pub fn target(&self) -> String {
        match self {
            Edit::AddInit { atom } | Edit::RemoveInit { atom } => format!("init:{atom}"),
            Edit::AddGoal { literal } | Edit::RemoveGoal { literal } => {
                format!("goal:{}", literal.atom)
            }
            Edit::AddObject { name, .. }
            | Edit::RemoveObject { name }
            | Edit::RetypeObject { name, .. } => {
                format!("object:{name}")
            }
            Edit::AddPredicate { signature } => match parse_predicate_signature(signature) {
                Ok(p) => format!("predicate:{}", p.name),
                Err(_) => format!("predicate:{signature}"),
            },
            Edit::RemovePredicate { name } => format!("predicate:{name}"),
            Edit::AddPrecondition { action, literal }
            | Edit::RemovePrecondition { action, literal } => {
                format!("action:{action}:pre:{}", literal.atom)
            }
            Edit::AddEffect { action, literal } | Edit::RemoveEffect { action, literal } => {
                format!("action:{action}:eff:{}", literal.atom)
            }
            Edit::RetypeParam { action, param, .. } => format!("action:{action}:param:{param}"),
        }
    }

    /// Same edit with its literal replaced; `None` for edits without one.
    pub fn with_literal(&self, l: Literal) -> Option<Edit> {
        Some(match self {
            Edit::AddInit { .. } if l.positive => Edit::AddInit { atom: l.atom },
            Edit::RemoveInit { .. } if l.positive => Edit::RemoveInit { atom: l.atom },
            Edit::AddGoal { .. } => Edit::AddGoal { literal: l },
            Edit::RemoveGoal { .. } => Edit::RemoveGoal { literal: l },
            Edit::AddPrecondition { action, .. } => Edit::AddPrecondition {
                action: action.clone(),
                literal: l,
            },
            Edit::RemovePrecondition { action, .. } => Edit::RemovePrecondition {
                action: action.clone(),
                literal: l,
            },
            Edit::AddEffect { action, .. } => Edit::AddEffect {
                action: action.clone(),
                literal: l,
            },
            Edit::RemoveEffect { action, .. } => Edit::RemoveEffect {
                action: action.clone(),
                literal: l,
            },
            _ => return None,
        })
    }

    fn is_task_edit(&self) -> bool {
        matches!(
            self,
            Edit::AddInit { .. }
                | Edit::RemoveInit { .. }
                | Edit::AddGoal { .. }
                | Edit::RemoveGoal { .. }
                | Edit::AddObject { .. }
                | Edit::RemoveObject { .. }
                | Edit::RetypeObject { .. }
        )
    }
}

/// Reviewer's answer to one proposed edit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GateDecision {
    Accept,
    Reject,
    Replace(Edit),
}

impl GateDecision {
    /// Reads a terminal reply: `y`, `n`, or `e <literal>` / `e <edit>`.
    pub fn from_reply(edit: &Edit, reply: &str) -> Result<GateDecision, String> {
        let reply = reply.trim();
        let (head, rest) = split_word(reply);
        match head.to_lowercase().as_str() {
            "y" | "yes" => Ok(GateDecision::Accept),
            "n" | "no" => Ok(GateDecision::Reject),
            "e" | "edit" => {
                if let Ok(e) = rest.parse::<Edit>() {
                    return Ok(GateDecision::Replace(e));
                }
                let l = one_literal(rest)?;
                edit.with_literal(l)
                    .map(GateDecision::Replace)
                    .ok_or_else(|| "this edit has no literal to replace".into())
            }
            _ => Err(format!("expected y, n or e <literal>, got `{reply}`")),
        }
    }
}

/// Source of human judgement: a terminal session or a scripted stand-in.
pub trait ReviewGate {
    /// Decides on one proposed edit.
    fn review(&mut self, edit: &Edit) -> GateDecision;

    /// Writes a critique for `prompt` in human mode. `None` defers to the LLM.
    fn critique(&mut self, prompt: &str) -> Option<String>;
}

/// Approves everything and has no critique of its own.
#[derive(Clone, Copy, Debug, Default)]
pub struct AcceptAll;

impl ReviewGate for AcceptAll {
    fn review(&mut self, _: &Edit) -> GateDecision {
        GateDecision::Accept
    }

    fn critique(&mut self, _: &str) -> Option<String> {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Applied,
    Rejected,
    Replaced { with: String },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionRecord {
    pub suggestion: String,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub source: FeedbackMode,
    pub checklist: Vec<ChecklistAnswer>,
    pub suggestions: Vec<SuggestionRecord>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Findings on the revised model.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
    pub critique: String,
}

impl FeedbackReport {
    pub fn applied(&self) -> usize {
        self.suggestions
            .iter()
            .filter(|s| matches!(s.outcome, Outcome::Applied | Outcome::Replaced { .. }))
            .count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FeedbackError {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("feedback template has no numbered checklist questions")]
    MissingChecklist,
    #[error("{0:?} mode needs a review gate")]
    NoGate(FeedbackMode),
}

/// Numbered questions (`N. ...?`) of a template, in order.
pub fn checklist_questions(template: &str) -> Vec<String> {
    template
        .lines()
        .filter_map(|l| {
            let t = l.trim();
            let digits = t.bytes().take_while(u8::is_ascii_digit).count();
            if digits == 0 || t.as_bytes().get(digits) != Some(&b'.') {
                return None;
            }
            let q = t[digits + 1..].trim();
            q.ends_with('?').then(|| q.to_string())
        })
        .collect()
}

fn numbered(line: &str) -> Option<usize> {
    let t = line.trim();
    let digits = t.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 && t.as_bytes().get(digits) == Some(&b'.') {
        t[..digits].parse().ok()
    } else {
        None
    }
}

fn last_yes_no(text: &str) -> Answer {
    text.split(|c: char| !c.is_ascii_alphabetic())
        .filter_map(|w| match w.to_ascii_lowercase().as_str() {
            "yes" => Some(Answer::Yes),
            "no" => Some(Answer::No),
            _ => None,
        })
        .next_back()
        .unwrap_or(Answer::Unanswered)
}

/// Matches the answers in `critique` to `questions` by number. An answer is
/// the last yes/no word of its paragraph.
pub fn parse_checklist(critique: &str, questions: &[String]) -> Vec<ChecklistAnswer> {
    let lines: Vec<&str> = critique.lines().collect();
    questions
        .iter()
        .enumerate()
        .map(|(qi, q)| {
            let n = qi + 1;
            let Some(start) = lines.iter().position(|l| numbered(l) == Some(n)) else {
                return ChecklistAnswer {
                    question: q.clone(),
                    answer: Answer::Unanswered,
                    rationale: String::new(),
                };
            };
            let mut body: Vec<&str> = Vec::new();
            for l in &lines[start + 1..] {
                let t = l.trim();
                if t.is_empty()
                    || numbered(l).is_some()
                    || t.starts_with('#')
                    || t.starts_with("```")
                {
                    break;
                }
                body.push(t);
            }
            let head = lines[start].trim();
            let head_rest = match head.split_once('?') {
                Some((_, r)) => r,
                None => head.split_once('.').map_or("", |(_, r)| r),
            };
            let rationale = body.join(" ");
            ChecklistAnswer {
                question: q.clone(),
                answer: last_yes_no(&format!("{head_rest} {rationale}")),
                rationale,
            }
        })
        .collect()
}

/// Edits of the `### Suggestions` block. Lines that do not parse become
/// warnings.
pub fn parse_suggestions(critique: &str, warnings: &mut Vec<String>) -> Vec<(String, Edit)> {
    let Ok(s) = extract_sections(critique, &[headings::SUGGESTIONS]) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for line in s[headings::SUGGESTIONS].lines() {
        let line = strip_marker(line);
        if line.is_empty() || line.starts_with(';') || line.starts_with("//") {
            continue;
        }
        match line.parse::<Edit>() {
            Ok(e) => out.push((line.to_string(), e)),
            Err(err) => warnings.push(format!("unrecognized suggestion `{line}`: {err}")),
        }
    }
    out
}

/// Validates and applies one edit to a task. `Err` leaves the task as is.
fn apply_task_edit(
    task: &mut TaskTriple,
    edit: &Edit,
    types: &TypeHierarchy,
    predicates: &[Predicate],
) -> Result<(), String> {
    let object = |t: &TaskTriple, n: &str| t.objects.iter().position(|o| o.name == n);
    let well_formed = |t: &TaskTriple, a: &Atom| -> Result<(), String> {
        let p = predicates
            .iter()
            .find(|p| p.name == a.predicate)
            .ok_or_else(|| format!("predicate `{}` is not in the vocabulary", a.predicate))?;
        if p.arity() != a.args.len() {
            return Err(format!("`{}` takes {} arguments", p.name, p.arity()));
        }
        if let Some(x) = a.args.iter().find(|x| object(t, x).is_none()) {
            return Err(format!("`{x}` is not a declared object"));
        }
        Ok(())
    };
    match edit {
        Edit::AddInit { atom } => {
            well_formed(task, atom)?;
            if task.init.contains(atom) {
                return Err(format!("{atom} is already in the initial state"));
            }
            task.init.push(atom.clone());
        }
        Edit::RemoveInit { atom } => {
            let i = task
                .init
                .iter()
                .position(|a| a == atom)
                .ok_or_else(|| format!("{atom} is not in the initial state"))?;
            task.init.remove(i);
        }
        Edit::AddGoal { literal } => {
            well_formed(task, &literal.atom)?;
            if task.goal.iter().any(|g| g.atom == literal.atom) {
                return Err(format!("the goal already mentions {}", literal.atom));
            }
            task.goal.push(literal.clone());
        }
        Edit::RemoveGoal { literal } => {
            let i = task
                .goal
                .iter()
                .position(|g| g == literal)
                .ok_or_else(|| format!("{literal} is not in the goal"))?;
            if task.goal.len() == 1 {
                return Err("the goal would become empty".into());
            }
            task.goal.remove(i);
        }
        Edit::AddObject { name, type_name } => {
            if object(task, name).is_some() {
                return Err(format!("object `{name}` already exists"));
            }
            if !types.contains(type_name) {
                return Err(format!("type `{type_name}` is not declared"));
            }
            task.objects
                .push(ObjectDecl::new(name.clone(), type_name.clone()));
        }
        Edit::RemoveObject { name } => {
            let i = object(task, name).ok_or_else(|| format!("object `{name}` does not exist"))?;
            let used = task
                .init
                .iter()
                .chain(task.goal.iter().map(|l| &l.atom))
                .any(|a| a.args.contains(name));
            if used {
                return Err(format!("object `{name}` is still referenced"));
            }
            task.objects.remove(i);
        }
        Edit::RetypeObject { name, type_name } => {
            let i = object(task, name).ok_or_else(|| format!("object `{name}` does not exist"))?;
            if !types.contains(type_name) {
                return Err(format!("type `{type_name}` is not declared"));
            }
            task.objects[i].type_name = type_name.clone();
        }
        _ => return Err("not a task edit".into()),
    }
    Ok(())
}

fn check_action_literal(d: &Domain, action: &str, l: &Literal) -> Result<(), String> {
    let a = d
        .action(action)
        .ok_or_else(|| format!("action `{action}` does not exist"))?;
    if let Some(v) = l.atom.args.iter().find(|v| a.param(v).is_none()) {
        return Err(format!("`{v}` is not a parameter of `{action}`"));
    }
    if l.atom.predicate == EQUALITY {
        return Ok(());
    }
    let p = d
        .predicate(&l.atom.predicate)
        .ok_or_else(|| format!("predicate `{}` is not declared", l.atom.predicate))?;
    if p.arity() != l.atom.args.len() {
        return Err(format!("`{}` takes {} arguments", p.name, p.arity()));
    }
    Ok(())
}

/// Validates and applies one edit to a domain. `Err` leaves it as is.
fn apply_domain_edit(d: &mut Domain, edit: &Edit) -> Result<(), String> {
    match edit {
        Edit::AddPredicate { signature } => {
            let p = parse_predicate_signature(signature).map_err(|e| e.to_string())?;
            if d.predicate(&p.name).is_some() {
                return Err(format!("predicate `{}` already exists", p.name));
            }
            let types = d.type_table();
            if let Some(t) = p.params.iter().find(|t| !types.is_declared(&t.type_name)) {
                return Err(format!("type `{}` is not declared", t.type_name));
            }
            d.predicates.push(p);
        }
        Edit::RemovePredicate { name } => {
            let i = d
                .predicates
                .iter()
                .position(|p| &p.name == name)
                .ok_or_else(|| format!("predicate `{name}` does not exist"))?;
            if d.actions
                .iter()
                .flat_map(|a| a.literals())
                .any(|l| &l.atom.predicate == name)
            {
                return Err(format!("predicate `{name}` is still used by an action"));
            }
            d.predicates.remove(i);
        }
        Edit::AddPrecondition { action, literal } => {
            check_action_literal(d, action, literal)?;
            let a = d.action_mut(action).expect("checked");
            if a.preconditions.iter().any(|l| l.atom == literal.atom) {
                return Err(format!(
                    "`{action}` already has a precondition on {}",
                    literal.atom
                ));
            }
            a.preconditions.push(literal.clone());
        }
        Edit::AddEffect { action, literal } => {
            check_action_literal(d, action, literal)?;
            let a = d.action_mut(action).expect("checked");
            if a.effects.iter().any(|l| l.atom == literal.atom) {
                return Err(format!(
                    "`{action}` already has an effect on {}",
                    literal.atom
                ));
            }
            a.effects.push(literal.clone());
        }
        Edit::RemovePrecondition { action, literal } | Edit::RemoveEffect { action, literal } => {
            let a = d
                .action_mut(action)
                .ok_or_else(|| format!("action `{action}` does not exist"))?;
            let list = if matches!(edit, Edit::RemovePrecondition { .. }) {
                &mut a.preconditions
            } else {
                &mut a.effects
            };
            let i = list
                .iter()
                .position(|l| l == literal)
                .ok_or_else(|| format!("`{action}` has no {literal}"))?;
            list.remove(i);
        }
        Edit::RetypeParam {
            action,
            param,
            type_name,
        } => {
            if !d.type_table().is_declared(type_name) {
                return Err(format!("type `{type_name}` is not declared"));
            }
            let a = d
                .action_mut(action)
                .ok_or_else(|| format!("action `{action}` does not exist"))?;
            let p = a
                .params
                .iter_mut()
                .find(|p| &p.name == param)
                .ok_or_else(|| format!("`{action}` has no parameter `{param}`"))?;
            p.type_name = type_name.clone();
        }
        _ => return Err("not a domain edit".into()),
    }
    Ok(())
}

/// Runs the gate over the suggestions and applies the surviving edits in
/// order. Edits that overlap an earlier one, or that fail to apply, are
/// skipped with a warning.
fn apply_all<M>(
    model: &mut M,
    suggestions: Vec<(String, Edit)>,
    gate: Option<&mut dyn ReviewGate>,
    warnings: &mut Vec<String>,
    mut apply: impl FnMut(&mut M, &Edit) -> Result<(), String>,
) -> Vec<SuggestionRecord> {
    let mut gate = gate;
    let mut targets = BTreeSet::new();
    let mut out = Vec::with_capacity(suggestions.len());
    for (text, edit) in suggestions {
        let skip = |reason: String, warnings: &mut Vec<String>| {
            warnings.push(format!("skipped `{text}`: {reason}"));
            SuggestionRecord {
                suggestion: text.clone(),
                outcome: Outcome::Skipped { reason },
            }
        };
        if !targets.insert(edit.target()) {
            out.push(skip("overlaps an earlier suggestion".into(), warnings));
            continue;
        }
        let (edit, replaced) = match gate.as_deref_mut().map(|g| g.review(&edit)) {
            None | Some(GateDecision::Accept) => (edit, false),
            Some(GateDecision::Reject) => {
                out.push(SuggestionRecord {
                    suggestion: text,
                    outcome: Outcome::Rejected,
                });
                continue;
            }
            Some(GateDecision::Replace(e)) => (e, true),
        };
        match apply(model, &edit) {
            Ok(()) => out.push(SuggestionRecord {
                suggestion: text.clone(),
                outcome: if replaced {
                    Outcome::Replaced {
                        with: edit.to_string(),
                    }
                } else {
                    Outcome::Applied
                },
            }),
            Err(reason) => out.push(skip(reason, warnings)),
        }
    }
    out
}

struct Critique {
    text: String,
    checklist: Vec<ChecklistAnswer>,
    verdict: Verdict,
}

fn critique(
    llm: &dyn LanguageModel,
    key: &str,
    template: &PromptTemplate,
    bindings: &Bindings,
    mode: FeedbackMode,
    gate: &mut Option<&mut dyn ReviewGate>,
) -> Result<Critique, FeedbackError> {
    let questions = checklist_questions(template.body());
    if questions.is_empty() {
        return Err(FeedbackError::MissingChecklist);
    }
    if mode != FeedbackMode::Llm && gate.is_none() {
        return Err(FeedbackError::NoGate(mode));
    }
    let prompt = template.render(bindings)?;
    let own = match mode {
        FeedbackMode::Human => gate.as_deref_mut().and_then(|g| g.critique(&prompt)),
        _ => None,
    };
    let text = match own {
        Some(t) => t,
        None => llm.complete(&CompletionRequest::new(key, prompt))?.text,
    };
    let checklist = parse_checklist(&text, &questions);
    let verdict = if checklist.iter().all(|a| a.answer == Answer::No) {
        Verdict::Accept
    } else {
        Verdict::Revise
    };
    Ok(Critique {
        text,
        checklist,
        verdict,
    })
}

fn review<M>(
    mode: FeedbackMode,
    c: Critique,
    model: &mut M,
    gate: Option<&mut dyn ReviewGate>,
    apply: impl FnMut(&mut M, &Edit) -> Result<(), String>,
) -> FeedbackReport {
    let mut warnings = Vec::new();
    let suggestions = parse_suggestions(&c.text, &mut warnings);
    let records = if c.verdict == Verdict::Accept {
        suggestions
            .into_iter()
            .map(|(s, _)| SuggestionRecord {
                suggestion: s,
                outcome: Outcome::Skipped {
                    reason: "verdict is accept".into(),
                },
            })
            .collect()
    } else {
        let gate = if mode == FeedbackMode::Llm {
            None
        } else {
            gate
        };
        apply_all(model, suggestions, gate, &mut warnings, apply)
    };
    FeedbackReport {
        source: mode,
        checklist: c.checklist,
        suggestions: records,
        verdict: c.verdict,
        warnings,
        diagnostics: Vec::new(),
        critique: c.text,
    }
}

/// Inputs of a task critique.
#[derive(Clone, Copy, Debug)]
pub struct TaskReview<'a> {
    pub problem_desc: &'a str,
    pub types: &'a TypeHierarchy,
    pub predicates: &'a [Predicate],
}

pub fn task_feedback(
    llm: &dyn LanguageModel,
    key: &str,
    template: &PromptTemplate,
    mode: FeedbackMode,
    ctx: &TaskReview<'_>,
    candidate: &TaskTriple,
    mut gate: Option<&mut dyn ReviewGate>,
) -> Result<(TaskTriple, FeedbackReport), FeedbackError> {
    let mut b = Bindings::new();
    b.insert("problem_desc", ctx.problem_desc.to_string());
    b.insert("types", ctx.types.render());
    b.insert("predicates", render_predicate_list(ctx.predicates));
    b.insert("llm_response", candidate.render_sections());
    let c = critique(llm, key, template, &b, mode, &mut gate)?;
    let mut revised = candidate.clone();
    let mut report = review(mode, c, &mut revised, gate, |t, e| {
        if !e.is_task_edit() {
            return Err("not a task edit".into());
        }
        apply_task_edit(t, e, ctx.types, ctx.predicates)
    });
    report.diagnostics = check_vocabulary(&revised, ctx.types, ctx.predicates);
    Ok((revised, report))
}

pub fn domain_feedback(
    llm: &dyn LanguageModel,
    key: &str,
    domain_desc: &str,
    template: &PromptTemplate,
    mode: FeedbackMode,
    candidate: &Domain,
    mut gate: Option<&mut dyn ReviewGate>,
) -> Result<(Domain, FeedbackReport), FeedbackError> {
    let mut b = Bindings::new();
    b.insert("domain_desc", domain_desc.to_string());
    b.insert("predicates", render_predicate_list(&candidate.predicates));
    let types: Vec<String> = candidate
        .types
        .iter()
        .map(|t| format!("- {} - {}", t.name, t.parent))
        .collect();
    b.insert("types", types.join("\n"));
    b.insert("llm_response", format_domain(candidate));
    let c = critique(llm, key, template, &b, mode, &mut gate)?;
    let mut revised = candidate.clone();
    let mut report = review(mode, c, &mut revised, gate, |d, e| {
        if e.is_task_edit() {
            return Err("not a domain edit".into());
        }
        apply_domain_edit(d, e)
    });
    report.diagnostics = check_domain(&revised);
    Ok((revised, report))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub round: usize,
    pub report: FeedbackReport,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refined<M> {
    pub model: M,
    pub transcript: Vec<Round>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RefineError<M, E> {
    #[error("no acceptance after {rounds} round(s)")]
    RoundsExhausted {
        rounds: usize,
        last: M,
        report: FeedbackReport,
        transcript: Vec<Round>,
    },
    #[error("max_rounds must be at least 1")]
    ZeroRounds,
    #[error("candidate construction failed: {0}")]
    Build(E),
    #[error("feedback round {round} failed: {error}")]
    Feedback { round: usize, error: E },
}

/// Builds a candidate, then alternates critique and revision until a round's
/// verdict is accept or `max_rounds` rounds have run. `feedback` gets the
/// current candidate and the 1-based round number.
#[allow(clippy::result_large_err)]
pub fn refine_until_accepted<M, E>(
    build: impl FnOnce() -> Result<M, E>,
    mut feedback: impl FnMut(&M, usize) -> Result<(M, FeedbackReport), E>,
    max_rounds: usize,
) -> Result<Refined<M>, RefineError<M, E>> {
    if max_rounds == 0 {
        return Err(RefineError::ZeroRounds);
    }
    let mut model = build().map_err(RefineError::Build)?;
    let mut transcript = Vec::new();
    for round in 1..=max_rounds {
        let (revised, report) =
            feedback(&model, round).map_err(|error| RefineError::Feedback { round, error })?;
        let accepted = report.verdict == Verdict::Accept;
        transcript.push(Round {
            round,
            report: report.clone(),
        });
        if accepted {
            return Ok(Refined { model, transcript });
        }
        model = revised;
        if round == max_rounds {
            return Err(RefineError::RoundsExhausted {
                rounds: round,
                last: model,
                report,
                transcript,
            });
        }
    }
    unreachable!("loop returns on the last round")
}
