//! Task extraction against a fixed predicate vocabulary.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::domain::TypeHierarchy;
use super::{malformed, paren_groups, strip_marker, strip_trailer, BuildError};
use crate::diagnostics::{check_problem, Code, Diagnostic, FileKind};
use crate::llm::{
    extract_sections, headings, render_predicate_list, Bindings, CompletionRequest, LanguageModel,
    PromptTemplate,
};
use crate::pddl::{
    format_goal, format_initial, format_objects, generate_task, parse_formula, Atom, Domain,
    Literal, ObjectDecl, Predicate, Problem, OBJECT,
};

/// Objects, initial atoms and goal literals of one task.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTriple {
    pub objects: Vec<ObjectDecl>,
    pub init: Vec<Atom>,
    pub goal: Vec<Literal>,
}

impl TaskTriple {
    pub fn to_problem(&self, domain_name: &str, problem_name: &str) -> Problem {
        Problem {
            name: problem_name.to_string(),
            domain_name: domain_name.to_string(),
            objects: self.objects.clone(),
            init: self.init.clone(),
            goal: self.goal.clone(),
        }
    }

    pub fn from_problem(p: &Problem) -> Self {
        TaskTriple {
            objects: p.objects.clone(),
            init: p.init.clone(),
            goal: p.goal.clone(),
        }
    }

    /// Problem file text in the five-section layout.
    pub fn generate(&self, domain_name: &str, problem_name: &str) -> String {
        generate_task(
            domain_name,
            problem_name,
            &format_objects(&self.objects),
            &format_initial(&self.init),
            &format_goal(&self.goal),
        )
    }

    /// The triple as `### Objects` / `### Initial` / `### Goal` sections,
    /// the same shape the extraction prompt asks for.
    pub fn render_sections(&self) -> String {
        format!(
            "### Objects\n```\n{}\n```\n### Initial\n```\n{}\n```\n### Goal\n```\n{}\n```\n",
            format_objects(&self.objects),
            format_initial(&self.init),
            format_goal(&self.goal)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskExtraction {
    pub task: TaskTriple,
    pub raw: String,
    /// Vocabulary findings; the triple is returned regardless.
    pub diagnostics: Vec<Diagnostic>,
    pub warnings: Vec<String>,
}

pub fn parse_objects(block: &str) -> Result<Vec<ObjectDecl>, BuildError> {
    let mut out: Vec<ObjectDecl> = Vec::new();
    for line in block.lines() {
        let line = strip_trailer(strip_marker(line)).replace(['(', ')', ','], " ");
        let toks: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
        let mut pending = 0usize;
        let mut i = 0;
        while i < toks.len() {
            if toks[i] == "-" {
                let ty = toks.get(i + 1).ok_or_else(|| {
                    malformed(headings::OBJECTS, format!("`-` without a type in `{line}`"))
                })?;
                let n = out.len();
                for o in &mut out[n - pending..] {
                    o.type_name = ty.clone();
                }
                pending = 0;
                i += 2;
                continue;
            }
            out.push(ObjectDecl::new(toks[i].clone(), OBJECT));
            pending += 1;
            i += 1;
        }
    }
    Ok(out)
}

fn parse_groups(section: &str, block: &str) -> Result<Vec<Literal>, BuildError> {
    let mut lits = Vec::new();
    for g in paren_groups(block).map_err(|e| malformed(section, e))? {
        lits.extend(parse_formula(&g).map_err(|e| malformed(section, e))?);
    }
    Ok(lits)
}

/// Positive atoms of an `### Initial` block. Negated literals are dropped
/// (closed world) and reported in `warnings`.
pub fn parse_initial(block: &str, warnings: &mut Vec<String>) -> Result<Vec<Atom>, BuildError> {
    let mut out: Vec<Atom> = Vec::new();
    for l in parse_groups(headings::INITIAL, block)? {
        if !l.positive {
            warnings.push(format!("dropped negative initial literal {l}"));
        } else if !out.contains(&l.atom) {
            out.push(l.atom);
        }
    }
    Ok(out)
}

pub fn parse_goal(block: &str) -> Result<Vec<Literal>, BuildError> {
    let mut out: Vec<Literal> = Vec::new();
    for l in parse_groups(headings::GOAL, block)? {
        if !out.contains(&l) {
            out.push(l);
        }
    }
    if out.is_empty() {
        return Err(BuildError::EmptyGoal);
    }
    Ok(out)
}

/// Findings for `task` against a bare vocabulary: out-of-vocabulary
/// predicates, arity and object errors.
pub fn check_vocabulary(
    task: &TaskTriple,
    types: &TypeHierarchy,
    predicates: &[Predicate],
) -> Vec<Diagnostic> {
    let mut d = Domain::new("vocabulary");
    d.types = types.decls();
    d.predicates = predicates.to_vec();
    let mut out = Vec::new();
    let atoms = task
        .init
        .iter()
        .enumerate()
        .map(|(i, a)| (format!("init/{i}"), a))
        .chain(
            task.goal
                .iter()
                .enumerate()
                .map(|(i, l)| (format!("goal/{i}"), &l.atom)),
        );
    for (path, a) in atoms {
        if d.predicate(&a.predicate).is_none() {
            out.push(
                Diagnostic::new(
                    Code::UndeclaredPredicate,
                    FileKind::Problem,
                    path,
                    format!(
                        "predicate `{}` in {a} is not in the vocabulary",
                        a.predicate
                    ),
                )
                .with_suggestion("use a declared predicate or extend the domain"),
            );
        }
    }
    out.extend(check_problem(&d, &task.to_problem("vocabulary", "task")));
    out
}

pub fn extract_task(
    llm: &dyn LanguageModel,
    key: &str,
    problem_desc: &str,
    template: &PromptTemplate,
    types: &TypeHierarchy,
    predicates: &[Predicate],
) -> Result<TaskExtraction, BuildError> {
    if predicates.is_empty() {
        return Err(BuildError::EmptyVocabulary);
    }
    let mut b = Bindings::new();
    b.insert("problem_desc", problem_desc.to_string());
    b.insert("types", types.render());
    b.insert("predicates", render_predicate_list(predicates));
    let prompt = template.render(&b)?;
    let completion = llm.complete(&CompletionRequest::new(key, prompt))?;
    let s = extract_sections(
        &completion.text,
        &[headings::OBJECTS, headings::INITIAL, headings::GOAL],
    )?;
    let mut warnings = Vec::new();
    let task = TaskTriple {
        objects: parse_objects(&s[headings::OBJECTS])?,
        init: parse_initial(&s[headings::INITIAL], &mut warnings)?,
        goal: parse_goal(&s[headings::GOAL])?,
    };
    let diagnostics = check_vocabulary(&task, types, predicates);
    Ok(TaskExtraction {
        task,
        raw: completion.text,
        diagnostics,
        warnings,
    })
}
