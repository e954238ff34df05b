//! Domain construction: predicate extraction, per-action extraction and the
//! action-by-action loop with a growing predicate list.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{malformed, normalize_variable, ordered_map, strip_marker, strip_trailer, BuildError};
use crate::diagnostics::{check_domain, prune_predicates, Code, Diagnostic, FileKind};
use crate::llm::{
    extract_sections, headings, render_predicate_list, Bindings, CompletionRequest, LanguageModel,
    PromptTemplate,
};
use crate::pddl::{
    is_variable, parse_formula, parse_predicate_signature, Action, Atom, Domain, Literal,
    Predicate, Requirement, TypeDecl, TypedParam, EQUALITY, OBJECT,
};

#[derive(Deserialize)]
#[serde(untagged)]
enum Described {
    Text(String),
    Full {
        #[serde(default)]
        parent: Option<String>,
        #[serde(default, alias = "desc")]
        description: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NLAction {
    pub name: String,
    pub desc: String,
}

/// Action name → natural-language description, in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NLActionModel(pub Vec<NLAction>);

impl NLActionModel {
    pub fn new<I, N, D>(items: I) -> Self
    where
        I: IntoIterator<Item = (N, D)>,
        N: Into<String>,
        D: Into<String>,
    {
        NLActionModel(
            items
                .into_iter()
                .map(|(n, d)| NLAction {
                    name: normalize_name(&n.into()),
                    desc: d.into(),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, NLAction> {
        self.0.iter()
    }

    /// `- name: desc` lines.
    pub fn render(&self) -> String {
        let lines: Vec<String> = self
            .0
            .iter()
            .map(|a| format!("- {}: {}", a.name, a.desc))
            .collect();
        lines.join("\n")
    }
}

/// Lower-cased, whitespace → `_`.
fn normalize_name(n: &str) -> String {
    n.trim()
        .chars()
        .map(|c| {
            if c.is_whitespace() {
                '_'
            } else {
                c.to_ascii_lowercase()
            }
        })
        .collect()
}

impl Serialize for NLActionModel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        #[derive(Serialize)]
        struct Entry<'a> {
            desc: &'a str,
        }
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for a in &self.0 {
            m.serialize_entry(&a.name, &Entry { desc: &a.desc })?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for NLActionModel {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let items: Vec<(String, Described)> = ordered_map(de)?;
        Ok(NLActionModel::new(items.into_iter().map(|(n, d)| {
            let desc = match d {
                Described::Text(t) => t,
                Described::Full { description, .. } => description,
            };
            (n, desc)
        })))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeEntry {
    pub name: String,
    pub parent: String,
    pub description: String,
}

/// Type forest rooted at `object`, in declaration order. `object` itself is
/// implicit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeHierarchy(pub Vec<TypeEntry>);

impl TypeHierarchy {
    pub fn new(entries: Vec<TypeEntry>) -> Result<Self, BuildError> {
        let h = TypeHierarchy(entries);
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        let mut seen = BTreeSet::new();
        for e in &self.0 {
            if e.name == OBJECT {
                return Err(BuildError::InvalidHierarchy(
                    "`object` is the implicit root".into(),
                ));
            }
            if !seen.insert(e.name.as_str()) {
                return Err(BuildError::InvalidHierarchy(format!(
                    "type `{}` listed twice",
                    e.name
                )));
            }
        }
        for e in &self.0 {
            if e.parent != OBJECT && !seen.contains(e.parent.as_str()) {
                return Err(BuildError::InvalidHierarchy(format!(
                    "type `{}` has unknown parent `{}`",
                    e.name, e.parent
                )));
            }
        }
        let table = crate::pddl::TypeTable::from_decls(&self.decls());
        if let Some(t) = table.cyclic_types().first() {
            return Err(BuildError::InvalidHierarchy(format!(
                "type `{t}` is its own ancestor"
            )));
        }
        Ok(())
    }

    pub fn decls(&self) -> Vec<TypeDecl> {
        self.0
            .iter()
            .map(|e| TypeDecl {
                name: e.name.clone(),
                parent: e.parent.clone(),
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        name == OBJECT || self.0.iter().any(|e| e.name == name)
    }

    /// `- name: description` lines, with ` (subtype of parent)` for non-root
    /// parents.
    pub fn render(&self) -> String {
        if self.0.is_empty() {
            return String::from("- object");
        }
        let lines: Vec<String> = self
            .0
            .iter()
            .map(|e| {
                let mut l = format!("- {}", e.name);
                if e.parent != OBJECT {
                    l.push_str(&format!(" (subtype of {})", e.parent));
                }
                if !e.description.is_empty() {
                    l.push_str(": ");
                    l.push_str(&e.description);
                }
                l
            })
            .collect();
        lines.join("\n")
    }
}

impl Serialize for TypeHierarchy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        #[derive(Serialize)]
        struct Entry<'a> {
            parent: &'a str,
            description: &'a str,
        }
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for e in &self.0 {
            m.serialize_entry(
                &e.name,
                &Entry {
                    parent: &e.parent,
                    description: &e.description,
                },
            )?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for TypeHierarchy {
    /// Accepts `{"name": "description"}` or
    /// `{"name": {"parent": "p", "description": "d"}}` entries.
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let items: Vec<(String, Described)> = ordered_map(de)?;
        let entries = items
            .into_iter()
            .map(|(n, d)| {
                let (parent, description) = match d {
                    Described::Text(t) => (None, t),
                    Described::Full {
                        parent,
                        description,
                    } => (parent, description),
                };
                TypeEntry {
                    name: normalize_name(&n),
                    parent: parent.map_or_else(|| OBJECT.to_string(), |p| normalize_name(&p)),
                    description,
                }
            })
            .collect();
        TypeHierarchy::new(entries).map_err(serde::de::Error::custom)
    }
}

/// Fixed inputs shared by every prompt of one domain build.
#[derive(Clone, Copy, Debug)]
pub struct DomainContext<'a> {
    pub domain_desc: &'a str,
    pub types: &'a TypeHierarchy,
}

impl DomainContext<'_> {
    fn bindings(&self) -> Bindings {
        let mut b = Bindings::new();
        b.insert("domain_desc", self.domain_desc.to_string());
        b.insert("types", self.types.render());
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateExtraction {
    pub predicates: Vec<Predicate>,
    pub raw: String,
    /// One entry per skipped line.
    pub warnings: Vec<String>,
}

/// Parses a `### New Predicates` block. Malformed lines are skipped with a
/// warning; same name and arity keeps the first.
pub fn parse_predicate_block(block: &str, warnings: &mut Vec<String>) -> Vec<Predicate> {
    let mut out: Vec<Predicate> = Vec::new();
    for line in block.lines() {
        let line = strip_marker(line);
        if line.is_empty() {
            continue;
        }
        match parse_predicate_signature(line) {
            Ok(p) => {
                if !out
                    .iter()
                    .any(|q| q.name == p.name && q.arity() == p.arity())
                {
                    out.push(p);
                }
            }
            Err(e) => warnings.push(e.to_string()),
        }
    }
    out
}

pub fn extract_predicates(
    llm: &dyn LanguageModel,
    key: &str,
    ctx: &DomainContext<'_>,
    template: &PromptTemplate,
    nl_actions: &NLActionModel,
) -> Result<PredicateExtraction, BuildError> {
    let mut b = ctx.bindings();
    b.insert("action_list", nl_actions.render());
    b.insert("predicates", render_predicate_list(&[]));
    let prompt = template.render(&b)?;
    let completion = llm.complete(&CompletionRequest::new(key, prompt))?;
    let sections = extract_sections(&completion.text, &[headings::NEW_PREDICATES])?;
    let mut warnings = Vec::new();
    let predicates = parse_predicate_block(&sections[headings::NEW_PREDICATES], &mut warnings);
    Ok(PredicateExtraction {
        predicates,
        raw: completion.text,
        warnings,
    })
}

/// One action to extract against the current predicate list.
#[derive(Clone, Copy, Debug)]
pub struct ActionRequest<'a> {
    pub name: &'a str,
    pub desc: &'a str,
    /// Actions already extracted in this sweep.
    pub prior: &'a [Action],
    pub predicates: &'a [Predicate],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionExtraction {
    pub action: Action,
    pub new_predicates: Vec<Predicate>,
    pub raw: String,
    pub diagnostics: Vec<Diagnostic>,
    pub warnings: Vec<String>,
}

fn render_actions(actions: &[Action]) -> String {
    if actions.is_empty() {
        return String::from("\nNo action has been defined yet");
    }
    let mut out = String::new();
    for (i, a) in actions.iter().enumerate() {
        let params: Vec<String> = a
            .params
            .iter()
            .map(|p| format!("{} - {}", p.name, p.type_name))
            .collect();
        out.push_str(&format!("\n{}. {} ({})", i + 1, a.name, params.join(" ")));
    }
    out
}

fn parse_params(block: &str) -> Result<Vec<TypedParam>, BuildError> {
    let mut params: Vec<TypedParam> = Vec::new();
    for line in block.lines() {
        let line = strip_trailer(strip_marker(line)).replace(['(', ')', ','], " ");
        let toks: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
        let mut pending = 0usize;
        let mut i = 0;
        while i < toks.len() {
            if toks[i] == "-" {
                let ty = toks.get(i + 1).ok_or_else(|| {
                    malformed(
                        headings::PARAMETERS,
                        format!("`-` without a type in `{line}`"),
                    )
                })?;
                let n = params.len();
                for p in &mut params[n - pending..] {
                    p.type_name = ty.clone();
                }
                pending = 0;
                i += 2;
                continue;
            }
            let name = if is_variable(&toks[i]) {
                toks[i].clone()
            } else {
                format!("?{}", toks[i])
            };
            if params.iter().any(|p| p.name == name) {
                return Err(malformed(
                    headings::PARAMETERS,
                    format!("parameter `{name}` repeats"),
                ));
            }
            params.push(TypedParam::new(name, OBJECT));
            pending += 1;
            i += 1;
        }
    }
    Ok(params)
}

fn parse_literals(
    section: &str,
    block: &str,
    params: &[String],
) -> Result<Vec<Literal>, BuildError> {
    if block.trim().is_empty() {
        return Ok(Vec::new());
    }
    let lits = parse_formula(block).map_err(|e| malformed(section, e))?;
    Ok(lits
        .into_iter()
        .map(|l| Literal {
            positive: l.positive,
            atom: Atom {
                args: l
                    .atom
                    .args
                    .iter()
                    .map(|a| normalize_variable(a, params))
                    .collect(),
                predicate: l.atom.predicate,
            },
        })
        .collect())
}

/// Unbound-variable diagnostics for a freshly extracted action.
fn unbound_diagnostics(a: &Action) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (section, lits) in [("precondition", &a.preconditions), ("effect", &a.effects)] {
        let mut seen = BTreeSet::new();
        for (i, l) in lits.iter().enumerate() {
            for v in &l.atom.args {
                if a.param(v).is_none() && seen.insert(v.clone()) {
                    out.push(
                        Diagnostic::new(
                            Code::UnboundVariable,
                            FileKind::Domain,
                            format!("action[{}]/{section}/{i}", a.name),
                            format!("`{v}` in {} is not a parameter of `{}`", l.atom, a.name),
                        )
                        .with_suggestion(format!("add `{v}` to the parameters of `{}`", a.name)),
                    );
                }
            }
        }
    }
    out
}

pub fn extract_action(
    llm: &dyn LanguageModel,
    key: &str,
    ctx: &DomainContext<'_>,
    template: &PromptTemplate,
    req: &ActionRequest<'_>,
) -> Result<ActionExtraction, BuildError> {
    let mut b = ctx.bindings();
    b.insert("predicates", render_predicate_list(req.predicates));
    b.insert("action_name", req.name.to_string());
    b.insert("action_desc", req.desc.to_string());
    b.insert("action_list", render_actions(req.prior));
    let prompt = template.render(&b)?;
    let completion = llm.complete(&CompletionRequest::new(key, prompt))?;
    let s = extract_sections(
        &completion.text,
        &[
            headings::PARAMETERS,
            headings::PRECONDITIONS,
            headings::EFFECTS,
            headings::NEW_PREDICATES,
        ],
    )?;
    let params = parse_params(&s[headings::PARAMETERS])?;
    let names: Vec<String> = params.iter().map(|p| p.name.clone()).collect();
    let action = Action {
        name: normalize_name(req.name),
        preconditions: parse_literals(
            headings::PRECONDITIONS,
            &s[headings::PRECONDITIONS],
            &names,
        )?,
        effects: parse_literals(headings::EFFECTS, &s[headings::EFFECTS], &names)?,
        params,
    };
    let mut warnings = Vec::new();
    let new_predicates = parse_predicate_block(&s[headings::NEW_PREDICATES], &mut warnings);
    Ok(ActionExtraction {
        diagnostics: unbound_diagnostics(&action),
        action,
        new_predicates,
        raw: completion.text,
        warnings,
    })
}

/// State after one full pass over the action model, post-prune.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sweep {
    pub predicates: Vec<Predicate>,
    pub actions: Vec<Action>,
    /// Predicate count before pruning.
    pub candidates: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbaOutcome {
    pub predicates: Vec<Predicate>,
    pub actions: Vec<Action>,
    pub sweeps: Vec<Sweep>,
    pub diagnostics: Vec<Diagnostic>,
    pub warnings: Vec<String>,
}

/// Fixture key of one action extraction: `<prefix>/<action>/round<sweep>`.
pub fn action_key(prefix: &str, action: &str, sweep: usize) -> String {
    format!("{prefix}/{action}/round{sweep}")
}

/// Runs `max_iter` sweeps. Each sweep re-extracts every action in order
/// against the accumulated predicate list, appends the new predicates, and
/// finally prunes the list to what the sweep's actions use.
pub fn build_domain_action_by_action(
    llm: &dyn LanguageModel,
    key_prefix: &str,
    action_model: &NLActionModel,
    ctx: &DomainContext<'_>,
    template: &PromptTemplate,
    max_iter: usize,
) -> Result<AbaOutcome, BuildError> {
    if max_iter == 0 {
        return Err(BuildError::ZeroIterations);
    }
    let mut preds: Vec<Predicate> = Vec::new();
    let mut actions: Vec<Action> = Vec::new();
    let mut sweeps = Vec::with_capacity(max_iter);
    let mut diagnostics = Vec::new();
    let mut warnings = Vec::new();
    for sweep in 1..=max_iter {
        actions = Vec::with_capacity(action_model.len());
        diagnostics.clear();
        for nl in action_model.iter() {
            let req = ActionRequest {
                name: &nl.name,
                desc: &nl.desc,
                prior: &actions,
                predicates: &preds,
            };
            let key = action_key(key_prefix, &nl.name, sweep);
            let out = extract_action(llm, &key, ctx, template, &req).map_err(|e| {
                BuildError::InSweep {
                    sweep,
                    action: nl.name.clone(),
                    source: alloc::boxed::Box::new(e),
                }
            })?;
            for p in out.new_predicates {
                if !preds
                    .iter()
                    .any(|q| q.name == p.name && q.arity() == p.arity())
                {
                    preds.push(p);
                }
            }
            warnings.extend(
                out.warnings
                    .into_iter()
                    .map(|w| format!("sweep {sweep}, {}: {w}", nl.name)),
            );
            diagnostics.extend(out.diagnostics);
            actions.push(out.action);
        }
        let candidates = preds.len();
        preds = prune_predicates(&preds, &actions);
        sweeps.push(Sweep {
            predicates: preds.clone(),
            actions: actions.clone(),
            candidates,
        });
    }
    Ok(AbaOutcome {
        predicates: preds,
        actions,
        sweeps,
        diagnostics,
        warnings,
    })
}

/// `:strips`, plus `:typing` when there are types and the other flags when
/// an action needs them.
pub fn infer_requirements(types: &TypeHierarchy, actions: &[Action]) -> Vec<Requirement> {
    let mut r = alloc::vec![Requirement::Strips];
    if !types.is_empty() {
        r.push(Requirement::Typing);
    }
    if actions
        .iter()
        .flat_map(|a| &a.preconditions)
        .any(|l| !l.positive)
    {
        r.push(Requirement::NegativePreconditions);
    }
    if actions
        .iter()
        .flat_map(Action::literals)
        .any(|l| l.atom.predicate == EQUALITY)
    {
        r.push(Requirement::Equality);
    }
    r
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssembledDomain {
    pub domain: Domain,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn assemble_domain(
    name: &str,
    requirements: Vec<Requirement>,
    types: &TypeHierarchy,
    predicates: Vec<Predicate>,
    actions: Vec<Action>,
) -> Result<AssembledDomain, BuildError> {
    let dup = |kind: &str, name: &str| BuildError::DuplicateName {
        kind: kind.into(),
        name: name.into(),
    };
    let mut seen = BTreeSet::new();
    for a in &actions {
        if !seen.insert(a.name.as_str()) {
            return Err(dup("action", &a.name));
        }
    }
    let mut seen = BTreeSet::new();
    for p in &predicates {
        if !seen.insert(p.name.as_str()) {
            return Err(dup("predicate", &p.name));
        }
    }
    let mut domain = Domain::new(normalize_name(name));
    domain.requirements = requirements;
    domain.types = types.decls();
    domain.predicates = predicates;
    domain.actions = actions;
    let diagnostics = check_domain(&domain);
    Ok(AssembledDomain {
        domain,
        diagnostics,
    })
}
