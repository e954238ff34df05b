//! Static checks over domains and problems with stable diagnostic codes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{ground, reachable_atoms};
use crate::pddl::{
    is_variable, Action, Atom, Domain, Literal, Predicate, Problem, SourceMap, TypeTable, EQUALITY,
    OBJECT,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Code {
    UndeclaredPredicate,
    ArityMismatch,
    TypeError,
    UnboundVariable,
    UnusedPredicate,
    UnknownObjectType,
    UnreachableGoalAtom,
    PredicateOnlyInProblem,
    ContradictoryEffect,
    DuplicateName,
}

impl Code {
    pub const ALL: [Code; 10] = [
        Code::UndeclaredPredicate,
        Code::ArityMismatch,
        Code::TypeError,
        Code::UnboundVariable,
        Code::UnusedPredicate,
        Code::UnknownObjectType,
        Code::UnreachableGoalAtom,
        Code::PredicateOnlyInProblem,
        Code::ContradictoryEffect,
        Code::DuplicateName,
    ];

    /// Default severity. The two over-approximating checks only warn.
    pub fn severity(self) -> Severity {
        match self {
            Code::UnusedPredicate | Code::UnreachableGoalAtom => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Code::UndeclaredPredicate => "UndeclaredPredicate",
            Code::ArityMismatch => "ArityMismatch",
            Code::TypeError => "TypeError",
            Code::UnboundVariable => "UnboundVariable",
            Code::UnusedPredicate => "UnusedPredicate",
            Code::UnknownObjectType => "UnknownObjectType",
            Code::UnreachableGoalAtom => "UnreachableGoalAtom",
            Code::PredicateOnlyInProblem => "PredicateOnlyInProblem",
            Code::ContradictoryEffect => "ContradictoryEffect",
            Code::DuplicateName => "DuplicateName",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileKind {
    Domain,
    Problem,
}

/// File kind plus an element path such as `action[stack]/effect/2`; `line`
/// is filled in from a [`SourceMap`] when the source text is at hand.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub file: FileKind,
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub location: Location,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
}

impl Diagnostic {
    pub fn new(
        code: Code,
        file: FileKind,
        path: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Diagnostic {
            code,
            severity: code.severity(),
            location: Location {
                file,
                path: path.into(),
                line: None,
            },
            message: message.into(),
            suggestion: None,
        }
    }

    pub fn with_suggestion(mut self, s: impl Into<String>) -> Self {
        self.suggestion = Some(s.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}[{}] {}: {}",
            self.severity, self.code, self.location.path, self.message
        )?;
        if let Some(s) = &self.suggestion {
            write!(f, " (hint: {s})")?;
        }
        Ok(())
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Deny-warnings policy: every warning becomes an error.
pub fn promote_warnings(diags: &mut [Diagnostic]) {
    for d in diags {
        d.severity = Severity::Error;
    }
}

/// Fills `location.line` for diagnostics of `file` from `map`.
pub fn resolve_lines(diags: &mut [Diagnostic], file: FileKind, map: &SourceMap) {
    for d in diags.iter_mut().filter(|d| d.location.file == file) {
        d.location.line = map.line_of(&d.location.path);
    }
}

fn signature(p: &Predicate) -> String {
    p.signature()
}

fn used_predicates(actions: &[Action]) -> BTreeSet<&str> {
    actions
        .iter()
        .flat_map(Action::literals)
        .map(|l| l.atom.predicate.as_str())
        .collect()
}

struct Sink {
    out: Vec<Diagnostic>,
    file: FileKind,
}

impl Sink {
    fn push(&mut self, code: Code, path: impl Into<String>, message: String) -> &mut Diagnostic {
        self.out
            .push(Diagnostic::new(code, self.file, path, message));
        self.out.last_mut().expect("just pushed")
    }

    fn hint(&mut self, code: Code, path: impl Into<String>, message: String, hint: String) {
        self.push(code, path, message).suggestion = Some(hint);
    }
}

/// Domain findings in declaration order: types, predicates, then each action
/// (parameters, preconditions, effects).
pub fn check_domain(d: &Domain) -> Vec<Diagnostic> {
    let types = d.type_table();
    let mut sink = Sink {
        out: Vec::new(),
        file: FileKind::Domain,
    };

    let mut seen_types = BTreeSet::new();
    let cyclic = types.cyclic_types();
    for t in &d.types {
        let path = format!("type[{}]", t.name);
        if !seen_types.insert(t.name.as_str()) {
            sink.push(
                Code::DuplicateName,
                &path,
                format!("type `{}` is declared twice", t.name),
            );
        }
        if cyclic.contains(&t.name) {
            sink.hint(
                Code::TypeError,
                &path,
                format!("type `{}` is its own ancestor", t.name),
                format!("make `{}` a subtype of `{OBJECT}`", t.name),
            );
        }
    }

    let used = used_predicates(&d.actions);
    let mut seen_preds = BTreeSet::new();
    for p in &d.predicates {
        let path = format!("predicate[{}]", p.name);
        if !seen_preds.insert(p.name.as_str()) {
            sink.push(
                Code::DuplicateName,
                &path,
                format!("predicate `{}` is declared twice", p.name),
            );
        }
        let mut seen_params = BTreeSet::new();
        for param in p.params.iter() {
            if !seen_params.insert(param.name.as_str()) {
                sink.push(
                    Code::DuplicateName,
                    &path,
                    format!("parameter `{}` repeats in `{}`", param.name, p.name),
                );
            }
            undeclared_type(&mut sink, &types, &path, &param.name, &param.type_name);
        }
        if !used.contains(p.name.as_str()) {
            sink.hint(
                Code::UnusedPredicate,
                &path,
                format!("predicate `{}` is not used by any action", p.name),
                "remove it or reference it in an action".to_string(),
            );
        }
    }

    let mut seen_actions = BTreeSet::new();
    for a in &d.actions {
        let base = format!("action[{}]", a.name);
        if !seen_actions.insert(a.name.as_str()) {
            sink.push(
                Code::DuplicateName,
                &base,
                format!("action `{}` is declared twice", a.name),
            );
        }
        let ppath = format!("{base}/parameters");
        let mut seen_params = BTreeSet::new();
        for param in &a.params {
            if !seen_params.insert(param.name.as_str()) {
                sink.push(
                    Code::DuplicateName,
                    &ppath,
                    format!("parameter `{}` repeats in `{}`", param.name, a.name),
                );
            }
            undeclared_type(&mut sink, &types, &ppath, &param.name, &param.type_name);
        }
        let mut unbound_seen = BTreeSet::new();
        for (section, lits) in [("precondition", &a.preconditions), ("effect", &a.effects)] {
            for (i, lit) in lits.iter().enumerate() {
                let path = format!("{base}/{section}/{i}");
                check_action_atom(&mut sink, d, &types, a, &lit.atom, &path, &mut unbound_seen);
            }
        }
        for (i, lit) in a.effects.iter().enumerate() {
            if lit.positive
                && a.effects[..i]
                    .iter()
                    .chain(&a.effects[i + 1..])
                    .any(|o| !o.positive && o.atom == lit.atom)
            {
                sink.hint(
                    Code::ContradictoryEffect,
                    format!("{base}/effect/{i}"),
                    format!("`{}` both adds and deletes {}", a.name, lit.atom),
                    "keep only one of the two effects".to_string(),
                );
            }
        }
    }
    sink.out
}

fn undeclared_type(sink: &mut Sink, types: &TypeTable, path: &str, what: &str, t: &str) {
    if !types.is_declared(t) {
        sink.hint(
            Code::TypeError,
            path,
            format!("`{what}` has undeclared type `{t}`"),
            format!("declare `{t}` under :types"),
        );
    }
}

fn check_action_atom(
    sink: &mut Sink,
    d: &Domain,
    types: &TypeTable,
    a: &Action,
    atom: &Atom,
    path: &str,
    unbound_seen: &mut BTreeSet<String>,
) {
    for v in &atom.args {
        if a.param(v).is_none() && unbound_seen.insert(v.clone()) {
            let what = if is_variable(v) {
                "variable"
            } else {
                "constant"
            };
            sink.hint(
                Code::UnboundVariable,
                path,
                format!("{what} `{v}` in {atom} is not a parameter of `{}`", a.name),
                format!("add `{v}` to the parameters of `{}`", a.name),
            );
        }
    }
    if atom.predicate == EQUALITY {
        return;
    }
    let Some(p) = d.predicate(&atom.predicate) else {
        sink.hint(
            Code::UndeclaredPredicate,
            path,
            format!("predicate `{}` is not declared", atom.predicate),
            format!("declare `{}` under :predicates", atom.predicate),
        );
        return;
    };
    if p.arity() != atom.args.len() {
        sink.hint(
            Code::ArityMismatch,
            path,
            format!(
                "{atom} has {} arguments, `{}` takes {}",
                atom.args.len(),
                p.name,
                p.arity()
            ),
            format!("declared as {}", signature(p)),
        );
        return;
    }
    for (v, decl) in atom.args.iter().zip(p.params.iter()) {
        let Some(param) = a.param(v) else { continue };
        if types.is_declared(&param.type_name)
            && types.is_declared(&decl.type_name)
            && !types.is_subtype(&param.type_name, &decl.type_name)
        {
            sink.hint(
                Code::TypeError,
                path,
                format!(
                    "`{v}` is a `{}` but `{}` expects a `{}` here",
                    param.type_name, p.name, decl.type_name
                ),
                format!("retype `{v}` as `{}`", decl.type_name),
            );
        }
    }
}

/// Objects, init atoms and goal literals against the domain's vocabulary.
/// Atoms over predicates the domain lacks are left to [`cross_check`].
/// Objects typed as the root `object` are accepted for any parameter type.
pub fn check_problem(d: &Domain, p: &Problem) -> Vec<Diagnostic> {
    let types = d.type_table();
    let mut sink = Sink {
        out: Vec::new(),
        file: FileKind::Problem,
    };
    let mut objects: BTreeMap<&str, &str> = BTreeMap::new();
    for o in &p.objects {
        let path = format!("object[{}]", o.name);
        if objects.insert(&o.name, &o.type_name).is_some() {
            sink.push(
                Code::DuplicateName,
                &path,
                format!("object `{}` is declared twice", o.name),
            );
        }
        if !types.is_declared(&o.type_name) {
            sink.hint(
                Code::UnknownObjectType,
                &path,
                format!("object `{}` has undeclared type `{}`", o.name, o.type_name),
                format!(
                    "declare `{}` in the domain or retype the object",
                    o.type_name
                ),
            );
        }
    }
    for (i, a) in p.init.iter().enumerate() {
        check_ground_atom(&mut sink, d, &types, &objects, a, &format!("init/{i}"));
    }
    for (i, l) in p.goal.iter().enumerate() {
        check_ground_atom(
            &mut sink,
            d,
            &types,
            &objects,
            &l.atom,
            &format!("goal/{i}"),
        );
    }
    sink.out
}

fn check_ground_atom(
    sink: &mut Sink,
    d: &Domain,
    types: &TypeTable,
    objects: &BTreeMap<&str, &str>,
    atom: &Atom,
    path: &str,
) {
    let decl = d.predicate(&atom.predicate);
    if let Some(p) = decl {
        if p.arity() != atom.args.len() {
            sink.hint(
                Code::ArityMismatch,
                path,
                format!(
                    "{atom} has {} arguments, `{}` takes {}",
                    atom.args.len(),
                    p.name,
                    p.arity()
                ),
                format!("declared as {}", signature(p)),
            );
            return;
        }
    }
    for (k, arg) in atom.args.iter().enumerate() {
        let Some(&t) = objects.get(arg.as_str()) else {
            sink.hint(
                Code::UnknownObjectType,
                path,
                format!("`{arg}` in {atom} is not a declared object"),
                format!("add `{arg}` under :objects"),
            );
            continue;
        };
        let Some(expected) = decl
            .and_then(|p| p.params.0.get(k))
            .map(|x| x.type_name.as_str())
        else {
            continue;
        };
        if t != OBJECT && types.is_declared(t) && !types.is_subtype(t, expected) {
            sink.hint(
                Code::TypeError,
                path,
                format!(
                    "`{arg}` is a `{t}` but `{}` expects a `{expected}`",
                    atom.predicate
                ),
                format!("retype `{arg}` as `{expected}`"),
            );
        }
    }
}

/// Problem atoms over predicates the domain never declares, and goal atoms
/// that fail delete-relaxed reachability.
pub fn cross_check(d: &Domain, p: &Problem) -> Vec<Diagnostic> {
    let mut sink = Sink {
        out: Vec::new(),
        file: FileKind::Problem,
    };
    let mut reported = BTreeSet::new();
    let atoms = p
        .init
        .iter()
        .enumerate()
        .map(|(i, a)| (format!("init/{i}"), a))
        .chain(
            p.goal
                .iter()
                .enumerate()
                .map(|(i, l)| (format!("goal/{i}"), &l.atom)),
        );
    for (path, a) in atoms {
        if d.predicate(&a.predicate).is_none() && reported.insert(a.predicate.clone()) {
            sink.hint(
                Code::PredicateOnlyInProblem,
                path,
                format!(
                    "predicate `{}` appears in the problem but not in the domain",
                    a.predicate
                ),
                format!("declare `{}` in the domain or drop the atom", a.predicate),
            );
        }
    }
    if let Ok(task) = ground(d, p) {
        let reachable = reachable_atoms(&task);
        for (i, l) in p.goal.iter().enumerate() {
            if l.positive
                && d.predicate(&l.atom.predicate).is_some()
                && !reachable.contains(&l.atom)
            {
                sink.hint(
                    Code::UnreachableGoalAtom,
                    format!("goal/{i}"),
                    format!("goal atom {} is unreachable even ignoring deletes", l.atom),
                    format!("check which action should add `{}`", l.atom.predicate),
                );
            }
        }
    }
    sink.out
}

/// All three checks, domain findings first.
pub fn check_all(d: &Domain, p: &Problem) -> Vec<Diagnostic> {
    let mut out = check_domain(d);
    out.extend(check_problem(d, p));
    out.extend(cross_check(d, p));
    out
}

/// Keeps the predicates some action mentions. Position follows the first
/// occurrence of each name; among same-name entries the one with the highest
/// arity wins, the later one on ties.
pub fn prune_predicates(preds: &[Predicate], actions: &[Action]) -> Vec<Predicate> {
    let used = used_predicates(actions);
    let mut order: Vec<&str> = Vec::new();
    let mut chosen: BTreeMap<&str, &Predicate> = BTreeMap::new();
    for p in preds {
        if !used.contains(p.name.as_str()) {
            continue;
        }
        match chosen.get(p.name.as_str()) {
            None => {
                order.push(&p.name);
                chosen.insert(&p.name, p);
            }
            Some(prev) if p.arity() >= prev.arity() => {
                chosen.insert(&p.name, p);
            }
            Some(_) => {}
        }
    }
    order.into_iter().map(|n| chosen[n].clone()).collect()
}

/// Literals of `lits` whose predicate is not in `preds`, for vocabulary checks
/// on extracted tasks.
pub fn out_of_vocabulary<'a>(
    lits: impl IntoIterator<Item = &'a Literal>,
    preds: &[Predicate],
) -> Vec<&'a Literal> {
    lits.into_iter()
        .filter(|l| !preds.iter().any(|p| p.name == l.atom.predicate))
        .collect()
}
