//! PDDL object model for the typed-STRIPS subset, plus its parser and
//! canonical formatter.
//!
//! Identifiers are folded to lower case at parse time. Untyped parameters and
//! objects carry the root type [`OBJECT`].

mod format;
mod lexer;
mod parser;
mod signature;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use format::{format_atom, format_domain, format_literal, format_problem, generate_task};
pub use format::{format_goal, format_initial, format_objects};
pub use lexer::MAX_DEPTH;
pub use parser::{parse_domain, parse_domain_with_spans, parse_formula, parse_problem};
pub use parser::{parse_problem_with_spans, ParseError, SourceMap};
pub use signature::{parse_predicate_signature, SignatureError};

/// Root of every type forest.
pub const OBJECT: &str = "object";

/// Built-in equality predicate, available under `:equality`.
pub const EQUALITY: &str = "=";

#[inline]
pub fn is_variable(term: &str) -> bool {
    term.starts_with('?')
}

/// A `?name - type` entry in a parameter list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypedParam {
    pub name: String,
    pub type_name: String,
}

impl TypedParam {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        TypedParam {
            name: name.into(),
            type_name: type_name.into(),
        }
    }
}

/// Ordered parameter list. Serializes as an insertion-ordered map
/// `{"?t": "truck", "?l": "location"}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Params(pub Vec<TypedParam>);

impl Params {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, TypedParam> {
        self.0.iter()
    }

    pub fn get(&self, name: &str) -> Option<&TypedParam> {
        self.0.iter().find(|p| p.name == name)
    }
}

impl From<Vec<TypedParam>> for Params {
    fn from(v: Vec<TypedParam>) -> Self {
        Params(v)
    }
}

impl Serialize for Params {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for p in &self.0 {
            map.serialize_entry(&p.name, &p.type_name)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Params {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ParamsVisitor;

        impl<'de> Visitor<'de> for ParamsVisitor {
            type Value = Params;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an ordered map of parameter name to type name")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Params, A::Error> {
                let mut out = Vec::new();
                while let Some((name, type_name)) = access.next_entry::<String, String>()? {
                    out.push(TypedParam { name, type_name });
                }
                Ok(Params(out))
            }
        }

        deserializer.deserialize_map(ParamsVisitor)
    }
}

/// A predicate signature with the five facets produced by the LLM builders.
///
/// `clean` is always re-derived from `name`, `params` and `desc`. Equality
/// ignores `raw`, which records where the signature came from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub desc: String,
    pub raw: String,
    pub params: Params,
    pub clean: String,
}

impl Predicate {
    pub fn new(
        name: impl Into<String>,
        params: impl Into<Params>,
        desc: impl Into<String>,
        raw: impl Into<String>,
    ) -> Self {
        let name = name.into();
        let params = params.into();
        let desc = desc.into();
        let clean = clean_signature(&name, &params, &desc);
        Predicate {
            name,
            desc,
            raw: raw.into(),
            params,
            clean,
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// `(name ?p - type ...)` without the description.
    pub fn signature(&self) -> String {
        let mut out = String::from("(");
        out.push_str(&self.name);
        for p in self.params.iter() {
            out.push(' ');
            out.push_str(&p.name);
            out.push_str(" - ");
            out.push_str(&p.type_name);
        }
        out.push(')');
        out
    }
}

impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.params == other.params && self.desc == other.desc
    }
}

impl Eq for Predicate {}

fn clean_signature(name: &str, params: &Params, desc: &str) -> String {
    let tmp = Predicate {
        name: name.into(),
        desc: String::new(),
        raw: String::new(),
        params: params.clone(),
        clean: String::new(),
    };
    let mut out = tmp.signature();
    if !desc.is_empty() {
        out.push_str(": ");
        out.push_str(desc);
    }
    out
}

/// `(predicate arg ...)` where args are variables (`?x`) or object names.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<I, S>(predicate: impl Into<String>, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Atom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_equality(&self) -> bool {
        self.predicate == EQUALITY
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args
            .iter()
            .map(String::as_str)
            .filter(|a| is_variable(a))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_atom(self))
    }
}

/// Signed atom. Positive effects add, negative effects delete.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal {
            positive: true,
            atom,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            positive: false,
            atom,
        }
    }

    pub fn negated(&self) -> Self {
        Literal {
            positive: !self.positive,
            atom: self.atom.clone(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_literal(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub preconditions: Vec<Literal>,
    pub effects: Vec<Literal>,
}

impl Action {
    pub fn param(&self, name: &str) -> Option<&TypedParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Every literal of the schema, preconditions first.
    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.preconditions.iter().chain(self.effects.iter())
    }

    /// Variables used in preconditions or effects but missing from the
    /// parameter list, in first-use order.
    pub fn unbound_variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for lit in self.literals() {
            for v in lit.atom.variables() {
                if self.param(v).is_none() && !out.iter().any(|o| o == v) {
                    out.push(v.into());
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Requirement {
    Strips,
    Typing,
    NegativePreconditions,
    Equality,
}

impl Requirement {
    pub const ALL: [Requirement; 4] = [
        Requirement::Strips,
        Requirement::Typing,
        Requirement::NegativePreconditions,
        Requirement::Equality,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Requirement::Strips => ":strips",
            Requirement::Typing => ":typing",
            Requirement::NegativePreconditions => ":negative-preconditions",
            Requirement::Equality => ":equality",
        }
    }

    pub fn from_keyword(kw: &str) -> Option<Self> {
        Requirement::ALL.into_iter().find(|r| r.keyword() == kw)
    }
}

/// `name - parent` entry of the type forest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDecl {
    pub name: String,
    pub parent: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<Requirement>,
    pub types: Vec<TypeDecl>,
    pub predicates: Vec<Predicate>,
    pub actions: Vec<Action>,
}

impl Domain {
    pub fn new(name: impl Into<String>) -> Self {
        Domain {
            name: name.into(),
            requirements: Vec::new(),
            types: Vec::new(),
            predicates: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&Action> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn action_mut(&mut self, name: &str) -> Option<&mut Action> {
        self.actions.iter_mut().find(|a| a.name == name)
    }

    pub fn has_requirement(&self, r: Requirement) -> bool {
        self.requirements.contains(&r)
    }

    pub fn type_table(&self) -> TypeTable {
        TypeTable::from_decls(&self.types)
    }
}

/// Parent lookup over a type forest rooted at [`OBJECT`].
#[derive(Clone, Debug, Default)]
pub struct TypeTable {
    parents: BTreeMap<String, String>,
}

impl TypeTable {
    pub fn from_decls(decls: &[TypeDecl]) -> Self {
        let mut parents = BTreeMap::new();
        for d in decls {
            parents
                .entry(d.name.clone())
                .or_insert_with(|| d.parent.clone());
        }
        // A parent that is never declared itself hangs off the root.
        for d in decls {
            if d.parent != OBJECT && !parents.contains_key(&d.parent) {
                parents.insert(d.parent.clone(), OBJECT.to_string());
            }
        }
        TypeTable { parents }
    }

    pub fn is_declared(&self, name: &str) -> bool {
        name == OBJECT || self.parents.contains_key(name)
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.parents.get(name).map(String::as_str)
    }

    /// True when `sub` equals `sup` or descends from it. Cycles terminate.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sup == OBJECT || sub == sup {
            return true;
        }
        let mut cur = sub;
        for _ in 0..=self.parents.len() {
            match self.parents.get(cur) {
                Some(p) if p == sup => return true,
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    /// Declared types whose ancestor chain loops back on itself.
    pub fn cyclic_types(&self) -> Vec<String> {
        let mut out = Vec::new();
        for start in self.parents.keys() {
            let mut cur = start.as_str();
            for _ in 0..=self.parents.len() {
                match self.parents.get(cur) {
                    Some(p) if p == start => {
                        out.push(start.clone());
                        break;
                    }
                    Some(p) => cur = p,
                    None => break,
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectDecl {
    pub name: String,
    pub type_name: String,
}

impl ObjectDecl {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        ObjectDecl {
            name: name.into(),
            type_name: type_name.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<ObjectDecl>,
    pub init: Vec<Atom>,
    pub goal: Vec<Literal>,
}

impl Problem {
    pub fn object_type(&self, name: &str) -> Option<&str> {
        self.objects
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.type_name.as_str())
    }
}
