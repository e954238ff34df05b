//! Grounding, the transition function, plan validation, forward search,
//! delete-relaxed reachability and sampled operational equivalence.

mod compiled;
mod equivalence;
mod ground;
mod plan;
mod relax;
mod search;
mod validate;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::pddl::{Atom, Literal};

pub use equivalence::{
    operational_equivalence, Disagreement, EquivalenceError, EquivalenceReport, SamplerConfig,
    VocabularyMap,
};
pub use ground::{ground, GroundError, GroundTask};
pub use plan::{parse_plan, Plan, PlanParseError, PlanStep, Provenance};
pub use relax::reachable_atoms;
pub use search::{search, solve, SearchLimits, SolveError, Strategy};
pub use validate::{validate_plan, ValidationReport, Violation};

/// An atom whose arguments are all object names.
pub type GroundAtom = Atom;

/// Closed-world state: the set of true atoms, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct State(BTreeSet<GroundAtom>);

impl State {
    pub fn new() -> Self {
        State(BTreeSet::new())
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.0.contains(atom)
    }

    pub fn insert(&mut self, atom: GroundAtom) -> bool {
        self.0.insert(atom)
    }

    pub fn remove(&mut self, atom: &GroundAtom) -> bool {
        self.0.remove(atom)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundAtom> {
        self.0.iter()
    }

    pub fn atoms(&self) -> &BTreeSet<GroundAtom> {
        &self.0
    }

    pub fn satisfies(&self, lit: &Literal) -> bool {
        self.contains(&lit.atom) == lit.positive
    }
}

impl FromIterator<GroundAtom> for State {
    fn from_iter<I: IntoIterator<Item = GroundAtom>>(iter: I) -> Self {
        State(iter.into_iter().collect())
    }
}

/// A schema instantiated with objects. `add` and `del` are disjoint: an atom
/// both added and deleted by the schema ends up true, so it only stays in `add`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundAction {
    pub schema: String,
    /// `(parameter, object)` in parameter order.
    pub binding: Vec<(String, String)>,
    pub pre: Vec<Literal>,
    pub add: BTreeSet<GroundAtom>,
    pub del: BTreeSet<GroundAtom>,
}

impl GroundAction {
    pub fn args(&self) -> impl Iterator<Item = &str> {
        self.binding.iter().map(|(_, o)| o.as_str())
    }

    /// `(schema obj1 obj2)`, the plan-file spelling.
    pub fn label(&self) -> String {
        let mut out = String::from("(");
        out.push_str(&self.schema);
        for a in self.args() {
            out.push(' ');
            out.push_str(a);
        }
        out.push(')');
        out
    }

    /// First precondition literal that `state` violates.
    pub fn first_violation(&self, state: &State) -> Option<&Literal> {
        self.pre.iter().find(|l| !state.satisfies(l))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("action is inapplicable: {literal} does not hold")]
pub struct Inapplicable {
    pub literal: Literal,
}

/// The transition function: `(s \ del) ∪ add`, defined when every
/// precondition holds.
pub fn apply(state: &State, action: &GroundAction) -> Result<State, Inapplicable> {
    if let Some(lit) = action.first_violation(state) {
        return Err(Inapplicable {
            literal: lit.clone(),
        });
    }
    let mut next = state.clone();
    for d in &action.del {
        next.remove(d);
    }
    for a in &action.add {
        next.insert(a.clone());
    }
    Ok(next)
}
