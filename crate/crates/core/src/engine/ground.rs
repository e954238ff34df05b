use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::compiled::Compiled;
use super::{GroundAction, GroundAtom, State};
use crate::pddl::{is_variable, Action, Atom, Domain, Literal, ObjectDecl, Problem, TypeTable};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GroundError {
    #[error("`{name}` has undeclared type `{type_name}`")]
    TypeMismatch { name: String, type_name: String },
    #[error("action `{action}` uses unbound variable `{variable}`")]
    UnboundVariable { action: String, variable: String },
}

/// All type-consistent ground actions of a domain/problem pair, plus the
/// initial state and goal.
#[derive(Clone, Debug)]
pub struct GroundTask {
    pub domain_name: String,
    pub problem_name: String,
    /// Deduplicated, sorted by name.
    pub objects: Vec<ObjectDecl>,
    /// Schema order, then lexicographic bindings.
    pub actions: Vec<GroundAction>,
    pub init: State,
    pub goal: Vec<crate::pddl::Literal>,
    pub(crate) compiled: Compiled,
}

impl GroundTask {
    pub fn goal_satisfied(&self, state: &State) -> bool {
        self.goal.iter().all(|l| state.satisfies(l))
    }

    /// Index of the ground action with this schema and argument list.
    pub fn find_action(&self, schema: &str, args: &[&str]) -> Option<usize> {
        self.actions
            .iter()
            .position(|a| a.schema == schema && a.args().eq(args.iter().copied()))
    }
}

pub(crate) fn substitute(atom: &Atom, binding: &[(String, String)]) -> Result<GroundAtom, String> {
    let mut args = Vec::with_capacity(atom.args.len());
    for a in &atom.args {
        if is_variable(a) {
            match binding.iter().find(|(p, _)| p == a) {
                Some((_, o)) => args.push(o.clone()),
                None => return Err(a.clone()),
            }
        } else {
            args.push(a.clone());
        }
    }
    Ok(Atom {
        predicate: atom.predicate.clone(),
        args,
    })
}

pub(crate) enum Instance {
    Action(GroundAction),
    /// A static `=` precondition fails under this binding.
    EqualityViolated(Literal),
}

/// Instantiates `schema` under `binding`, evaluating equality statically.
pub(crate) fn instantiate(
    schema: &Action,
    binding: Vec<(String, String)>,
) -> Result<Instance, GroundError> {
    let unbound = |variable: String| GroundError::UnboundVariable {
        action: schema.name.clone(),
        variable,
    };
    let mut pre = Vec::with_capacity(schema.preconditions.len());
    for lit in &schema.preconditions {
        let g = substitute(&lit.atom, &binding).map_err(unbound)?;
        if g.is_equality() {
            if (g.args[0] == g.args[1]) != lit.positive {
                return Ok(Instance::EqualityViolated(Literal {
                    positive: lit.positive,
                    atom: g,
                }));
            }
            continue;
        }
        let l = Literal {
            positive: lit.positive,
            atom: g,
        };
        if !pre.contains(&l) {
            pre.push(l);
        }
    }
    let mut add = BTreeSet::new();
    let mut del = BTreeSet::new();
    for lit in &schema.effects {
        let g = substitute(&lit.atom, &binding).map_err(unbound)?;
        if lit.positive {
            add.insert(g);
        } else {
            del.insert(g);
        }
    }
    del.retain(|a| !add.contains(a));
    Ok(Instance::Action(GroundAction {
        schema: schema.name.clone(),
        binding,
        pre,
        add,
        del,
    }))
}

pub fn ground(domain: &Domain, problem: &Problem) -> Result<GroundTask, GroundError> {
    let types: TypeTable = domain.type_table();

    let mut objects: Vec<ObjectDecl> = Vec::new();
    for o in &problem.objects {
        if !types.is_declared(&o.type_name) {
            return Err(GroundError::TypeMismatch {
                name: o.name.clone(),
                type_name: o.type_name.clone(),
            });
        }
        if !objects.iter().any(|x| x.name == o.name) {
            objects.push(o.clone());
        }
    }
    objects.sort();

    let mut actions = Vec::new();
    for schema in &domain.actions {
        let mut candidates: Vec<Vec<&str>> = Vec::with_capacity(schema.params.len());
        for p in &schema.params {
            if !types.is_declared(&p.type_name) {
                return Err(GroundError::TypeMismatch {
                    name: alloc::format!("{}/{}", schema.name, p.name),
                    type_name: p.type_name.clone(),
                });
            }
            candidates.push(
                objects
                    .iter()
                    .filter(|o| types.is_subtype(&o.type_name, &p.type_name))
                    .map(|o| o.name.as_str())
                    .collect(),
            );
        }
        if candidates.iter().any(Vec::is_empty) {
            continue;
        }
        // Odometer over the candidate lists; the last parameter varies fastest.
        let mut idx = alloc::vec![0usize; candidates.len()];
        'bindings: loop {
            let binding: Vec<(String, String)> = schema
                .params
                .iter()
                .zip(&idx)
                .zip(&candidates)
                .map(|((p, &i), c)| (p.name.clone(), c[i].to_string()))
                .collect();
            if let Instance::Action(a) = instantiate(schema, binding)? {
                actions.push(a);
            }
            let mut k = idx.len();
            loop {
                if k == 0 {
                    break 'bindings;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < candidates[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    let init: State = problem.init.iter().cloned().collect();
    let goal = problem.goal.clone();
    let compiled = Compiled::build(&actions, &init, &goal);
    Ok(GroundTask {
        domain_name: domain.name.clone(),
        problem_name: problem.name.clone(),
        objects,
        actions,
        init,
        goal,
        compiled,
    })
}
