use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ground::{instantiate, Instance};
use super::plan::PlanStep;
use super::{apply, State};
use crate::pddl::{Domain, Literal, Problem};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    UnknownAction {
        name: String,
    },
    WrongArity {
        expected: usize,
        found: usize,
    },
    UnknownObject {
        name: String,
    },
    TypeMismatch {
        object: String,
        param: String,
        expected: String,
    },
    UnboundVariable {
        variable: String,
    },
    /// A precondition literal that does not hold in the current state.
    Precondition {
        literal: String,
    },
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::UnknownAction { name } => write!(f, "unknown action `{name}`"),
            Violation::WrongArity { expected, found } => {
                write!(f, "expected {expected} arguments, found {found}")
            }
            Violation::UnknownObject { name } => write!(f, "unknown object `{name}`"),
            Violation::TypeMismatch {
                object,
                param,
                expected,
            } => write!(f, "`{object}` bound to {param} is not a `{expected}`"),
            Violation::UnboundVariable { variable } => write!(f, "unbound variable `{variable}`"),
            Violation::Precondition { literal } => {
                write!(f, "precondition {literal} does not hold")
            }
        }
    }
}

/// Outcome of simulating a plan from the initial state. Step indices are
/// 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum ValidationReport {
    Valid {
        steps: usize,
    },
    Invalid {
        step: usize,
        action: String,
        reason: Violation,
    },
    GoalUnsatisfied {
        missing: Vec<String>,
    },
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidationReport::Valid { .. })
    }
}

pub fn validate_plan(domain: &Domain, problem: &Problem, steps: &[PlanStep]) -> ValidationReport {
    let types = domain.type_table();
    let mut state: State = problem.init.iter().cloned().collect();
    for (i, step) in steps.iter().enumerate() {
        let invalid = |reason| ValidationReport::Invalid {
            step: i,
            action: step.label(),
            reason,
        };
        let Some(schema) = domain.action(&step.action) else {
            return invalid(Violation::UnknownAction {
                name: step.action.clone(),
            });
        };
        if schema.params.len() != step.args.len() {
            return invalid(Violation::WrongArity {
                expected: schema.params.len(),
                found: step.args.len(),
            });
        }
        let mut binding = Vec::with_capacity(step.args.len());
        for (p, obj) in schema.params.iter().zip(&step.args) {
            let Some(t) = problem.object_type(obj) else {
                return invalid(Violation::UnknownObject { name: obj.clone() });
            };
            if !types.is_subtype(t, &p.type_name) {
                return invalid(Violation::TypeMismatch {
                    object: obj.clone(),
                    param: p.name.clone(),
                    expected: p.type_name.clone(),
                });
            }
            binding.push((p.name.clone(), obj.clone()));
        }
        let action = match instantiate(schema, binding) {
            Ok(Instance::Action(a)) => a,
            Ok(Instance::EqualityViolated(lit)) => {
                return invalid(Violation::Precondition {
                    literal: lit.to_string(),
                })
            }
            Err(super::GroundError::UnboundVariable { variable, .. }) => {
                return invalid(Violation::UnboundVariable { variable })
            }
            Err(e) => unreachable!("instantiate only reports unbound variables: {e}"),
        };
        match apply(&state, &action) {
            Ok(next) => state = next,
            Err(e) => {
                return invalid(Violation::Precondition {
                    literal: e.literal.to_string(),
                })
            }
        }
    }
    let missing: Vec<String> = problem
        .goal
        .iter()
        .filter(|l| !state.satisfies(l))
        .map(Literal::to_string)
        .collect();
    if missing.is_empty() {
        ValidationReport::Valid { steps: steps.len() }
    } else {
        ValidationReport::GoalUnsatisfied { missing }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    fn fixtures() -> (Domain, Problem) {
        let d = parse_domain(include_str!("../../../../fixtures/pddl/blocksworld.pddl")).unwrap();
        let p =
            parse_problem(include_str!("../../../../fixtures/pddl/blocksworld-3.pddl")).unwrap();
        (d, p)
    }

    fn plan(text: &str) -> Vec<PlanStep> {
        super::super::parse_plan(text).unwrap()
    }

    const SIX: &str =
        "(unstack c a)\n(putdown c)\n(pickup b)\n(stack b c)\n(pickup a)\n(stack a b)\n";

    #[test]
    fn derived_plan_is_valid() {
        let (d, p) = fixtures();
        assert_eq!(
            validate_plan(&d, &p, &plan(SIX)),
            ValidationReport::Valid { steps: 6 }
        );
    }

    #[test]
    fn swapping_third_and_fifth_fails_at_index_three() {
        let (d, p) = fixtures();
        let mut steps = plan(SIX);
        steps.swap(2, 4);
        match validate_plan(&d, &p, &steps) {
            ValidationReport::Invalid {
                step,
                action,
                reason,
            } => {
                assert_eq!(step, 3);
                assert_eq!(action, "(stack b c)");
                assert!(matches!(reason, Violation::Precondition { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_plan_and_goal_check() {
        let (d, mut p) = fixtures();
        assert!(matches!(
            validate_plan(&d, &p, &[]),
            ValidationReport::GoalUnsatisfied { ref missing } if missing.len() == 2
        ));
        p.goal = alloc::vec![Literal::pos(p.init[0].clone())];
        assert!(validate_plan(&d, &p, &[]).is_valid());
    }

    #[test]
    fn unknown_action_and_object() {
        let (d, p) = fixtures();
        assert!(matches!(
            validate_plan(&d, &p, &plan("(fly a)")),
            ValidationReport::Invalid {
                reason: Violation::UnknownAction { .. },
                ..
            }
        ));
        assert!(matches!(
            validate_plan(&d, &p, &plan("(pickup z)")),
            ValidationReport::Invalid {
                reason: Violation::UnknownObject { .. },
                ..
            }
        ));
    }
}
