//! Sampled operational equivalence: two domains agree when every sampled
//! action sequence is valid in both or in neither, step by step.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::compiled::Bits;
use super::ground::{ground, GroundError, GroundTask};
use crate::pddl::{Atom, Domain, Literal, Problem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_walks: usize,
    pub max_len: usize,
    pub seed: u64,
    /// Also require the two domains to agree on goal satisfaction.
    pub check_goal: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_walks: 200,
            max_len: 20,
            seed: 0,
            check_goal: true,
        }
    }
}

/// Renaming from the first domain's vocabulary into the second's. Names
/// without an entry map to themselves.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyMap {
    #[serde(default)]
    pub predicates: BTreeMap<String, String>,
    #[serde(default)]
    pub actions: BTreeMap<String, String>,
}

impl VocabularyMap {
    fn predicate<'a>(&'a self, name: &'a str) -> &'a str {
        self.predicates.get(name).map_or(name, String::as_str)
    }

    fn action<'a>(&'a self, name: &'a str) -> &'a str {
        self.actions.get(name).map_or(name, String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EquivalenceError {
    #[error("vocabulary mismatch: {}", unmatched.join(", "))]
    VocabularyMismatch { unmatched: Vec<String> },
    #[error(transparent)]
    Ground(#[from] GroundError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DisagreementKind {
    Applicability { applicable_in_a: bool },
    GoalStatus { goal_in_a: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub walk: usize,
    /// 0-based index into `sequence` of the diverging step. For a goal
    /// disagreement it counts the actions already applied.
    pub step: usize,
    /// Actions in the first domain's vocabulary.
    pub sequence: Vec<String>,
    pub kind: DisagreementKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum EquivalenceReport {
    AgreeOnSample { walks: usize },
    Disagree(Disagreement),
}

impl EquivalenceReport {
    pub fn agrees(&self) -> bool {
        matches!(self, EquivalenceReport::AgreeOnSample { .. })
    }
}

fn check_vocabulary(a: &Domain, b: &Domain, map: &VocabularyMap) -> Result<(), EquivalenceError> {
    let mut unmatched = Vec::new();
    let mut hit_pred = BTreeSet::new();
    for p in &a.predicates {
        let target = map.predicate(&p.name);
        match b.predicate(target) {
            Some(q) if q.arity() == p.arity() => {
                hit_pred.insert(target);
            }
            _ => unmatched.push(alloc::format!("predicate {}", p.name)),
        }
    }
    for q in &b.predicates {
        if !hit_pred.contains(q.name.as_str()) {
            unmatched.push(alloc::format!("predicate {} (second domain)", q.name));
        }
    }
    let mut hit_act = BTreeSet::new();
    for x in &a.actions {
        let target = map.action(&x.name);
        match b.action(target) {
            Some(y) if y.params.len() == x.params.len() => {
                hit_act.insert(target);
            }
            _ => unmatched.push(alloc::format!("action {}", x.name)),
        }
    }
    for y in &b.actions {
        if !hit_act.contains(y.name.as_str()) {
            unmatched.push(alloc::format!("action {} (second domain)", y.name));
        }
    }
    if unmatched.is_empty() {
        Ok(())
    } else {
        Err(EquivalenceError::VocabularyMismatch { unmatched })
    }
}

fn rename_problem(p: &Problem, map: &VocabularyMap) -> Problem {
    let atom = |a: &Atom| Atom {
        predicate: map.predicate(&a.predicate).to_string(),
        args: a.args.clone(),
    };
    Problem {
        name: p.name.clone(),
        domain_name: p.domain_name.clone(),
        objects: p.objects.clone(),
        init: p.init.iter().map(atom).collect(),
        goal: p
            .goal
            .iter()
            .map(|l| Literal {
                positive: l.positive,
                atom: atom(&l.atom),
            })
            .collect(),
    }
}

/// One entry per ground action label appearing in either task.
struct Joint {
    labels: Vec<String>,
    in_a: Vec<Option<usize>>,
    in_b: Vec<Option<usize>>,
}

/// Schema name and argument list, in `b`'s vocabulary.
type ActionKey = (String, Vec<String>);

fn join(ta: &GroundTask, tb: &GroundTask, map: &VocabularyMap, b: &Domain) -> Joint {
    let mut by_key: BTreeMap<ActionKey, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for (i, a) in ta.actions.iter().enumerate() {
        let key = (
            map.action(&a.schema).to_string(),
            a.args().map(ToString::to_string).collect(),
        );
        by_key.entry(key).or_default().0 = Some(i);
    }
    for (i, a) in tb.actions.iter().enumerate() {
        let key = (
            a.schema.clone(),
            a.args().map(ToString::to_string).collect(),
        );
        by_key.entry(key).or_default().1 = Some(i);
    }
    let reverse: BTreeMap<&str, &str> = map
        .actions
        .iter()
        .map(|(k, v)| (v.as_str(), k.as_str()))
        .collect();
    let mut joint = Joint {
        labels: Vec::with_capacity(by_key.len()),
        in_a: Vec::with_capacity(by_key.len()),
        in_b: Vec::with_capacity(by_key.len()),
    };
    for ((schema, args), (ia, ib)) in by_key {
        let name = match ia {
            Some(i) => ta.actions[i].schema.clone(),
            None => reverse
                .get(schema.as_str())
                .map_or_else(|| schema.clone(), |s| s.to_string()),
        };
        debug_assert!(b.action(&schema).is_some() || ia.is_some());
        let mut label = String::from("(");
        label.push_str(&name);
        for a in &args {
            label.push(' ');
            label.push_str(a);
        }
        label.push(')');
        joint.labels.push(label);
        joint.in_a.push(ia);
        joint.in_b.push(ib);
    }
    joint
}

fn enabled(task: &GroundTask, s: &Bits, idx: Option<usize>) -> bool {
    idx.is_some_and(|i| task.compiled.applicable(s, i))
}

/// Compares `a` and `b` on `problem` (written in `a`'s vocabulary) by random
/// walks. Even-numbered walks draw uniformly among actions applicable in `a`;
/// odd-numbered walks draw uniformly among actions applicable in either
/// domain, so actions only `b` allows are also exercised.
pub fn operational_equivalence(
    a: &Domain,
    b: &Domain,
    problem: &Problem,
    map: &VocabularyMap,
    sampler: &SamplerConfig,
) -> Result<EquivalenceReport, EquivalenceError> {
    check_vocabulary(a, b, map)?;
    let ta = ground(a, problem)?;
    let tb = ground(b, &rename_problem(problem, map))?;
    let joint = join(&ta, &tb, map, b);
    let (ca, cb) = (&ta.compiled, &tb.compiled);
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut pool: Vec<usize> = Vec::with_capacity(joint.labels.len());

    for walk in 0..sampler.n_walks {
        let (mut sa, mut sb) = (ca.init.clone(), cb.init.clone());
        let mut sequence: Vec<String> = Vec::new();
        let disagree = |sequence: &Vec<String>, step, kind| {
            Ok(EquivalenceReport::Disagree(Disagreement {
                walk,
                step,
                sequence: sequence.clone(),
                kind,
            }))
        };
        if sampler.check_goal && ca.goal_reached(&sa) != cb.goal_reached(&sb) {
            return disagree(
                &sequence,
                0,
                DisagreementKind::GoalStatus {
                    goal_in_a: ca.goal_reached(&sa),
                },
            );
        }
        for step in 0..sampler.max_len {
            pool.clear();
            for j in 0..joint.labels.len() {
                let ea = enabled(&ta, &sa, joint.in_a[j]);
                if ea || (walk % 2 == 1 && enabled(&tb, &sb, joint.in_b[j])) {
                    pool.push(j);
                }
            }
            if pool.is_empty() {
                break;
            }
            let j = pool[rng.random_range(0..pool.len())];
            sequence.push(joint.labels[j].clone());
            let ea = enabled(&ta, &sa, joint.in_a[j]);
            let eb = enabled(&tb, &sb, joint.in_b[j]);
            if ea != eb {
                return disagree(
                    &sequence,
                    step,
                    DisagreementKind::Applicability {
                        applicable_in_a: ea,
                    },
                );
            }
            sa = ca.apply(&sa, joint.in_a[j].expect("enabled in a"));
            sb = cb.apply(&sb, joint.in_b[j].expect("enabled in b"));
            if sampler.check_goal && ca.goal_reached(&sa) != cb.goal_reached(&sb) {
                return disagree(
                    &sequence,
                    step + 1,
                    DisagreementKind::GoalStatus {
                        goal_in_a: ca.goal_reached(&sa),
                    },
                );
            }
        }
    }
    Ok(EquivalenceReport::AgreeOnSample {
        walks: sampler.n_walks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    const BW: &str = include_str!("../../../../fixtures/pddl/blocksworld.pddl");
    const TASK: &str = include_str!("../../../../fixtures/pddl/blocksworld-3.pddl");

    #[test]
    fn reflexive() {
        let d = parse_domain(BW).unwrap();
        let p = parse_problem(TASK).unwrap();
        for seed in 0..5 {
            let cfg = SamplerConfig {
                seed,
                ..SamplerConfig::default()
            };
            let r = operational_equivalence(&d, &d, &p, &VocabularyMap::default(), &cfg).unwrap();
            assert_eq!(r, EquivalenceReport::AgreeOnSample { walks: 200 });
        }
    }

    #[test]
    fn dropped_arm_empty_is_caught() {
        let d = parse_domain(BW).unwrap();
        let mut m = d.clone();
        let pickup = m.action_mut("pickup").unwrap();
        pickup
            .preconditions
            .retain(|l| l.atom.predicate != "arm-empty");
        let p = parse_problem(TASK).unwrap();
        let r = operational_equivalence(
            &d,
            &m,
            &p,
            &VocabularyMap::default(),
            &SamplerConfig::default(),
        )
        .unwrap();
        match r {
            EquivalenceReport::Disagree(d) => {
                assert!(d.sequence.last().unwrap().starts_with("(pickup"));
                assert_eq!(
                    d.kind,
                    DisagreementKind::Applicability {
                        applicable_in_a: false
                    }
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn renamed_predicate_agrees() {
        let d = parse_domain(BW).unwrap();
        let r = parse_domain(&BW.replace("arm-empty", "hand-free")).unwrap();
        let p = parse_problem(TASK).unwrap();
        let mut map = VocabularyMap::default();
        map.predicates
            .insert("arm-empty".into(), "hand-free".into());
        let rep = operational_equivalence(&d, &r, &p, &map, &SamplerConfig::default()).unwrap();
        assert!(rep.agrees());
        let err = operational_equivalence(
            &d,
            &r,
            &p,
            &VocabularyMap::default(),
            &SamplerConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, EquivalenceError::VocabularyMismatch { .. }));
    }
}
