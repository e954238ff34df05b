use alloc::collections::{BTreeMap, BinaryHeap, VecDeque};
use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::Reverse;

use serde::{Deserialize, Serialize};

use super::compiled::Bits;
use super::ground::{ground, GroundError, GroundTask};
use super::plan::{Plan, PlanStep, Provenance};
use crate::pddl::{Domain, Problem};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Breadth-first; plans are shortest.
    #[default]
    Bfs,
    /// Greedy best-first on the number of unmet goal literals.
    GoalCount,
}

impl Strategy {
    pub fn id(self) -> &'static str {
        match self {
            Strategy::Bfs => "bfs",
            Strategy::GoalCount => "gbfs-goal-count",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchLimits {
    pub strategy: Strategy,
    pub max_expansions: Option<usize>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            strategy: Strategy::Bfs,
            max_expansions: Some(1_000_000),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("task is unsolvable ({expansions} states expanded)")]
    Unsolvable { expansions: usize },
    #[error("search stopped after {expansions} expansions")]
    ResourceExhausted { expansions: usize },
    #[error(transparent)]
    Ground(#[from] GroundError),
}

/// Grounds and solves with no wall-clock bound.
pub fn solve(domain: &Domain, problem: &Problem, limits: SearchLimits) -> Result<Plan, SolveError> {
    let task = ground(domain, problem)?;
    search(&task, limits, &mut || false)
}

struct Node {
    state: Bits,
    parent: usize,
    action: usize,
}

/// Forward search over `task`. `stop` is polled once per expansion; returning
/// `true` aborts with `ResourceExhausted` (the std side uses it for timeouts).
pub fn search(
    task: &GroundTask,
    limits: SearchLimits,
    stop: &mut dyn FnMut() -> bool,
) -> Result<Plan, SolveError> {
    let c = &task.compiled;
    let mut nodes = alloc::vec![Node {
        state: c.init.clone(),
        parent: usize::MAX,
        action: usize::MAX,
    }];
    if c.goal_reached(&c.init) {
        return Ok(extract(task, &nodes, 0, limits.strategy));
    }
    let mut seen: BTreeMap<Bits, ()> = BTreeMap::new();
    seen.insert(c.init.clone(), ());

    let mut fifo: VecDeque<usize> = VecDeque::new();
    // (unmet goals, insertion order) so ties fall back to FIFO.
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
    match limits.strategy {
        Strategy::Bfs => fifo.push_back(0),
        Strategy::GoalCount => heap.push(Reverse((c.unmet_goals(&c.init), 0))),
    }

    let mut expansions = 0usize;
    loop {
        let current = match limits.strategy {
            Strategy::Bfs => fifo.pop_front(),
            Strategy::GoalCount => heap.pop().map(|Reverse((_, i))| i),
        };
        let Some(current) = current else {
            return Err(SolveError::Unsolvable { expansions });
        };
        if limits.max_expansions.is_some_and(|m| expansions >= m) || stop() {
            return Err(SolveError::ResourceExhausted { expansions });
        }
        expansions += 1;
        for i in 0..c.actions.len() {
            if !c.applicable(&nodes[current].state, i) {
                continue;
            }
            let next = c.apply(&nodes[current].state, i);
            if seen.contains_key(&next) {
                continue;
            }
            seen.insert(next.clone(), ());
            let goal = c.goal_reached(&next);
            let h = c.unmet_goals(&next);
            nodes.push(Node {
                state: next,
                parent: current,
                action: i,
            });
            let id = nodes.len() - 1;
            if goal {
                return Ok(extract(task, &nodes, id, limits.strategy));
            }
            match limits.strategy {
                Strategy::Bfs => fifo.push_back(id),
                Strategy::GoalCount => heap.push(Reverse((h, id))),
            }
        }
    }
}

fn extract(task: &GroundTask, nodes: &[Node], mut at: usize, strategy: Strategy) -> Plan {
    let mut steps = Vec::new();
    while nodes[at].parent != usize::MAX {
        let a = &task.actions[nodes[at].action];
        steps.push(PlanStep {
            action: a.schema.clone(),
            args: a.args().map(ToString::to_string).collect(),
        });
        at = nodes[at].parent;
    }
    steps.reverse();
    Plan::new(
        steps,
        Provenance {
            solver: strategy.id().into(),
            seed: None,
        },
    )
}
