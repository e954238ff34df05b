//! Interned, bitset-backed view of a ground task used by the search loops.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{GroundAction, GroundAtom, State};
use crate::pddl::Literal;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Bits(Vec<u64>);

impl Bits {
    pub fn zeros(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    #[inline]
    pub fn get(&self, i: u32) -> bool {
        self.0[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: u32) {
        self.0[(i / 64) as usize] |= 1 << (i % 64);
    }

    #[inline]
    pub fn unset(&mut self, i: u32) {
        self.0[(i / 64) as usize] &= !(1 << (i % 64));
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledAction {
    pub pre_pos: Vec<u32>,
    pub pre_neg: Vec<u32>,
    pub add: Vec<u32>,
    pub del: Vec<u32>,
}

#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub atoms: Vec<GroundAtom>,
    pub actions: Vec<CompiledAction>,
    pub init: Bits,
    pub goal_pos: Vec<u32>,
    pub goal_neg: Vec<u32>,
}

impl Compiled {
    pub fn build(actions: &[GroundAction], init: &State, goal: &[Literal]) -> Self {
        let mut index: BTreeMap<GroundAtom, u32> = BTreeMap::new();
        let atoms_iter =
            init.iter()
                .chain(goal.iter().map(|l| &l.atom))
                .chain(actions.iter().flat_map(|a| {
                    a.pre
                        .iter()
                        .map(|l| &l.atom)
                        .chain(a.add.iter())
                        .chain(a.del.iter())
                }));
        for a in atoms_iter {
            if !index.contains_key(a) {
                index.insert(a.clone(), 0);
            }
        }
        // Ids follow the canonical atom order.
        let mut atoms = Vec::with_capacity(index.len());
        for (i, (atom, id)) in index.iter_mut().enumerate() {
            *id = i as u32;
            atoms.push(atom.clone());
        }
        let id = |a: &GroundAtom| index[a];
        let compiled_actions = actions
            .iter()
            .map(|a| CompiledAction {
                pre_pos: a
                    .pre
                    .iter()
                    .filter(|l| l.positive)
                    .map(|l| id(&l.atom))
                    .collect(),
                pre_neg: a
                    .pre
                    .iter()
                    .filter(|l| !l.positive)
                    .map(|l| id(&l.atom))
                    .collect(),
                add: a.add.iter().map(id).collect(),
                del: a.del.iter().map(id).collect(),
            })
            .collect();
        let mut init_bits = Bits::zeros(atoms.len());
        for a in init.iter() {
            init_bits.set(id(a));
        }
        let goal_pos = goal
            .iter()
            .filter(|l| l.positive)
            .map(|l| id(&l.atom))
            .collect();
        let goal_neg = goal
            .iter()
            .filter(|l| !l.positive)
            .map(|l| id(&l.atom))
            .collect();
        Compiled {
            atoms,
            actions: compiled_actions,
            init: init_bits,
            goal_pos,
            goal_neg,
        }
    }

    #[inline]
    pub fn applicable(&self, s: &Bits, i: usize) -> bool {
        let a = &self.actions[i];
        a.pre_pos.iter().all(|&p| s.get(p)) && a.pre_neg.iter().all(|&p| !s.get(p))
    }

    pub fn apply(&self, s: &Bits, i: usize) -> Bits {
        let a = &self.actions[i];
        let mut next = s.clone();
        for &d in &a.del {
            next.unset(d);
        }
        for &p in &a.add {
            next.set(p);
        }
        next
    }

    pub fn goal_reached(&self, s: &Bits) -> bool {
        self.goal_pos.iter().all(|&p| s.get(p)) && self.goal_neg.iter().all(|&p| !s.get(p))
    }

    pub fn unmet_goals(&self, s: &Bits) -> usize {
        self.goal_pos.iter().filter(|&&p| !s.get(p)).count()
            + self.goal_neg.iter().filter(|&&p| s.get(p)).count()
    }
}
