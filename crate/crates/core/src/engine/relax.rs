use alloc::collections::BTreeSet;

use super::{GroundAtom, GroundTask};

/// Delete-relaxation fixpoint from the initial state. Negative preconditions
/// are treated as satisfiable, so the result over-approximates every atom
/// that can ever become true.
pub fn reachable_atoms(task: &GroundTask) -> BTreeSet<GroundAtom> {
    let c = &task.compiled;
    let mut reached = c.init.clone();
    let mut fired = alloc::vec![false; c.actions.len()];
    loop {
        let mut changed = false;
        for (i, a) in c.actions.iter().enumerate() {
            if fired[i] || !a.pre_pos.iter().all(|&p| reached.get(p)) {
                continue;
            }
            fired[i] = true;
            for &p in &a.add {
                if !reached.get(p) {
                    reached.set(p);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (0..c.atoms.len() as u32)
        .filter(|&i| reached.get(i))
        .map(|i| c.atoms[i as usize].clone())
        .collect()
}
