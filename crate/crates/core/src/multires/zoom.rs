use std::collections::BTreeSet;

use super::FineDescription;
use crate::domain::{
    ActionId, Atom, AtomKind, Axiom, GroundedDescription, Literal, SortDef, SystemDescription, Term, UNIVERSE,
};
use crate::search::Goal;
use crate::semantics::State;

/// Fine description restricted to the constants relevant to one coarse transition.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoomedDescription {
    pub desc: SystemDescription,
    pub relcon: BTreeSet<String>,
    /// Retained fine constants.
    pub constants: BTreeSet<String>,
}

fn add_atom(g: &GroundedDescription, atom: u32, out: &mut BTreeSet<String>) {
    out.extend(g.atom_args(atom).into_iter().map(str::to_owned));
}

/// Object constants relevant to the coarse transition `<s1, a, s2>` or to `goal`.
pub fn relevant_constants(
    g: &GroundedDescription,
    s1: &State,
    a: ActionId,
    s2: &State,
    goal: &Goal,
) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = g.action_args(a).into_iter().map(str::to_owned).collect();
    for l in &goal.lits {
        add_atom(g, l.atom, &mut out);
    }
    for (id, atom) in g.atoms.iter().enumerate() {
        let id = id as u32;
        if atom.kind != AtomKind::Static && s1.get(id) != s2.get(id) {
            add_atom(g, id, &mut out);
        }
    }
    for &e in &g.exec_by_action[a as usize] {
        for l in &g.exec[e as usize].body {
            if l.positive && s1.get(l.atom) {
                add_atom(g, l.atom, &mut out);
            }
        }
    }
    // Where the goal's objects are believed to be, observed or assumed by default.
    let goal_consts: BTreeSet<&str> = goal.lits.iter().flat_map(|l| g.atom_args(l.atom)).collect();
    for &b in &g.basic_atoms {
        let args = g.atom_args(b);
        if s1.get(b) && args.first().is_some_and(|x| goal_consts.contains(x)) {
            add_atom(g, b, &mut out);
        }
    }
    out
}

/// Coarse basic literals changed by the transition, restricted to `relcon`.
/// Over a zoomed description they hold through the bridge axioms.
pub fn fine_goal(g: &GroundedDescription, s1: &State, s2: &State, relcon: &BTreeSet<String>) -> Vec<(Atom, bool)> {
    g.basic_atoms
        .iter()
        .filter(|&&b| s1.get(b) != s2.get(b))
        .filter(|&&b| g.atom_args(b).iter().all(|c| relcon.contains(*c)))
        .map(|&b| (g.atom_to_ast(b), s2.get(b)))
        .collect()
}

/// Restriction of the fine description to components of `relcon`.
pub fn zoom(fine: &FineDescription, relcon: &BTreeSet<String>) -> ZoomedDescription {
    let src = &fine.desc;
    let keep_const = |c: &str| match fine.parent.get(c) {
        Some(p) => relcon.contains(p),
        None => relcon.contains(c),
    };
    let mut sorts: Vec<(String, SortDef)> = Vec::new();
    for (name, def) in &src.signature.sorts {
        match def {
            SortDef::Enumerated(ms) => {
                let kept: Vec<String> = ms.iter().filter(|m| keep_const(m)).cloned().collect();
                if !kept.is_empty() {
                    sorts.push((name.clone(), SortDef::Enumerated(kept)));
                }
            }
            SortDef::Union(ch) => sorts.push((name.clone(), SortDef::Union(ch.clone()))),
        }
    }
    // Drop unions left without members, children first.
    loop {
        let names: BTreeSet<String> = sorts.iter().map(|(n, _)| n.clone()).collect();
        let mut changed = false;
        sorts.retain_mut(|(_, d)| match d {
            SortDef::Union(ch) => {
                let before = ch.len();
                ch.retain(|c| names.contains(c));
                changed |= ch.len() != before;
                if ch.is_empty() {
                    changed = true;
                    false
                } else {
                    true
                }
            }
            SortDef::Enumerated(_) => true,
        });
        if !changed {
            break;
        }
    }
    let mut sig = src.signature.clone();
    sig.sorts = sorts;
    let dropped: Vec<String> = sig
        .symbols()
        .filter(|(_, _, args)| !args.iter().all(|a| sig.has_sort(a)))
        .map(|(_, n, _)| n.clone())
        .collect();
    for n in dropped {
        sig.remove_symbol(&n);
    }
    let known = |pred: &str| sig.symbol(pred).is_some() || sig.has_sort(pred);
    let atom_ok = |a: &Atom| known(&a.pred) && a.args.iter().all(|t| t.is_var() || keep_const(t.name()));
    let axiom_ok = |ax: &Axiom| {
        ax.atoms().into_iter().all(atom_ok)
            && ax.body.iter().all(|l| match l {
                Literal::Atom { .. } => true,
                Literal::Eq(x, y) | Literal::Neq(x, y) => {
                    [x, y].into_iter().all(|t| matches!(t, Term::Var(_)) || keep_const(t.name()))
                }
            })
    };
    let desc = SystemDescription {
        facts: src.facts.iter().filter(|f| atom_ok(f)).cloned().collect(),
        axioms: src.axioms.iter().filter(|a| axiom_ok(a)).cloned().collect(),
        defaults: Vec::new(),
        refinement: None,
        signature: sig,
    };
    let constants = desc.signature.members(UNIVERSE);
    ZoomedDescription { desc, relcon: relcon.clone(), constants }
}
