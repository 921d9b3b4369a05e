//! Brute-force reference implementations used to check the engine.

use std::collections::{HashMap, VecDeque};

use mrati::domain::{ActionId, AtomKind, GroundedDescription};
use mrati::search::Goal;
use mrati::semantics::State;

/// Defined atoms by repeated full passes, one stratum at a time.
pub fn defined_fixpoint(g: &GroundedDescription, s: &mut State) {
    for &a in &g.defined_atoms {
        s.set(a, false);
    }
    for st in 0..g.num_strata {
        loop {
            let mut changed = false;
            for d in &g.definitions {
                if g.stratum[d.head.atom as usize] == st && !s.get(d.head.atom) && s.holds_all(&d.body) {
                    s.set(d.head.atom, true);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
}

pub fn satisfies_constraints(g: &GroundedDescription, s: &State) -> bool {
    g.constraints.iter().all(|c| s.holds(c.head) || !s.holds_all(&c.body))
}

pub fn legal(g: &GroundedDescription, s: &State) -> bool {
    let mut t = s.clone();
    defined_fixpoint(g, &mut t);
    t == *s && satisfies_constraints(g, s)
}

pub fn legal_states(g: &GroundedDescription) -> Vec<State> {
    let basic = &g.basic_atoms;
    assert!(basic.len() <= 24);
    let mut out = Vec::new();
    for mask in 0u64..(1 << basic.len()) {
        let mut s = State::with_statics(g);
        for (i, a) in basic.iter().enumerate() {
            s.set(*a, mask >> i & 1 == 1);
        }
        defined_fixpoint(g, &mut s);
        if satisfies_constraints(g, &s) {
            out.push(s);
        }
    }
    out
}

/// Completes a full basic assignment: defined atoms by naive passes, then
/// every constraint checked.
pub fn complete(g: &GroundedDescription, s: &State) -> Option<State> {
    let mut t = s.clone();
    defined_fixpoint(g, &mut t);
    satisfies_constraints(g, &t).then_some(t)
}

pub fn executable(g: &GroundedDescription, s: &State, a: ActionId) -> bool {
    !g.exec.iter().any(|e| e.action == a && s.holds_all(&e.body))
}

/// Every legal state whose basic part is exactly what follows from the
/// direct effects and the basic literals kept from `s`.
pub fn successors(g: &GroundedDescription, legal_states: &[State], s: &State, a: ActionId) -> Vec<State> {
    if !executable(g, s, a) {
        return Vec::new();
    }
    let effects: Vec<_> = g
        .causal
        .iter()
        .filter(|c| c.action == a && s.holds_all(&c.body))
        .map(|c| c.head)
        .collect();
    let basic = |x: u32| g.atoms[x as usize].kind == AtomKind::Basic;
    let mut out = Vec::new();
    'cand: for t in legal_states {
        if !effects.iter().all(|e| t.holds(*e)) {
            continue;
        }
        // known[atom] = Some(value) for derived basic literals.
        let mut known: Vec<Option<bool>> = vec![None; g.num_atoms()];
        for &b in &g.basic_atoms {
            if t.get(b) == s.get(b) {
                known[b as usize] = Some(t.get(b));
            }
        }
        for e in &effects {
            known[e.atom as usize] = Some(e.positive);
        }
        loop {
            let mut changed = false;
            for c in &g.constraints {
                if !basic(c.head.atom) || known[c.head.atom as usize].is_some() {
                    continue;
                }
                let fires = c.body.iter().all(|l| {
                    if basic(l.atom) {
                        known[l.atom as usize] == Some(l.positive)
                    } else {
                        t.holds(*l)
                    }
                });
                if fires {
                    known[c.head.atom as usize] = Some(c.head.positive);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for &b in &g.basic_atoms {
            if known[b as usize] != Some(t.get(b)) {
                continue 'cand;
            }
        }
        out.push(t.clone());
    }
    out
}

/// Agent-action successor graph over all legal states, by index.
pub struct StateGraph {
    pub states: Vec<State>,
    pub edges: Vec<Vec<usize>>,
}

impl StateGraph {
    pub fn build(g: &GroundedDescription) -> Self {
        let states = legal_states(g);
        let index: HashMap<&State, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let edges = states
            .iter()
            .map(|s| {
                g.agent_actions()
                    .flat_map(|a| successors(g, &states, s, a))
                    .map(|t| index[&t])
                    .collect()
            })
            .collect();
        StateGraph { states, edges }
    }

    /// Breadth-first distances from `init` to every state.
    pub fn distances(&self, init: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.states.len()];
        let mut queue = VecDeque::new();
        dist[init] = Some(0);
        queue.push_back(init);
        while let Some(i) = queue.pop_front() {
            for &j in &self.edges[i] {
                if dist[j].is_none() {
                    dist[j] = Some(dist[i].unwrap() + 1);
                    queue.push_back(j);
                }
            }
        }
        dist
    }

    pub fn goal_distance(&self, dist: &[Option<usize>], goal: &Goal) -> Option<usize> {
        self.states
            .iter()
            .zip(dist)
            .filter(|(s, _)| goal.holds(s))
            .filter_map(|(_, d)| *d)
            .min()
    }
}
