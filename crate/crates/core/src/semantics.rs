//! States of a grounded description and its transition function.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::domain::{ActionId, AtomId, AtomKind, GroundLit, GroundedDescription};

/// Complete assignment over every ground atom, statics included.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    bits: Vec<u64>,
}

impl State {
    pub fn empty(n: usize) -> Self {
        State { bits: vec![0; n.div_ceil(64)] }
    }

    /// State with only statics set.
    pub fn with_statics(g: &GroundedDescription) -> Self {
        let mut s = State::empty(g.num_atoms());
        for (i, t) in g.static_truth.iter().enumerate() {
            if *t {
                s.set(i as AtomId, true);
            }
        }
        s
    }

    #[inline]
    pub fn get(&self, a: AtomId) -> bool {
        (self.bits[(a >> 6) as usize] >> (a & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, a: AtomId, v: bool) {
        let w = &mut self.bits[(a >> 6) as usize];
        if v {
            *w |= 1 << (a & 63);
        } else {
            *w &= !(1 << (a & 63));
        }
    }

    #[inline]
    pub fn holds(&self, l: GroundLit) -> bool {
        self.get(l.atom) == l.positive
    }

    pub fn holds_all(&self, lits: &[GroundLit]) -> bool {
        lits.iter().all(|l| self.holds(*l))
    }

    pub fn true_atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.bits.iter().enumerate().flat_map(|(wi, w)| {
            let mut w = *w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some((wi as u32) * 64 + b)
            })
        })
    }

    /// True fluent atoms, rendered.
    pub fn describe(&self, g: &GroundedDescription) -> Vec<String> {
        self.true_atoms()
            .filter(|a| g.atoms[*a as usize].kind != AtomKind::Static)
            .map(|a| g.atom_text(a))
            .collect()
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.true_atoms()).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transition {
    Next(State),
    /// Index into `GroundedDescription::exec` of a condition whose body holds.
    Inexecutable(usize),
    Inconsistent(String),
}

impl Transition {
    pub fn state(self) -> Option<State> {
        match self {
            Transition::Next(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("inconsistent: constraint #{0} violated")]
    Inconsistent(usize),
    #[error("inconsistent partial assignment on `{0}`")]
    Contradictory(String),
    #[error("{needed} basic atoms exceed the enumeration bound {bound}")]
    BoundExceeded { needed: usize, bound: usize },
}

/// Recomputes every defined atom from scratch, stratum by stratum.
pub fn compute_defined(g: &GroundedDescription, s: &mut State) {
    for &a in &g.defined_atoms {
        s.set(a, false);
    }
    for st in 0..g.num_strata {
        let rules = &g.definitions_by_stratum[st as usize];
        loop {
            let mut changed = false;
            for &r in rules {
                let d = &g.definitions[r as usize];
                if !s.get(d.head.atom) && s.holds_all(&d.body) {
                    s.set(d.head.atom, true);
                    changed = true;
                }
            }
            if !changed || !g.recursive_strata.contains(&st) {
                break;
            }
        }
    }
}

/// Incrementally refreshes defined atoms after `changed` basic atoms flipped.
/// Returns the defined atoms whose value changed.
pub fn update_defined(g: &GroundedDescription, s: &mut State, changed: &[AtomId]) -> Vec<AtomId> {
    if g.num_strata == 0 {
        return Vec::new();
    }
    let mut buckets: Vec<BTreeSet<AtomId>> = vec![BTreeSet::new(); g.num_strata as usize];
    let push_dependents = |a: AtomId, buckets: &mut Vec<BTreeSet<AtomId>>| {
        for &r in &g.definitions_by_body[a as usize] {
            let h = g.definitions[r as usize].head.atom;
            buckets[g.stratum[h as usize] as usize].insert(h);
        }
    };
    for &a in changed {
        push_dependents(a, &mut buckets);
    }
    let mut out = Vec::new();
    for st in 0..g.num_strata {
        let si = st as usize;
        if buckets[si].is_empty() {
            continue;
        }
        if g.recursive_strata.contains(&st) {
            let before: Vec<bool> = g.defined_by_stratum[si].iter().map(|a| s.get(*a)).collect();
            for &a in &g.defined_by_stratum[si] {
                s.set(a, false);
            }
            loop {
                let mut ch = false;
                for &r in &g.definitions_by_stratum[si] {
                    let d = &g.definitions[r as usize];
                    if !s.get(d.head.atom) && s.holds_all(&d.body) {
                        s.set(d.head.atom, true);
                        ch = true;
                    }
                }
                if !ch {
                    break;
                }
            }
            for (i, &a) in g.defined_by_stratum[si].iter().enumerate() {
                if s.get(a) != before[i] {
                    out.push(a);
                    push_dependents(a, &mut buckets);
                }
            }
        } else {
            let heads = std::mem::take(&mut buckets[si]);
            for h in heads {
                let v = g.definitions_by_head[h as usize]
                    .iter()
                    .any(|r| s.holds_all(&g.definitions[*r as usize].body));
                if v != s.get(h) {
                    s.set(h, v);
                    out.push(h);
                    push_dependents(h, &mut buckets);
                }
            }
        }
    }
    out
}

/// First constraint violated by `s`, if any.
pub fn violated_constraint(g: &GroundedDescription, s: &State) -> Option<usize> {
    g.constraints
        .iter()
        .position(|c| !s.holds(c.head) && s.holds_all(&c.body))
}

pub fn is_legal(g: &GroundedDescription, s: &State) -> bool {
    let mut t = s.clone();
    compute_defined(g, &mut t);
    t == *s && violated_constraint(g, s).is_none()
}

/// Values forced by a partial assignment through constraints with basic heads.
/// Entries are 1, 0, or -1 for unknown.
pub fn propagate(g: &GroundedDescription, partial: &[GroundLit]) -> Result<Vec<i8>, SemanticsError> {
    let n = g.num_atoms();
    let mut val: Vec<i8> = vec![-1; n];
    for (i, t) in g.static_truth.iter().enumerate() {
        if g.atoms[i].kind == AtomKind::Static {
            val[i] = i8::from(*t);
        }
    }
    for l in partial {
        let v = i8::from(l.positive);
        let cur = &mut val[l.atom as usize];
        if *cur != -1 && *cur != v {
            return Err(SemanticsError::Contradictory(g.atom_text(l.atom)));
        }
        *cur = v;
    }
    let lit_val = |val: &[i8], l: GroundLit| -> i8 {
        match val[l.atom as usize] {
            -1 => -1,
            v => i8::from((v == 1) == l.positive),
        }
    };
    let mut queue: Vec<u32> = (0..g.constraints.len() as u32).collect();
    let mut queued = vec![true; g.constraints.len()];
    while let Some(ci) = queue.pop() {
        queued[ci as usize] = false;
        let c = &g.constraints[ci as usize];
        if g.atoms[c.head.atom as usize].kind != AtomKind::Basic {
            continue;
        }
        if !c.body.iter().all(|l| lit_val(&val, *l) == 1) {
            continue;
        }
        match lit_val(&val, c.head) {
            1 => {}
            0 => return Err(SemanticsError::Inconsistent(ci as usize)),
            _ => {
                val[c.head.atom as usize] = i8::from(c.head.positive);
                for &d in &g.constraints_by_body[c.head.atom as usize] {
                    if !queued[d as usize] {
                        queued[d as usize] = true;
                        queue.push(d);
                    }
                }
            }
        }
    }
    Ok(val)
}

/// Closes a partial assignment: single-literal constraint heads are propagated,
/// remaining basic atoms default to false, defined atoms are derived, and every
/// constraint is checked.
pub fn complete_state(g: &GroundedDescription, partial: &[GroundLit]) -> Result<State, SemanticsError> {
    let val = propagate(g, partial)?;
    let mut s = State::empty(g.num_atoms());
    for (i, v) in val.iter().enumerate() {
        if *v == 1 && g.atoms[i].kind != AtomKind::Defined {
            s.set(i as AtomId, true);
        }
    }
    compute_defined(g, &mut s);
    match violated_constraint(g, &s) {
        Some(c) => Err(SemanticsError::Inconsistent(c)),
        None => Ok(s),
    }
}

pub fn executable(g: &GroundedDescription, s: &State, a: ActionId) -> Option<usize> {
    g.exec_by_action[a as usize]
        .iter()
        .find(|e| s.holds_all(&g.exec[**e as usize].body))
        .map(|e| *e as usize)
}

/// Direct effects of `a` in `s`, or the conflicting atom.
pub fn direct_effects(g: &GroundedDescription, s: &State, a: ActionId) -> Result<Vec<GroundLit>, AtomId> {
    let mut eff: Vec<GroundLit> = g.causal_by_action[a as usize]
        .iter()
        .map(|c| &g.causal[*c as usize])
        .filter(|c| s.holds_all(&c.body))
        .map(|c| c.head)
        .collect();
    eff.sort();
    eff.dedup();
    if let Some(w) = eff.windows(2).find(|w| w[0].atom == w[1].atom) {
        return Err(w[0].atom);
    }
    Ok(eff)
}

const UNK: i8 = -1;

struct Search<'a> {
    g: &'a GroundedDescription,
    sigma: &'a State,
    effects: &'a [GroundLit],
    /// Basic atoms that may change, sorted.
    vars: Vec<AtomId>,
    /// Position of a basic atom in `vars`, `u32::MAX` when not affected.
    slot: Vec<u32>,
    /// Defined atoms whose value is unknown during search.
    open_defined: Vec<bool>,
    relevant: Vec<u32>,
    watch: Vec<Vec<u32>>,
    assign: Vec<i8>,
    trail: Vec<usize>,
}

impl<'a> Search<'a> {
    fn lit_val(&self, l: GroundLit) -> i8 {
        let a = l.atom as usize;
        let v = match self.slot[a] {
            u32::MAX => {
                if self.open_defined[a] {
                    return UNK;
                }
                self.sigma.get(l.atom)
            }
            k => match self.assign[k as usize] {
                UNK => return UNK,
                x => x == 1,
            },
        };
        i8::from(v == l.positive)
    }

    fn set_lit(&mut self, l: GroundLit) -> bool {
        match self.slot[l.atom as usize] {
            u32::MAX => false,
            k => {
                self.assign[k as usize] = i8::from(l.positive);
                self.trail.push(k as usize);
                true
            }
        }
    }

    /// Unit propagation over the relevant constraints. Returns false on conflict.
    fn propagate(&mut self, mut queue: Vec<u32>) -> bool {
        let mut queued = vec![false; self.g.constraints.len()];
        for &c in &queue {
            queued[c as usize] = true;
        }
        while let Some(ci) = queue.pop() {
            queued[ci as usize] = false;
            let c = &self.g.constraints[ci as usize];
            let mut unknown = None;
            let mut n_unknown = 0;
            let mut falsified = false;
            for l in &c.body {
                match self.lit_val(*l) {
                    0 => {
                        falsified = true;
                        break;
                    }
                    UNK => {
                        n_unknown += 1;
                        unknown = Some(*l);
                    }
                    _ => {}
                }
            }
            if falsified {
                continue;
            }
            let hv = self.lit_val(c.head);
            let forced = if n_unknown == 0 {
                match hv {
                    0 => return false,
                    UNK => Some(c.head),
                    _ => None,
                }
            } else if n_unknown == 1 && hv == 0 {
                unknown.map(GroundLit::negate)
            } else {
                None
            };
            if let Some(l) = forced {
                if self.set_lit(l) {
                    for &d in &self.watch[l.atom as usize] {
                        if !queued[d as usize] {
                            queued[d as usize] = true;
                            queue.push(d);
                        }
                    }
                }
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let k = self.trail.pop().expect("trail entry");
            self.assign[k] = UNK;
        }
    }

    fn candidate(&self) -> (State, Vec<AtomId>) {
        let mut s = self.sigma.clone();
        let mut changed = Vec::new();
        for (i, &a) in self.vars.iter().enumerate() {
            let v = self.assign[i] == 1;
            if s.get(a) != v {
                s.set(a, v);
                changed.push(a);
            }
        }
        let dchanged = update_defined(self.g, &mut s, &changed);
        changed.extend(dchanged);
        (s, changed)
    }

    /// Checks that every changed literal follows from the effects plus the
    /// literals carried over unchanged.
    fn supported(&self, s: &State) -> bool {
        let mut known: Vec<i8> = vec![UNK; self.vars.len()];
        for (i, &a) in self.vars.iter().enumerate() {
            if s.get(a) == self.sigma.get(a) {
                known[i] = i8::from(s.get(a));
            }
        }
        for e in self.effects {
            let k = self.slot[e.atom as usize];
            if k != u32::MAX {
                if known[k as usize] != UNK && known[k as usize] != i8::from(e.positive) {
                    return false;
                }
                known[k as usize] = i8::from(e.positive);
            }
        }
        let lit_known = |known: &[i8], l: GroundLit| -> bool {
            match self.slot[l.atom as usize] {
                u32::MAX => s.holds(l),
                k => known[k as usize] == i8::from(l.positive),
            }
        };
        loop {
            let mut changed = false;
            for &ci in &self.relevant {
                let c = &self.g.constraints[ci as usize];
                let k = self.slot[c.head.atom as usize];
                if k == u32::MAX || known[k as usize] != UNK {
                    continue;
                }
                if c.body.iter().all(|l| lit_known(&known, *l)) {
                    known[k as usize] = i8::from(c.head.positive);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.vars.iter().enumerate().all(|(i, a)| known[i] == i8::from(s.get(*a)))
    }

    fn dfs(&mut self, next: usize) -> Option<State> {
        let mut i = next;
        while i < self.vars.len() && self.assign[i] != UNK {
            i += 1;
        }
        if i == self.vars.len() {
            let (s, changed) = self.candidate();
            for &a in &changed {
                for &c in self.g.constraints_by_body[a as usize].iter().chain(&self.g.constraints_by_head[a as usize]) {
                    let c = &self.g.constraints[c as usize];
                    if !s.holds(c.head) && s.holds_all(&c.body) {
                        return None;
                    }
                }
            }
            return self.supported(&s).then_some(s);
        }
        let atom = self.vars[i];
        let inertial = self.sigma.get(atom);
        for v in [inertial, !inertial] {
            let mark = self.trail.len();
            self.assign[i] = i8::from(v);
            self.trail.push(i);
            let q = self.watch[atom as usize].clone();
            if self.propagate(q) {
                if let Some(s) = self.dfs(i + 1) {
                    return Some(s);
                }
            }
            self.undo(mark);
        }
        None
    }
}

/// Result of executing one action in a legal state. Basic fluents outside the
/// reach of the direct effects keep their values; the rest are settled by a
/// search that prefers inertial values and keeps only successors whose every
/// change is justified by the effects and the unchanged literals.
pub fn successor(g: &GroundedDescription, sigma: &State, a: ActionId) -> Transition {
    if let Some(e) = executable(g, sigma, a) {
        return Transition::Inexecutable(e);
    }
    let effects = match direct_effects(g, sigma, a) {
        Ok(e) => e,
        Err(atom) => return Transition::Inconsistent(format!("contradictory effects on `{}`", g.atom_text(atom))),
    };
    if effects.iter().all(|l| sigma.holds(*l)) {
        return Transition::Next(sigma.clone());
    }
    let n = g.num_atoms();
    let mut in_a = vec![false; n];
    let mut work: Vec<AtomId> = Vec::new();
    for e in &effects {
        if !in_a[e.atom as usize] {
            in_a[e.atom as usize] = true;
            work.push(e.atom);
        }
    }
    let mut relevant_flag = vec![false; g.constraints.len()];
    while let Some(x) = work.pop() {
        for &r in &g.definitions_by_body[x as usize] {
            let h = g.definitions[r as usize].head.atom;
            if !in_a[h as usize] {
                in_a[h as usize] = true;
                work.push(h);
            }
        }
        for &ci in &g.constraints_by_body[x as usize] {
            let c = &g.constraints[ci as usize];
            let live = c.body.iter().all(|l| in_a[l.atom as usize] || sigma.holds(*l));
            if !live {
                continue;
            }
            relevant_flag[ci as usize] = true;
            let h = c.head.atom;
            if !in_a[h as usize] && g.atoms[h as usize].kind == AtomKind::Basic {
                in_a[h as usize] = true;
                work.push(h);
            }
        }
    }
    let mut vars = Vec::new();
    let mut slot = vec![u32::MAX; n];
    let mut open_defined = vec![false; n];
    for (i, f) in in_a.iter().enumerate() {
        if !*f {
            continue;
        }
        match g.atoms[i].kind {
            AtomKind::Basic => {
                slot[i] = vars.len() as u32;
                vars.push(i as AtomId);
            }
            AtomKind::Defined => open_defined[i] = true,
            AtomKind::Static => {}
        }
    }
    for &v in &vars {
        for &ci in &g.constraints_by_head[v as usize] {
            relevant_flag[ci as usize] = true;
        }
    }
    let relevant: Vec<u32> =
        (0..g.constraints.len() as u32).filter(|c| relevant_flag[*c as usize]).collect();
    let mut watch: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &ci in &relevant {
        let c = &g.constraints[ci as usize];
        watch[c.head.atom as usize].push(ci);
        for l in &c.body {
            watch[l.atom as usize].push(ci);
        }
    }
    let k = vars.len();
    let mut search = Search {
        g,
        sigma,
        effects: &effects,
        vars,
        slot,
        open_defined,
        relevant: relevant.clone(),
        watch,
        assign: vec![UNK; k],
        trail: Vec::new(),
    };
    for e in &effects {
        search.set_lit(*e);
    }
    if !search.propagate(relevant) {
        return Transition::Inconsistent(format!("effects of `{}` violate a constraint", g.action_text(a)));
    }
    match search.dfs(0) {
        Some(s) => Transition::Next(s),
        None => Transition::Inconsistent(format!("no successor satisfies the constraints after `{}`", g.action_text(a))),
    }
}

/// Every legal state, by exhaustive enumeration over the basic atoms.
pub fn legal_states(g: &GroundedDescription, bound: usize) -> Result<Vec<State>, SemanticsError> {
    let basic = &g.basic_atoms;
    if basic.len() > bound {
        return Err(SemanticsError::BoundExceeded { needed: basic.len(), bound });
    }
    let mut out = Vec::new();
    let base = State::with_statics(g);
    for mask in 0u64..(1u64 << basic.len()) {
        let mut s = base.clone();
        for (i, a) in basic.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.set(*a, true);
            }
        }
        compute_defined(g, &mut s);
        if violated_constraint(g, &s).is_none() {
            out.push(s);
        }
    }
    Ok(out)
}

pub const DEFAULT_ORACLE_BOUND: usize = 24;
