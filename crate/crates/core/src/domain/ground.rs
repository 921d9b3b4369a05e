use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::Range;

use super::{Atom, AxiomKind, DomainError, Literal, SymbolKind, SystemDescription, Term, Diagnostic, Span};

/// Ground axiom instances allowed before grounding refuses to materialize.
pub const DEFAULT_GROUNDING_BUDGET: u128 = 5_000_000;

pub type AtomId = u32;
pub type ActionId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomKind {
    Static,
    Basic,
    Defined,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundAtom {
    pub pred: u32,
    pub args: Vec<u32>,
    pub kind: AtomKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundAction {
    pub name: u32,
    pub args: Vec<u32>,
    pub exogenous: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundLit {
    pub atom: AtomId,
    pub positive: bool,
}

impl GroundLit {
    pub fn new(atom: AtomId, positive: bool) -> Self {
        GroundLit { atom, positive }
    }

    pub fn negate(self) -> Self {
        GroundLit { atom: self.atom, positive: !self.positive }
    }
}

#[derive(Debug, Clone)]
pub struct GroundCausal {
    pub action: ActionId,
    pub head: GroundLit,
    pub body: Vec<GroundLit>,
    pub schema: usize,
}

/// State constraint instance. Static body literals have been evaluated away.
#[derive(Debug, Clone)]
pub struct GroundConstraint {
    pub head: GroundLit,
    pub body: Vec<GroundLit>,
    pub schema: usize,
}

#[derive(Debug, Clone)]
pub struct GroundExec {
    pub action: ActionId,
    pub body: Vec<GroundLit>,
    pub schema: usize,
}

#[derive(Debug, Clone)]
pub struct GroundDefault {
    pub priority: u32,
    pub head: GroundLit,
    pub body: Vec<GroundLit>,
    pub schema: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    base: u32,
    radix: Vec<u32>,
    /// Per position, rank of each constant in the position's sort (or `u32::MAX`).
    ranks: Vec<Vec<u32>>,
    size: u32,
}

impl Layout {
    fn id(&self, args: &[u32]) -> Option<u32> {
        if args.len() != self.radix.len() {
            return None;
        }
        let mut idx: u32 = 0;
        for (i, a) in args.iter().enumerate() {
            let r = *self.ranks[i].get(*a as usize)?;
            if r == u32::MAX {
                return None;
            }
            idx = idx * self.radix[i] + r;
        }
        Some(self.base + idx)
    }
}

/// Variable-free form of a system description with dense atom and action ids.
#[derive(Debug, Clone)]
pub struct GroundedDescription {
    pub desc: SystemDescription,
    pub consts: Vec<String>,
    const_index: HashMap<String, u32>,
    /// Names of statics and fluents, sorted.
    pub preds: Vec<String>,
    pred_index: HashMap<String, u32>,
    pred_layouts: Vec<Layout>,
    pub atoms: Vec<GroundAtom>,
    pub action_names: Vec<String>,
    action_index: HashMap<String, u32>,
    action_layouts: Vec<Layout>,
    pub actions: Vec<GroundAction>,
    /// Truth of every static atom (false for non-statics).
    pub static_truth: Vec<bool>,
    pub causal: Vec<GroundCausal>,
    pub causal_by_action: Vec<Vec<u32>>,
    /// Constraints acting on basic atoms, plus integrity constraints.
    pub constraints: Vec<GroundConstraint>,
    pub constraints_by_body: Vec<Vec<u32>>,
    pub constraints_by_head: Vec<Vec<u32>>,
    /// Rules deriving positive defined literals.
    pub definitions: Vec<GroundConstraint>,
    pub definitions_by_head: Vec<Vec<u32>>,
    pub definitions_by_body: Vec<Vec<u32>>,
    /// Stratum of each defined atom; `u32::MAX` for other atoms.
    pub stratum: Vec<u32>,
    pub recursive_strata: BTreeSet<u32>,
    pub num_strata: u32,
    pub definitions_by_stratum: Vec<Vec<u32>>,
    pub defined_by_stratum: Vec<Vec<AtomId>>,
    pub exec: Vec<GroundExec>,
    pub exec_by_action: Vec<Vec<u32>>,
    pub defaults: Vec<GroundDefault>,
    /// Closed-form instance count per axiom schema (product of variable domain sizes).
    pub schema_counts: Vec<u128>,
    pub default_counts: Vec<u128>,
    pub basic_atoms: Vec<AtomId>,
    pub defined_atoms: Vec<AtomId>,
}

#[derive(Debug, Clone, Copy)]
enum TRef {
    Slot(usize),
    Const(u32),
}

#[derive(Debug, Clone)]
enum CLit {
    Atom { pred: u32, args: Vec<TRef>, positive: bool, is_static: bool },
    Guard { members: Vec<bool>, arg: TRef, positive: bool },
    Eq(TRef, TRef, bool),
}

struct Compiled {
    domains: Vec<Vec<u32>>,
    order: Vec<usize>,
    /// Literals checkable once the first `k+1` vars of `order` are bound.
    checks: Vec<Vec<usize>>,
    lits: Vec<CLit>,
}

pub fn ground(desc: &SystemDescription) -> Result<GroundedDescription, DomainError> {
    ground_with_budget(desc, DEFAULT_GROUNDING_BUDGET)
}

fn invalid(message: String) -> DomainError {
    DomainError::Invalid(vec![Diagnostic { span: Span::default(), message }])
}

pub fn ground_with_budget(desc: &SystemDescription, budget: u128) -> Result<GroundedDescription, DomainError> {
    let sig = &desc.signature;
    let consts: Vec<String> = sig.members(super::UNIVERSE).into_iter().collect();
    let const_index: HashMap<String, u32> =
        consts.iter().enumerate().map(|(i, c)| (c.clone(), i as u32)).collect();
    let sort_table: HashMap<String, Vec<u32>> = sig
        .sorts
        .iter()
        .map(|(n, _)| n.as_str())
        .chain(std::iter::once(super::UNIVERSE))
        .map(|s| (s.to_owned(), sig.members(s).iter().map(|m| const_index[m]).collect()))
        .collect();
    let sort_ids = |s: &str| -> Vec<u32> { sort_table.get(s).cloned().unwrap_or_default() };

    let make_layout = |arg_sorts: &[String], base: u32| -> Result<Layout, DomainError> {
        let mut radix = Vec::new();
        let mut ranks = Vec::new();
        let mut size: u64 = 1;
        for s in arg_sorts {
            let ms = sort_ids(s);
            let mut r = vec![u32::MAX; consts.len()];
            for (i, m) in ms.iter().enumerate() {
                r[*m as usize] = i as u32;
            }
            size *= ms.len() as u64;
            radix.push(ms.len() as u32);
            ranks.push(r);
        }
        if base as u64 + size > u32::MAX as u64 / 2 {
            return Err(DomainError::Budget { needed: size as u128, budget: u32::MAX as u128 / 2 });
        }
        Ok(Layout { base, radix, ranks, size: size as u32 })
    };

    let mut pred_list: Vec<(String, SymbolKind, Vec<String>)> = sig
        .symbols()
        .filter(|(k, _, _)| !k.is_action())
        .map(|(k, n, a)| (n.clone(), k, a.clone()))
        .collect();
    pred_list.sort_by(|a, b| a.0.cmp(&b.0));
    let mut preds = Vec::new();
    let mut pred_index = HashMap::new();
    let mut pred_layouts = Vec::new();
    let mut atoms = Vec::new();
    for (pi, (name, kind, args)) in pred_list.iter().enumerate() {
        let layout = make_layout(args, atoms.len() as u32)?;
        let kind = match kind {
            SymbolKind::Static => AtomKind::Static,
            SymbolKind::BasicFluent => AtomKind::Basic,
            _ => AtomKind::Defined,
        };
        let domains: Vec<Vec<u32>> = args.iter().map(|s| sort_ids(s)).collect();
        for_each_tuple(&domains, |t| atoms.push(GroundAtom { pred: pi as u32, args: t.to_vec(), kind }));
        debug_assert_eq!(atoms.len() as u32, layout.base + layout.size);
        preds.push(name.clone());
        pred_index.insert(name.clone(), pi as u32);
        pred_layouts.push(layout);
    }

    let mut act_list: Vec<(String, bool, Vec<String>)> = sig
        .agent_actions
        .iter()
        .map(|(n, a)| (n.clone(), false, a.clone()))
        .chain(sig.exogenous_actions.iter().map(|(n, a)| (n.clone(), true, a.clone())))
        .collect();
    act_list.sort_by(|a, b| a.0.cmp(&b.0));
    let mut action_names = Vec::new();
    let mut action_index = HashMap::new();
    let mut action_layouts = Vec::new();
    let mut actions = Vec::new();
    for (ai, (name, exo, args)) in act_list.iter().enumerate() {
        let layout = make_layout(args, actions.len() as u32)?;
        let domains: Vec<Vec<u32>> = args.iter().map(|s| sort_ids(s)).collect();
        for_each_tuple(&domains, |t| {
            actions.push(GroundAction { name: ai as u32, args: t.to_vec(), exogenous: *exo })
        });
        action_names.push(name.clone());
        action_index.insert(name.clone(), ai as u32);
        action_layouts.push(layout);
    }

    let n = atoms.len();
    let mut g = GroundedDescription {
        desc: desc.clone(),
        consts,
        const_index,
        preds,
        pred_index,
        pred_layouts,
        atoms,
        action_names,
        action_index,
        action_layouts,
        actions,
        static_truth: vec![false; n],
        causal: Vec::new(),
        causal_by_action: Vec::new(),
        constraints: Vec::new(),
        constraints_by_body: vec![Vec::new(); n],
        constraints_by_head: vec![Vec::new(); n],
        definitions: Vec::new(),
        definitions_by_head: vec![Vec::new(); n],
        definitions_by_body: vec![Vec::new(); n],
        stratum: vec![u32::MAX; n],
        recursive_strata: BTreeSet::new(),
        num_strata: 0,
        definitions_by_stratum: Vec::new(),
        defined_by_stratum: Vec::new(),
        exec: Vec::new(),
        exec_by_action: Vec::new(),
        defaults: Vec::new(),
        schema_counts: Vec::new(),
        default_counts: Vec::new(),
        basic_atoms: Vec::new(),
        defined_atoms: Vec::new(),
    };
    g.causal_by_action = vec![Vec::new(); g.actions.len()];
    g.exec_by_action = vec![Vec::new(); g.actions.len()];
    for (i, a) in g.atoms.iter().enumerate() {
        match a.kind {
            AtomKind::Basic => g.basic_atoms.push(i as u32),
            AtomKind::Defined => g.defined_atoms.push(i as u32),
            AtomKind::Static => {}
        }
    }

    let mut compiled = Vec::new();
    let mut total: u128 = 0;
    for ax in &desc.axioms {
        let mut lits = Vec::new();
        match &ax.kind {
            AxiomKind::Causal { action, head, positive } => {
                lits.push(Literal::pos(action.clone()));
                lits.push(Literal::Atom { atom: head.clone(), positive: *positive });
            }
            AxiomKind::Constraint { head, positive } => {
                lits.push(Literal::Atom { atom: head.clone(), positive: *positive })
            }
            AxiomKind::Executability { action } => lits.push(Literal::pos(action.clone())),
        }
        lits.extend(ax.body.iter().cloned());
        let head_static = matches!(&ax.kind, AxiomKind::Constraint { head, .. }
            if sig.kind_of(&head.pred) == Some(SymbolKind::Static));
        let c = g.compile(&lits, head_static)?;
        let count = c.domains.iter().fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128));
        total = total.saturating_add(count);
        g.schema_counts.push(count);
        compiled.push(c);
    }
    let mut compiled_defaults = Vec::new();
    for d in &desc.defaults {
        let mut lits = vec![Literal::Atom { atom: d.head.clone(), positive: d.positive }];
        lits.extend(d.body.iter().cloned());
        let c = g.compile(&lits, false)?;
        let count = c.domains.iter().fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128));
        total = total.saturating_add(count);
        g.default_counts.push(count);
        compiled_defaults.push(c);
    }
    if total > budget {
        return Err(DomainError::Budget { needed: total, budget });
    }

    for f in &desc.facts {
        let id = g.atom_id(f).ok_or_else(|| DomainError::UnknownSymbol(f.to_string()))?;
        g.static_truth[id as usize] = true;
    }
    g.close_statics(&compiled)?;

    for (si, ax) in desc.axioms.iter().enumerate() {
        let head_static = matches!(&ax.kind, AxiomKind::Constraint { head, .. }
            if sig.kind_of(&head.pred) == Some(SymbolKind::Static));
        if head_static {
            continue;
        }
        let c = &compiled[si];
        let mut out: Vec<(Option<ActionId>, Option<GroundLit>, Vec<GroundLit>)> = Vec::new();
        g.materialize(c, |g, bind| {
            let mut it = c.lits.iter();
            let (action, head) = match &ax.kind {
                AxiomKind::Causal { .. } => {
                    let a = g.action_ref(it.next().expect("trigger"), bind);
                    let h = g.lit_ref(it.next().expect("head"), bind);
                    (a, h)
                }
                AxiomKind::Constraint { .. } => (None, g.lit_ref(it.next().expect("head"), bind)),
                AxiomKind::Executability { .. } => (g.action_ref(it.next().expect("trigger"), bind), None),
            };
            if let Some(body) = g.fluent_body(it, bind) {
                out.push((action, head, body));
            }
        });
        for (action, head, body) in out {
            match &ax.kind {
                AxiomKind::Causal { .. } => {
                    let (a, h) = (action.expect("action id"), head.expect("head literal"));
                    g.causal_by_action[a as usize].push(g.causal.len() as u32);
                    g.causal.push(GroundCausal { action: a, head: h, body, schema: si });
                }
                AxiomKind::Executability { .. } => {
                    let a = action.expect("action id");
                    g.exec_by_action[a as usize].push(g.exec.len() as u32);
                    g.exec.push(GroundExec { action: a, body, schema: si });
                }
                AxiomKind::Constraint { .. } => {
                    let h = head.expect("head literal");
                    if body.contains(&h) {
                        continue;
                    }
                    let inst = GroundConstraint { head: h, body, schema: si };
                    if g.atoms[h.atom as usize].kind == AtomKind::Defined && h.positive {
                        let id = g.definitions.len() as u32;
                        g.definitions_by_head[h.atom as usize].push(id);
                        for l in &inst.body {
                            g.definitions_by_body[l.atom as usize].push(id);
                        }
                        g.definitions.push(inst);
                    } else {
                        let id = g.constraints.len() as u32;
                        g.constraints_by_head[h.atom as usize].push(id);
                        for l in &inst.body {
                            g.constraints_by_body[l.atom as usize].push(id);
                        }
                        g.constraints.push(inst);
                    }
                }
            }
        }
    }
    for (di, d) in desc.defaults.iter().enumerate() {
        let c = &compiled_defaults[di];
        let mut out = Vec::new();
        g.materialize(c, |g, bind| {
            let mut it = c.lits.iter();
            let head = g.lit_ref(it.next().expect("head"), bind);
            if let (Some(h), Some(body)) = (head, g.fluent_body(it, bind)) {
                out.push((h, body));
            }
        });
        for (head, body) in out {
            g.defaults.push(GroundDefault { priority: d.priority, head, body, schema: di });
        }
    }
    g.stratify()?;
    Ok(g)
}

fn for_each_tuple(domains: &[Vec<u32>], mut f: impl FnMut(&[u32])) {
    if domains.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; domains.len()];
    let mut tuple: Vec<u32> = domains.iter().map(|d| d[0]).collect();
    loop {
        f(&tuple);
        let mut i = domains.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < domains[i].len() {
                tuple[i] = domains[i][idx[i]];
                break;
            }
            idx[i] = 0;
            tuple[i] = domains[i][0];
        }
    }
}

impl GroundedDescription {
    fn compile(&self, lits: &[Literal], free_head: bool) -> Result<Compiled, DomainError> {
        let sig = &self.desc.signature;
        let mut slots: BTreeMap<String, usize> = BTreeMap::new();
        let mut domains: Vec<Option<BTreeSet<u32>>> = Vec::new();
        let slot_of = |v: &str, slots: &mut BTreeMap<String, usize>, domains: &mut Vec<Option<BTreeSet<u32>>>| {
            *slots.entry(v.to_owned()).or_insert_with(|| {
                domains.push(None);
                domains.len() - 1
            })
        };
        let mut out = Vec::new();
        for l in lits {
            let tref = |t: &Term, slots: &mut BTreeMap<String, usize>, domains: &mut Vec<Option<BTreeSet<u32>>>| -> Result<TRef, DomainError> {
                Ok(match t {
                    Term::Var(v) => TRef::Slot(slot_of(v, slots, domains)),
                    Term::Const(c) => TRef::Const(
                        *self.const_index.get(c).ok_or_else(|| DomainError::UnknownSymbol(c.clone()))?,
                    ),
                })
            };
            match l {
                Literal::Atom { atom, positive } => {
                    let arg_sorts: Vec<String> = if let Some((_, a)) = sig.symbol(&atom.pred) {
                        a.clone()
                    } else if sig.has_sort(&atom.pred) {
                        vec![atom.pred.clone()]
                    } else {
                        return Err(DomainError::UnknownSymbol(atom.pred.clone()));
                    };
                    if arg_sorts.len() != atom.args.len() {
                        return Err(invalid(format!("arity mismatch in `{atom}`")));
                    }
                    let mut args = Vec::new();
                    for (t, s) in atom.args.iter().zip(&arg_sorts) {
                        let r = tref(t, &mut slots, &mut domains)?;
                        if let TRef::Slot(i) = r {
                            let ms: BTreeSet<u32> =
                                sig.members(s).iter().map(|m| self.const_index[m]).collect();
                            domains[i] = Some(match domains[i].take() {
                                None => ms,
                                Some(d) => d.intersection(&ms).copied().collect(),
                            });
                        }
                        args.push(r);
                    }
                    match sig.kind_of(&atom.pred) {
                        Some(k) if k.is_action() => {
                            let a = self.action_index[&atom.pred];
                            out.push(CLit::Atom { pred: a, args, positive: *positive, is_static: false })
                        }
                        Some(k) => out.push(CLit::Atom {
                            pred: self.pred_index[&atom.pred],
                            args,
                            positive: *positive,
                            is_static: k == SymbolKind::Static,
                        }),
                        None => {
                            let mut members = vec![false; self.consts.len()];
                            for m in sig.members(&atom.pred) {
                                members[self.const_index[&m] as usize] = true;
                            }
                            out.push(CLit::Guard { members, arg: args[0], positive: *positive })
                        }
                    }
                }
                Literal::Eq(a, b) | Literal::Neq(a, b) => {
                    let ra = tref(a, &mut slots, &mut domains)?;
                    let rb = tref(b, &mut slots, &mut domains)?;
                    out.push(CLit::Eq(ra, rb, matches!(l, Literal::Eq(..))));
                }
            }
        }
        let names: Vec<String> = {
            let mut v: Vec<(usize, String)> = slots.iter().map(|(n, i)| (*i, n.clone())).collect();
            v.sort();
            v.into_iter().map(|(_, n)| n).collect()
        };
        let mut doms = Vec::new();
        for (i, d) in domains.into_iter().enumerate() {
            match d {
                Some(d) => doms.push(d.into_iter().collect::<Vec<u32>>()),
                None => return Err(invalid(format!("unsafe variable `{}`", names[i]))),
            }
        }
        let order = var_order(&out, &doms);
        let mut pos = vec![0usize; doms.len()];
        for (k, v) in order.iter().enumerate() {
            pos[*v] = k;
        }
        let mut checks = vec![Vec::new(); doms.len().max(1)];
        for (li, l) in out.iter().enumerate() {
            let checkable = match l {
                CLit::Atom { is_static, .. } => *is_static,
                CLit::Guard { .. } | CLit::Eq(..) => true,
            };
            if !checkable || (free_head && li == 0) {
                continue;
            }
            let level = lit_slots(l).iter().map(|s| pos[*s]).max().unwrap_or(0);
            checks[level].push(li);
        }
        Ok(Compiled { domains: doms, order, checks, lits: out })
    }

    fn resolve(r: TRef, bind: &[u32]) -> u32 {
        match r {
            TRef::Slot(i) => bind[i],
            TRef::Const(c) => c,
        }
    }

    fn eval_static(&self, l: &CLit, bind: &[u32]) -> bool {
        match l {
            CLit::Atom { pred, args, positive, .. } => {
                let a: Vec<u32> = args.iter().map(|r| Self::resolve(*r, bind)).collect();
                match self.pred_layouts[*pred as usize].id(&a) {
                    Some(id) => self.static_truth[id as usize] == *positive,
                    None => !*positive,
                }
            }
            CLit::Guard { members, arg, positive } => {
                members[Self::resolve(*arg, bind) as usize] == *positive
            }
            CLit::Eq(a, b, eq) => (Self::resolve(*a, bind) == Self::resolve(*b, bind)) == *eq,
        }
    }

    fn materialize(&mut self, c: &Compiled, mut emit: impl FnMut(&mut Self, &[u32])) {
        let n = c.domains.len();
        let mut bind = vec![0u32; n];
        if n == 0 {
            if c.checks.first().is_none_or(|ch| ch.iter().all(|li| self.eval_static(&c.lits[*li], &bind))) {
                emit(self, &bind);
            }
            return;
        }
        if c.domains.iter().any(Vec::is_empty) {
            return;
        }
        let mut idx = vec![0usize; n];
        let mut level = 0usize;
        loop {
            let var = c.order[level];
            if idx[level] >= c.domains[var].len() {
                idx[level] = 0;
                if level == 0 {
                    return;
                }
                level -= 1;
                idx[level] += 1;
                continue;
            }
            bind[var] = c.domains[var][idx[level]];
            let ok = c.checks[level].iter().all(|li| self.eval_static(&c.lits[*li], &bind));
            if !ok {
                idx[level] += 1;
                continue;
            }
            if level + 1 == n {
                emit(self, &bind);
                idx[level] += 1;
            } else {
                level += 1;
                idx[level] = 0;
            }
        }
    }

    fn lit_ref(&self, l: &CLit, bind: &[u32]) -> Option<GroundLit> {
        match l {
            CLit::Atom { pred, args, positive, .. } => {
                let a: Vec<u32> = args.iter().map(|r| Self::resolve(*r, bind)).collect();
                self.pred_layouts[*pred as usize].id(&a).map(|id| GroundLit::new(id, *positive))
            }
            _ => None,
        }
    }

    fn action_ref(&self, l: &CLit, bind: &[u32]) -> Option<ActionId> {
        match l {
            CLit::Atom { pred, args, .. } => {
                let a: Vec<u32> = args.iter().map(|r| Self::resolve(*r, bind)).collect();
                self.action_layouts[*pred as usize].id(&a)
            }
            _ => None,
        }
    }

    /// Fluent literals of a body; `None` when the body can never hold.
    fn fluent_body<'a>(&self, lits: impl Iterator<Item = &'a CLit>, bind: &[u32]) -> Option<Vec<GroundLit>> {
        let mut out: Vec<GroundLit> = Vec::new();
        for l in lits {
            match l {
                CLit::Atom { is_static: false, positive, .. } => match self.lit_ref(l, bind) {
                    Some(gl) => out.push(gl),
                    None if *positive => return None,
                    None => {}
                },
                _ => {
                    if !self.eval_static(l, bind) {
                        return None;
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        if out.windows(2).any(|w| w[0].atom == w[1].atom) {
            return None;
        }
        Some(out)
    }

    fn close_statics(&mut self, compiled: &[Compiled]) -> Result<(), DomainError> {
        let sig = self.desc.signature.clone();
        let static_axioms: Vec<usize> = self
            .desc
            .axioms
            .iter()
            .enumerate()
            .filter(|(_, ax)| matches!(&ax.kind, AxiomKind::Constraint { head, .. }
                if sig.kind_of(&head.pred) == Some(SymbolKind::Static)))
            .map(|(i, _)| i)
            .collect();
        for &si in &static_axioms {
            let ax = &self.desc.axioms[si];
            for l in &ax.body {
                if let Literal::Atom { atom, .. } = l {
                    if sig.kind_of(&atom.pred).is_some_and(|k| k != SymbolKind::Static) {
                        return Err(invalid(format!("static head in `{ax}` depends on a fluent")));
                    }
                }
            }
        }
        loop {
            let mut derived = Vec::new();
            let mut violated = None;
            for &si in &static_axioms {
                let c = &compiled[si];
                let positive = matches!(&self.desc.axioms[si].kind, AxiomKind::Constraint { positive: true, .. });
                self.materialize(c, |g, bind| {
                    if let Some(h) = g.lit_ref(&c.lits[0], bind) {
                        let body_ok = c.lits[1..].iter().all(|l| g.eval_static(l, bind));
                        if body_ok && g.static_truth[h.atom as usize] != positive {
                            if positive {
                                derived.push(h.atom);
                            } else {
                                violated = Some(h.atom);
                            }
                        }
                    }
                });
            }
            if let Some(a) = violated {
                return Err(invalid(format!("static constraint violated by `{}`", self.atom_text(a))));
            }
            if derived.is_empty() {
                return Ok(());
            }
            for a in derived {
                self.static_truth[a as usize] = true;
            }
        }
    }

    fn stratify(&mut self) -> Result<(), DomainError> {
        let np = self.preds.len();
        let mut level = vec![0u32; np];
        let mut edges: BTreeSet<(u32, u32, bool)> = BTreeSet::new();
        for d in &self.definitions {
            let h = self.atoms[d.head.atom as usize].pred;
            for l in &d.body {
                let a = &self.atoms[l.atom as usize];
                if a.kind == AtomKind::Defined {
                    edges.insert((h, a.pred, l.positive));
                }
            }
        }
        let mut changed = true;
        let mut rounds = 0;
        while changed {
            changed = false;
            rounds += 1;
            if rounds > np + 2 {
                return Err(invalid("defined fluents are not stratified".into()));
            }
            for &(h, b, pos) in &edges {
                let need = level[b as usize] + u32::from(!pos);
                if level[h as usize] < need {
                    level[h as usize] = need;
                    changed = true;
                }
            }
        }
        for &a in &self.defined_atoms {
            self.stratum[a as usize] = level[self.atoms[a as usize].pred as usize];
        }
        self.num_strata = self.defined_atoms.iter().map(|a| self.stratum[*a as usize] + 1).max().unwrap_or(0);
        self.definitions_by_stratum = vec![Vec::new(); self.num_strata as usize];
        self.defined_by_stratum = vec![Vec::new(); self.num_strata as usize];
        for &a in &self.defined_atoms {
            self.defined_by_stratum[self.stratum[a as usize] as usize].push(a);
        }
        for (i, d) in self.definitions.iter().enumerate() {
            self.definitions_by_stratum[self.stratum[d.head.atom as usize] as usize].push(i as u32);
        }
        for &(h, b, pos) in &edges {
            if pos && level[h as usize] == level[b as usize] {
                self.recursive_strata.insert(level[h as usize]);
            }
        }
        Ok(())
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn const_id(&self, name: &str) -> Option<u32> {
        self.const_index.get(name).copied()
    }

    pub fn pred_id(&self, name: &str) -> Option<u32> {
        self.pred_index.get(name).copied()
    }

    pub fn action_name_id(&self, name: &str) -> Option<u32> {
        self.action_index.get(name).copied()
    }

    pub fn atom_id_of(&self, pred: &str, args: &[&str]) -> Option<AtomId> {
        let p = self.pred_id(pred)?;
        let a: Option<Vec<u32>> = args.iter().map(|c| self.const_id(c)).collect();
        self.pred_layouts[p as usize].id(&a?)
    }

    pub fn atom_id_from_ids(&self, pred: u32, args: &[u32]) -> Option<AtomId> {
        self.pred_layouts.get(pred as usize)?.id(args)
    }

    pub fn atom_id(&self, atom: &Atom) -> Option<AtomId> {
        let args: Vec<&str> = atom.args.iter().map(Term::name).collect();
        if atom.args.iter().any(Term::is_var) {
            return None;
        }
        self.atom_id_of(&atom.pred, &args)
    }

    pub fn action_id(&self, atom: &Atom) -> Option<ActionId> {
        let n = self.action_name_id(&atom.pred)?;
        let a: Option<Vec<u32>> = atom.args.iter().map(|t| self.const_id(t.name())).collect();
        self.action_layouts[n as usize].id(&a?)
    }

    pub fn action_id_from_ids(&self, name: u32, args: &[u32]) -> Option<ActionId> {
        self.action_layouts.get(name as usize)?.id(args)
    }

    pub fn atoms_of_pred(&self, pred: &str) -> Range<AtomId> {
        match self.pred_id(pred) {
            Some(p) => {
                let l = &self.pred_layouts[p as usize];
                l.base..l.base + l.size
            }
            None => 0..0,
        }
    }

    pub fn actions_named(&self, name: &str) -> Range<ActionId> {
        match self.action_name_id(name) {
            Some(p) => {
                let l = &self.action_layouts[p as usize];
                l.base..l.base + l.size
            }
            None => 0..0,
        }
    }

    pub fn atom_pred(&self, id: AtomId) -> &str {
        &self.preds[self.atoms[id as usize].pred as usize]
    }

    pub fn atom_args(&self, id: AtomId) -> Vec<&str> {
        self.atoms[id as usize].args.iter().map(|c| self.consts[*c as usize].as_str()).collect()
    }

    pub fn atom_text(&self, id: AtomId) -> String {
        let a = &self.atoms[id as usize];
        fmt_term(&self.preds[a.pred as usize], &a.args, &self.consts)
    }

    pub fn lit_text(&self, l: GroundLit) -> String {
        format!("{}{}", if l.positive { "" } else { "-" }, self.atom_text(l.atom))
    }

    pub fn action_text(&self, id: ActionId) -> String {
        let a = &self.actions[id as usize];
        fmt_term(&self.action_names[a.name as usize], &a.args, &self.consts)
    }

    pub fn action_pred(&self, id: ActionId) -> &str {
        &self.action_names[self.actions[id as usize].name as usize]
    }

    pub fn action_args(&self, id: ActionId) -> Vec<&str> {
        self.actions[id as usize].args.iter().map(|c| self.consts[*c as usize].as_str()).collect()
    }

    pub fn atom_to_ast(&self, id: AtomId) -> Atom {
        Atom::new(
            self.atom_pred(id),
            self.atom_args(id).into_iter().map(|c| Term::Const(c.to_owned())).collect(),
        )
    }

    pub fn action_to_ast(&self, id: ActionId) -> Atom {
        Atom::new(
            self.action_pred(id),
            self.action_args(id).into_iter().map(|c| Term::Const(c.to_owned())).collect(),
        )
    }

    pub fn is_agent_action(&self, id: ActionId) -> bool {
        !self.actions[id as usize].exogenous
    }

    pub fn agent_actions(&self) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.actions.len() as u32).filter(|a| self.is_agent_action(*a))
    }

    pub fn exogenous_actions(&self) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.actions.len() as u32).filter(|a| !self.is_agent_action(*a))
    }

    /// Total materialized ground axiom instances.
    pub fn instance_count(&self) -> usize {
        self.causal.len() + self.constraints.len() + self.definitions.len() + self.exec.len()
    }

    /// Sum of closed-form schema counts.
    pub fn schema_instance_total(&self) -> u128 {
        self.schema_counts.iter().sum()
    }

    pub fn lit_from_ast(&self, atom: &Atom, positive: bool) -> Result<GroundLit, DomainError> {
        self.atom_id(atom)
            .map(|a| GroundLit::new(a, positive))
            .ok_or_else(|| DomainError::UnknownSymbol(atom.to_string()))
    }
}

fn fmt_term(name: &str, args: &[u32], consts: &[String]) -> String {
    if args.is_empty() {
        return name.to_owned();
    }
    let parts: Vec<&str> = args.iter().map(|c| consts[*c as usize].as_str()).collect();
    format!("{name}({})", parts.join(", "))
}

fn lit_slots(l: &CLit) -> Vec<usize> {
    let refs: Vec<TRef> = match l {
        CLit::Atom { args, .. } => args.clone(),
        CLit::Guard { arg, .. } => vec![*arg],
        CLit::Eq(a, b, _) => vec![*a, *b],
    };
    refs.into_iter()
        .filter_map(|r| match r {
            TRef::Slot(i) => Some(i),
            TRef::Const(_) => None,
        })
        .collect()
}

/// Greedy order: prefer variables that complete a checkable literal soonest,
/// then smaller domains.
fn var_order(lits: &[CLit], domains: &[Vec<u32>]) -> Vec<usize> {
    let n = domains.len();
    let checkable: Vec<Vec<usize>> = lits
        .iter()
        .filter(|l| match l {
            CLit::Atom { is_static, .. } => *is_static,
            _ => true,
        })
        .map(lit_slots)
        .collect();
    let mut bound = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let mut best: Option<(usize, (usize, usize, usize))> = None;
        for v in 0..n {
            if bound[v] {
                continue;
            }
            let mut completes = 0;
            let mut touches = 0;
            for slots in &checkable {
                if slots.contains(&v) {
                    touches += 1;
                    if slots.iter().all(|s| *s == v || bound[*s]) {
                        completes += 1;
                    }
                }
            }
            let key = (usize::MAX - completes, usize::MAX - touches, domains[v].len());
            if best.is_none_or(|(_, k)| key < k) {
                best = Some((v, key));
            }
        }
        let v = best.expect("unbound variable").0;
        bound[v] = true;
        order.push(v);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::parse_domain;

    const TWO: &str = "\
sorts:
  place = {a, b}
  robot = {r}
  box = {x}
  thing = robot + box
statics:
  next_to(place, place)
fluents basic:
  loc(thing, place)
actions agent:
  move(robot, place)
facts:
  next_to(a, b).
axioms:
  next_to(X, Y) if next_to(Y, X).
  move(R, P) causes loc(R, P).
  -loc(T, P2) if loc(T, P1), P1 != P2.
  impossible move(R, P) if loc(R, Q), -next_to(P, Q).
";

    #[test]
    fn atom_ids_are_lexicographic() {
        let g = ground(&parse_domain(TWO).unwrap()).unwrap();
        let texts: Vec<String> = (0..g.num_atoms() as u32).map(|i| g.atom_text(i)).collect();
        let mut sorted = texts.clone();
        sorted.sort_by_key(|t| {
            let (p, rest) = t.split_once('(').unwrap_or((t, ""));
            (p.to_owned(), rest.to_owned())
        });
        assert_eq!(texts, sorted);
        assert_eq!(g.atom_id_of("loc", &["r", "b"]).map(|i| g.atom_text(i)).unwrap(), "loc(r, b)");
    }

    #[test]
    fn static_closure_and_counts() {
        let g = ground(&parse_domain(TWO).unwrap()).unwrap();
        let ba = g.atom_id_of("next_to", &["b", "a"]).unwrap();
        assert!(g.static_truth[ba as usize]);
        // move: R(1) x P(2); constraint: T(2) x P1(2) x P2(2); exec: R x P x Q
        assert_eq!(g.schema_counts, vec![4, 2, 8, 4]);
        assert_eq!(g.causal.len(), 2);
        // P1 != P2 leaves 4 of 8 instances.
        assert_eq!(g.constraints.len(), 4);
        // next_to(a,a) and next_to(b,b) are false, so two exec instances survive.
        assert_eq!(g.exec.len(), 2);
    }

    #[test]
    fn budget_is_enforced() {
        let d = parse_domain(TWO).unwrap();
        let e = ground_with_budget(&d, 10).unwrap_err();
        assert!(matches!(e, DomainError::Budget { needed: 18, .. }));
    }
}
