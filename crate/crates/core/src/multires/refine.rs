use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Observability, RefinementSpec};
use crate::domain::{
    validate_description, Atom, Axiom, AxiomKind, DomainError, Literal, Signature, SortDef, SymbolKind,
    SystemDescription, Term,
};

pub const COMPONENT: &str = "component";
const PART_SORT: &str = "part*";
const WHOLE_SORT: &str = "whole";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("description has no refinement block")]
    NoRefinement,
    #[error("refinement references undeclared coarse `{0}`")]
    Undeclared(String),
    #[error("fine constant `{0}` has no coarse parent")]
    Unmapped(String),
    #[error("name `{0}` is reserved by refinement")]
    Reserved(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Names of the knowledge machinery generated for one directly observable fluent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestMachinery {
    pub fluent: String,
    pub action: String,
    pub observed: String,
    pub can_test: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineDescription {
    pub desc: SystemDescription,
    pub spec: RefinementSpec,
    /// Coarse sort to its starred sort.
    pub star_sorts: BTreeMap<String, String>,
    /// Fine constant to coarse constant, including unmagnified constants mapped to themselves.
    pub parent: BTreeMap<String, String>,
    pub tests: Vec<TestMachinery>,
}

impl FineDescription {
    pub fn test_action_names(&self) -> BTreeSet<String> {
        self.tests.iter().map(|t| t.action.clone()).collect()
    }

    /// Fine constants whose parent is `coarse`.
    pub fn components_of(&self, coarse: &str) -> Vec<&str> {
        self.parent.iter().filter(|(_, p)| *p == coarse).map(|(f, _)| f.as_str()).collect()
    }
}

fn star(name: &str) -> String {
    format!("{name}*")
}

/// Starred sort names: counterparts as declared, unions starred when any child is.
fn star_sorts(sig: &Signature, spec: &RefinementSpec) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, String> =
        spec.counterparts.iter().map(|c| (c.coarse.clone(), c.fine.clone())).collect();
    loop {
        let mut changed = false;
        for (name, def) in &sig.sorts {
            if out.contains_key(name) {
                continue;
            }
            if let SortDef::Union(children) = def {
                if children.iter().any(|c| out.contains_key(c)) {
                    out.insert(name.clone(), star(name));
                    changed = true;
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

fn fresh_var(base: &str, taken: &BTreeSet<String>) -> String {
    let mut name = format!("{base}c");
    while taken.contains(&name) {
        name.push('c');
    }
    name
}

struct Refiner<'a> {
    coarse: &'a Signature,
    spec: &'a RefinementSpec,
    stars: BTreeMap<String, String>,
}

impl Refiner<'_> {
    fn magnified(&self, pred: &str) -> bool {
        self.spec.is_magnified(pred)
    }

    fn star_sort(&self, sort: &str) -> String {
        self.stars.get(sort).cloned().unwrap_or_else(|| sort.to_owned())
    }

    fn coarse_args(&self, pred: &str) -> Vec<String> {
        if let Some((_, a)) = self.coarse.symbol(pred) {
            return a.clone();
        }
        if self.coarse.has_sort(pred) {
            return vec![pred.to_owned()];
        }
        Vec::new()
    }

    /// Star every magnified symbol of an axiom whose head or trigger is magnified.
    /// A variable used both at a starred position and at a coarse position of a
    /// magnified sort is split in two and linked through `component`.
    fn star_axiom(&self, ax: &Axiom) -> Axiom {
        let mut fine_vars = BTreeSet::new();
        let mut coarse_vars = BTreeSet::new();
        for atom in ax.atoms() {
            let starred = self.magnified(&atom.pred);
            for (t, sort) in atom.args.iter().zip(self.coarse_args(&atom.pred)) {
                if let Term::Var(v) = t {
                    if self.stars.contains_key(&sort) {
                        if starred {
                            fine_vars.insert(v.clone());
                        } else {
                            coarse_vars.insert(v.clone());
                        }
                    }
                }
            }
        }
        let taken = ax.vars();
        let twins: BTreeMap<String, String> = fine_vars
            .intersection(&coarse_vars)
            .map(|v| (v.clone(), fresh_var(v, &taken)))
            .collect();
        let convert = |atom: &Atom| -> Atom {
            if self.magnified(&atom.pred) {
                return Atom::new(star(&atom.pred), atom.args.clone());
            }
            if self.coarse.has_sort(&atom.pred) {
                let v = atom.args.first().map(Term::name).unwrap_or_default();
                if fine_vars.contains(v) && !twins.contains_key(v) {
                    return Atom::new(self.star_sort(&atom.pred), atom.args.clone());
                }
            }
            let args = atom
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Term::Var(twins.get(v).cloned().unwrap_or_else(|| v.clone())),
                    c => c.clone(),
                })
                .collect();
            Atom::new(atom.pred.clone(), args)
        };
        let kind = match &ax.kind {
            AxiomKind::Causal { action, head, positive } => {
                AxiomKind::Causal { action: convert(action), head: convert(head), positive: *positive }
            }
            AxiomKind::Constraint { head, positive } => AxiomKind::Constraint { head: convert(head), positive: *positive },
            AxiomKind::Executability { action } => AxiomKind::Executability { action: convert(action) },
        };
        let mut body: Vec<Literal> = ax
            .body
            .iter()
            .map(|l| match l {
                Literal::Atom { atom, positive } => Literal::Atom { atom: convert(atom), positive: *positive },
                other => other.clone(),
            })
            .collect();
        for (v, c) in &twins {
            body.push(Literal::pos(Atom::new(COMPONENT, vec![Term::Var(v.clone()), Term::Var(c.clone())])));
        }
        Axiom { kind, body }
    }

    fn head_pred<'b>(&self, ax: &'b Axiom) -> Vec<&'b str> {
        match &ax.kind {
            AxiomKind::Causal { action, head, .. } => vec![&action.pred, &head.pred],
            AxiomKind::Constraint { head, .. } => vec![&head.pred],
            AxiomKind::Executability { action } => vec![&action.pred],
        }
    }
}

fn vars(n: usize, prefix: &str) -> Vec<Term> {
    (1..=n).map(|i| Term::Var(format!("{prefix}{i}"))).collect()
}

/// Fine-resolution description: starred sorts and symbols, restricted coarse
/// axioms, bridge axioms for magnified fluents, and test machinery for every
/// directly observable fluent.
pub fn refine(coarse: &SystemDescription) -> Result<FineDescription, RefineError> {
    let spec = coarse.refinement.clone().ok_or(RefineError::NoRefinement)?;
    let csig = &coarse.signature;
    for m in &spec.magnified {
        if csig.symbol(m).is_none() {
            return Err(RefineError::Undeclared(m.clone()));
        }
    }
    for name in [COMPONENT, PART_SORT, WHOLE_SORT] {
        if csig.has_sort(name) || csig.symbol(name).is_some() {
            return Err(RefineError::Reserved(name.to_owned()));
        }
    }
    let r = Refiner { coarse: csig, spec: &spec, stars: star_sorts(csig, &spec) };
    let mut sig = csig.clone();
    let mut parent = BTreeMap::new();

    for c in &spec.counterparts {
        if csig.sort(&c.coarse).is_none() {
            return Err(RefineError::Undeclared(c.coarse.clone()));
        }
        let coarse_members = csig.members(&c.coarse);
        for (f, p) in &c.components {
            if !coarse_members.contains(p) {
                return Err(RefineError::Undeclared(p.clone()));
            }
            parent.insert(f.clone(), p.clone());
        }
        sig.sorts.push((c.fine.clone(), SortDef::Enumerated(c.components.iter().map(|(f, _)| f.clone()).collect())));
    }
    for (name, def) in &csig.sorts {
        if let (SortDef::Union(children), Some(s)) = (def, r.stars.get(name)) {
            if spec.counterpart_of(name).is_none() {
                sig.sorts.push((s.clone(), SortDef::Union(children.iter().map(|c| r.star_sort(c)).collect())));
            }
        }
    }
    // Starred sorts not contained in another starred sort.
    let starred: BTreeSet<&String> = r.stars.values().collect();
    let inner: BTreeSet<String> = sig
        .sorts
        .iter()
        .filter(|(n, _)| starred.contains(n))
        .flat_map(|(_, d)| match d {
            SortDef::Union(ch) => ch.clone(),
            SortDef::Enumerated(_) => Vec::new(),
        })
        .collect();
    let top: Vec<String> = sig
        .sorts
        .iter()
        .map(|(n, _)| n.clone())
        .filter(|n| starred.contains(n) && !inner.contains(n))
        .collect();
    let coarse_of: BTreeMap<&String, &String> = r.stars.iter().map(|(c, f)| (f, c)).collect();
    let whole: Vec<String> = top.iter().map(|t| coarse_of[t].clone()).collect();
    sig.sorts.push((PART_SORT.to_owned(), SortDef::Union(top.clone())));
    sig.sorts.push((WHOLE_SORT.to_owned(), SortDef::Union(whole)));
    sig.declare(SymbolKind::Static, COMPONENT, vec![PART_SORT.to_owned(), WHOLE_SORT.to_owned()]);
    for c in sig.members(PART_SORT) {
        if !parent.contains_key(&c) {
            parent.insert(c.clone(), c);
        }
    }

    let mut axioms = Vec::new();
    for (kind, name, args) in csig.symbols() {
        if !spec.is_magnified(name) {
            continue;
        }
        let sargs: Vec<String> = args.iter().map(|a| r.star_sort(a)).collect();
        sig.declare(kind, &star(name), sargs);
        match kind {
            SymbolKind::BasicFluent | SymbolKind::DefinedFluent => {
                sig.remove_symbol(name);
                sig.declare(SymbolKind::DefinedFluent, name, args.clone());
                let coarse_args = vars(args.len(), "Y");
                let mut fine_args = Vec::new();
                let mut body = Vec::new();
                for (i, a) in args.iter().enumerate() {
                    if r.stars.contains_key(a) {
                        let x = Term::Var(format!("X{}", i + 1));
                        body.push(Literal::pos(Atom::new(COMPONENT, vec![x.clone(), coarse_args[i].clone()])));
                        fine_args.push(x);
                    } else {
                        fine_args.push(coarse_args[i].clone());
                    }
                }
                body.insert(0, Literal::pos(Atom::new(star(name), fine_args)));
                axioms.push(Axiom::constraint(Atom::new(name.clone(), coarse_args), true, body));
            }
            SymbolKind::AgentAction | SymbolKind::ExogenousAction => sig.remove_symbol(name),
            SymbolKind::Static => {}
        }
    }
    for ax in &coarse.axioms {
        let heads = r.head_pred(ax);
        if heads.iter().any(|p| r.magnified(p)) {
            axioms.push(r.star_axiom(ax));
            let static_head = matches!(&ax.kind, AxiomKind::Constraint { head, .. }
                if csig.kind_of(&head.pred) == Some(SymbolKind::Static));
            if static_head {
                axioms.push(ax.clone());
            }
        } else {
            axioms.push(ax.clone());
        }
    }
    axioms.extend(spec.axioms.iter().cloned());

    let mut facts = coarse.facts.clone();
    facts.extend(spec.facts.iter().cloned());
    for (f, p) in &parent {
        facts.push(Atom::new(COMPONENT, vec![Term::Const(f.clone()), Term::Const(p.clone())]));
    }

    let tests = knowledge_machinery(&spec, &mut sig, &mut axioms)?;
    let desc = SystemDescription { signature: sig, facts, axioms, defaults: Vec::new(), refinement: None };
    validate_description(&desc)?;
    let star_sorts = r.stars;
    Ok(FineDescription { desc, spec, star_sorts, parent, tests })
}

fn knowledge_machinery(
    spec: &RefinementSpec,
    sig: &mut Signature,
    axioms: &mut Vec<Axiom>,
) -> Result<Vec<TestMachinery>, RefineError> {
    let mut out = Vec::new();
    let Some((observer_sort, observer_fluent)) = spec.observer.clone() else {
        return Ok(out);
    };
    let loc_args = sig
        .symbol(&observer_fluent)
        .map(|(_, a)| a.clone())
        .ok_or_else(|| RefineError::Undeclared(observer_fluent.clone()))?;
    let place_sort = loc_args.last().cloned().ok_or_else(|| RefineError::Undeclared(observer_fluent.clone()))?;
    for (fluent, obs) in spec.observability() {
        let Some((_, args)) = sig.symbol(&fluent).map(|(k, a)| (k, a.clone())) else {
            return Err(RefineError::Undeclared(fluent));
        };
        let observed = format!("observed_{fluent}");
        let mut targs = vec![observer_sort.clone()];
        targs.extend(args.iter().cloned());
        sig.declare(SymbolKind::BasicFluent, &observed, targs.clone());
        let xs = vars(args.len(), "X");
        let mut head_args = vec![Term::Var("R".into())];
        head_args.extend(xs.iter().cloned());
        if obs == Observability::Indirect {
            // Observed through any fine counterpart of the arguments.
            sig.remove_symbol(&observed);
            sig.declare(SymbolKind::DefinedFluent, &observed, targs);
            let fine = star(&fluent);
            let fargs = sig.symbol(&fine).map(|(_, a)| a.clone()).unwrap_or_default();
            let mut body_args = vec![Term::Var("R".into())];
            let mut links = Vec::new();
            for (i, (ca, fa)) in args.iter().zip(&fargs).enumerate() {
                if ca != fa {
                    let z = Term::Var(format!("Z{}", i + 1));
                    links.push(Literal::pos(Atom::new(COMPONENT, vec![z.clone(), xs[i].clone()])));
                    body_args.push(z);
                } else {
                    body_args.push(xs[i].clone());
                }
            }
            let mut body = vec![Literal::pos(Atom::new(format!("observed_{fine}"), body_args))];
            body.extend(links);
            axioms.push(Axiom::constraint(Atom::new(observed.clone(), head_args), true, body));
            continue;
        }
        let action = format!("test_{fluent}");
        let can_test = format!("can_test_{fluent}");
        let mut aargs = vec![observer_sort.clone()];
        aargs.extend(args.iter().cloned());
        sig.declare(SymbolKind::AgentAction, &action, aargs.clone());
        sig.declare(SymbolKind::DefinedFluent, &can_test, aargs);
        let act = Atom::new(action.clone(), head_args.clone());
        axioms.push(Axiom::causal(
            act.clone(),
            Atom::new(observed.clone(), head_args.clone()),
            true,
            vec![Literal::pos(Atom::new(fluent.clone(), xs.clone()))],
        ));
        axioms.push(Axiom::impossible(act, vec![Literal::neg(Atom::new(can_test.clone(), head_args.clone()))]));
        match spec.tests.iter().find(|t| t.fluent == fluent) {
            Some(t) => {
                let mut h = vec![Term::Var(t.observer.clone())];
                h.extend(t.args.iter().cloned());
                axioms.push(Axiom::constraint(Atom::new(can_test.clone(), h), true, t.body.clone()));
            }
            None => {
                let body = match args.iter().position(|a| *a == place_sort) {
                    // Visible when the observer stands anywhere in the same coarse place.
                    Some(k) => vec![
                        Literal::pos(Atom::new(observer_fluent.clone(), vec![Term::Var("R".into()), Term::Var("C0".into())])),
                        Literal::pos(Atom::new(COMPONENT, vec![Term::Var("C0".into()), Term::Var("P0".into())])),
                        Literal::pos(Atom::new(COMPONENT, vec![xs[k].clone(), Term::Var("P0".into())])),
                    ],
                    None => Vec::new(),
                };
                axioms.push(Axiom::constraint(Atom::new(can_test.clone(), head_args), true, body));
            }
        }
        out.push(TestMachinery { fluent, action, observed, can_test });
    }
    Ok(out)
}

/// Maps fine literals to coarse ones through the component relation. A positive
/// fine literal lifts directly. A negative one lifts only when every fine
/// counterpart of the coarse atom is reported false and none true.
pub fn lift_observations(
    fine: &FineDescription,
    outcomes: &[(Atom, bool)],
) -> Result<Vec<(Atom, bool)>, RefineError> {
    let mut positive: BTreeSet<Atom> = BTreeSet::new();
    let mut negative: BTreeMap<Atom, BTreeSet<Atom>> = BTreeMap::new();
    let mut out: BTreeSet<(Atom, bool)> = BTreeSet::new();
    for (atom, value) in outcomes {
        let Some(coarse_pred) = atom.pred.strip_suffix('*').filter(|p| fine.spec.is_magnified(p)) else {
            out.insert((atom.clone(), *value));
            continue;
        };
        let mut args = Vec::new();
        for t in &atom.args {
            let p = fine.parent.get(t.name()).ok_or_else(|| RefineError::Unmapped(t.name().to_owned()))?;
            args.push(Term::Const(p.clone()));
        }
        let lifted = Atom::new(coarse_pred, args);
        if *value {
            positive.insert(lifted);
        } else {
            negative.entry(lifted).or_default().insert(atom.clone());
        }
    }
    for (lifted, seen_false) in negative {
        if positive.contains(&lifted) {
            continue;
        }
        let fine_args = fine
            .desc
            .signature
            .symbol(&star(&lifted.pred))
            .map(|(_, a)| a.clone())
            .unwrap_or_default();
        let mut needed = 1usize;
        for (t, sort) in lifted.args.iter().zip(&fine_args) {
            if fine.star_sorts.values().any(|s| s == sort) {
                needed *= fine.components_of(t.name()).len().max(1);
            }
        }
        if seen_false.len() >= needed {
            out.insert((lifted, false));
        }
    }
    out.extend(positive.into_iter().map(|a| (a, true)));
    Ok(out.into_iter().collect())
}
