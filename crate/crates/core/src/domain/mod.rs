//! Sorted signatures, axioms and system descriptions for the action language,
//! together with the textual format used to write them down.

mod ground;
mod parser;
mod printer;

pub use ground::{
    ground, ground_with_budget, AtomId, AtomKind, ActionId, GroundAction, GroundAtom, GroundCausal,
    GroundConstraint, GroundDefault, GroundExec, GroundLit, GroundedDescription,
    DEFAULT_GROUNDING_BUDGET,
};
pub use parser::{
    parse_domain, parse_ground_literal, parse_ground_literals, parse_ground_term, validate_description,
};
pub use printer::print_domain;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Name of the implicit root sort every declared sort descends from.
pub const UNIVERSE: &str = "universe";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(v) | Term::Const(v) => v,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { pred: pred.into(), args }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Body literal. Atoms whose predicate names a sort act as membership guards.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Atom { atom: Atom, positive: bool },
    Eq(Term, Term),
    Neq(Term, Term),
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal::Atom { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal::Atom { atom, positive: false }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Literal::Atom { atom, .. } => atom.args.iter().collect(),
            Literal::Eq(a, b) | Literal::Neq(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Atom { atom, positive } => {
                if !positive {
                    f.write_str("-")?;
                }
                write!(f, "{atom}")
            }
            Literal::Eq(a, b) => write!(f, "{a} = {b}"),
            Literal::Neq(a, b) => write!(f, "{a} != {b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AxiomKind {
    /// `action causes head if body`
    Causal { action: Atom, head: Atom, positive: bool },
    /// `head if body`
    Constraint { head: Atom, positive: bool },
    /// `impossible action if body`
    Executability { action: Atom },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Axiom {
    pub kind: AxiomKind,
    pub body: Vec<Literal>,
}

impl Axiom {
    pub fn causal(action: Atom, head: Atom, positive: bool, body: Vec<Literal>) -> Self {
        Axiom { kind: AxiomKind::Causal { action, head, positive }, body }
    }

    pub fn constraint(head: Atom, positive: bool, body: Vec<Literal>) -> Self {
        Axiom { kind: AxiomKind::Constraint { head, positive }, body }
    }

    pub fn impossible(action: Atom, body: Vec<Literal>) -> Self {
        Axiom { kind: AxiomKind::Executability { action }, body }
    }

    /// Every atom (head, trigger, body) the axiom mentions.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        match &self.kind {
            AxiomKind::Causal { action, head, .. } => {
                out.push(action);
                out.push(head);
            }
            AxiomKind::Constraint { head, .. } => out.push(head),
            AxiomKind::Executability { action } => out.push(action),
        }
        for l in &self.body {
            if let Literal::Atom { atom, .. } = l {
                out.push(atom);
            }
        }
        out
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut vs = BTreeSet::new();
        for a in self.atoms() {
            vs.extend(a.vars().map(str::to_owned));
        }
        for l in &self.body {
            for t in l.terms() {
                if let Term::Var(v) = t {
                    vs.insert(v.clone());
                }
            }
        }
        vs
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            AxiomKind::Causal { action, head, positive } => {
                write!(f, "{action} causes {}{head}", if *positive { "" } else { "-" })?
            }
            AxiomKind::Constraint { head, positive } => {
                write!(f, "{}{head}", if *positive { "" } else { "-" })?
            }
            AxiomKind::Executability { action } => write!(f, "impossible {action}")?,
        }
        if !self.body.is_empty() {
            f.write_str(" if ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
        }
        f.write_str(".")
    }
}

/// Prioritized initial-state default. Lower `priority` is stronger.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InitialDefault {
    pub priority: u32,
    pub head: Atom,
    pub positive: bool,
    pub body: Vec<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SortDef {
    Enumerated(Vec<String>),
    Union(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    Static,
    BasicFluent,
    DefinedFluent,
    AgentAction,
    ExogenousAction,
}

impl SymbolKind {
    pub fn is_action(self) -> bool {
        matches!(self, SymbolKind::AgentAction | SymbolKind::ExogenousAction)
    }

    pub fn is_fluent(self) -> bool {
        matches!(self, SymbolKind::BasicFluent | SymbolKind::DefinedFluent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    /// Sort declarations in declaration order.
    pub sorts: Vec<(String, SortDef)>,
    pub statics: BTreeMap<String, Vec<String>>,
    pub basic_fluents: BTreeMap<String, Vec<String>>,
    pub defined_fluents: BTreeMap<String, Vec<String>>,
    pub agent_actions: BTreeMap<String, Vec<String>>,
    pub exogenous_actions: BTreeMap<String, Vec<String>>,
}

impl Signature {
    pub fn sort(&self, name: &str) -> Option<&SortDef> {
        self.sorts.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }

    pub fn has_sort(&self, name: &str) -> bool {
        name == UNIVERSE || self.sort(name).is_some()
    }

    /// Members of a sort, sorted lexicographically. Unions are flattened.
    pub fn members(&self, name: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if name == UNIVERSE {
            for (n, d) in &self.sorts {
                if let SortDef::Enumerated(ms) = d {
                    debug_assert!(!n.is_empty());
                    out.extend(ms.iter().cloned());
                }
            }
            return out;
        }
        let mut stack = vec![name.to_owned()];
        let mut seen = BTreeSet::new();
        while let Some(s) = stack.pop() {
            if !seen.insert(s.clone()) {
                continue;
            }
            match self.sort(&s) {
                Some(SortDef::Enumerated(ms)) => out.extend(ms.iter().cloned()),
                Some(SortDef::Union(children)) => stack.extend(children.iter().cloned()),
                None => {}
            }
        }
        out
    }

    /// Parent edges `child -> parent`. Sorts not used in any union hang off the universe.
    pub fn hierarchy(&self) -> BTreeMap<String, Vec<String>> {
        let mut parents: BTreeMap<String, Vec<String>> =
            self.sorts.iter().map(|(n, _)| (n.clone(), Vec::new())).collect();
        for (n, d) in &self.sorts {
            if let SortDef::Union(children) = d {
                for c in children {
                    parents.entry(c.clone()).or_default().push(n.clone());
                }
            }
        }
        for ps in parents.values_mut() {
            if ps.is_empty() {
                ps.push(UNIVERSE.to_owned());
            }
        }
        parents
    }

    pub fn symbol(&self, name: &str) -> Option<(SymbolKind, &Vec<String>)> {
        if let Some(a) = self.statics.get(name) {
            return Some((SymbolKind::Static, a));
        }
        if let Some(a) = self.basic_fluents.get(name) {
            return Some((SymbolKind::BasicFluent, a));
        }
        if let Some(a) = self.defined_fluents.get(name) {
            return Some((SymbolKind::DefinedFluent, a));
        }
        if let Some(a) = self.agent_actions.get(name) {
            return Some((SymbolKind::AgentAction, a));
        }
        if let Some(a) = self.exogenous_actions.get(name) {
            return Some((SymbolKind::ExogenousAction, a));
        }
        None
    }

    pub fn kind_of(&self, name: &str) -> Option<SymbolKind> {
        self.symbol(name).map(|(k, _)| k)
    }

    pub fn declare(&mut self, kind: SymbolKind, name: &str, args: Vec<String>) {
        let table = match kind {
            SymbolKind::Static => &mut self.statics,
            SymbolKind::BasicFluent => &mut self.basic_fluents,
            SymbolKind::DefinedFluent => &mut self.defined_fluents,
            SymbolKind::AgentAction => &mut self.agent_actions,
            SymbolKind::ExogenousAction => &mut self.exogenous_actions,
        };
        table.insert(name.to_owned(), args);
    }

    pub fn remove_symbol(&mut self, name: &str) {
        self.statics.remove(name);
        self.basic_fluents.remove(name);
        self.defined_fluents.remove(name);
        self.agent_actions.remove(name);
        self.exogenous_actions.remove(name);
    }

    pub fn symbols(&self) -> impl Iterator<Item = (SymbolKind, &String, &Vec<String>)> {
        self.statics
            .iter()
            .map(|(n, a)| (SymbolKind::Static, n, a))
            .chain(self.basic_fluents.iter().map(|(n, a)| (SymbolKind::BasicFluent, n, a)))
            .chain(self.defined_fluents.iter().map(|(n, a)| (SymbolKind::DefinedFluent, n, a)))
            .chain(self.agent_actions.iter().map(|(n, a)| (SymbolKind::AgentAction, n, a)))
            .chain(self.exogenous_actions.iter().map(|(n, a)| (SymbolKind::ExogenousAction, n, a)))
    }

    /// Sort-name lookup that also recognises constants. Returns the
    /// enumerated sorts containing `constant`.
    pub fn sorts_of_constant(&self, constant: &str) -> Vec<&str> {
        self.sorts
            .iter()
            .filter_map(|(n, d)| match d {
                SortDef::Enumerated(ms) if ms.iter().any(|m| m == constant) => Some(n.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn is_constant(&self, name: &str) -> bool {
        !self.sorts_of_constant(name).is_empty()
    }
}

/// Coarse or fine system description: signature, static facts, axioms, defaults.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SystemDescription {
    pub signature: Signature,
    /// Ground static facts asserted true. All other static atoms are false
    /// unless derived by a state constraint over statics.
    pub facts: Vec<Atom>,
    pub axioms: Vec<Axiom>,
    pub defaults: Vec<InitialDefault>,
    /// Optional `refinement:` block carried alongside the coarse description.
    pub refinement: Option<crate::multires::RefinementSpec>,
}

impl SystemDescription {
    pub fn agent_action_names(&self) -> impl Iterator<Item = &String> {
        self.signature.agent_actions.keys()
    }
}

/// Position in a source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.span.line, self.span.col, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("grounding exceeds budget: {needed} ground axiom instances (budget {budget})")]
    Budget { needed: u128, budget: u128 },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("ill-formed ground term `{0}`")]
    BadTerm(String),
}

impl DomainError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            DomainError::Invalid(d) => d,
            _ => &[],
        }
    }

    /// Renders diagnostics as `file:line:col: message`, one per line.
    pub fn render(&self, file: &str) -> String {
        match self {
            DomainError::Invalid(ds) => ds
                .iter()
                .map(|d| format!("{file}:{d}"))
                .collect::<Vec<_>>()
                .join("\n"),
            other => format!("{file}: {other}"),
        }
    }
}

fn format_diagnostics(ds: &[Diagnostic]) -> String {
    ds.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
