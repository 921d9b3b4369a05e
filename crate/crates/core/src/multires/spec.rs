use std::collections::BTreeMap;

use crate::domain::{Atom, Axiom, Literal, Term};

/// Fine counterpart of an enumerated coarse sort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterpart {
    pub coarse: String,
    pub fine: String,
    /// `(fine constant, coarse constant)` in declaration order.
    pub components: Vec<(String, String)>,
}

/// Explicit `can_test` definition for a directly observable fluent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSpec {
    pub fluent: String,
    pub args: Vec<Term>,
    pub observer: String,
    pub body: Vec<Literal>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Observability {
    Direct,
    Indirect,
}

/// Designer-supplied refinement information carried in the `refinement:` block.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RefinementSpec {
    pub counterparts: Vec<Counterpart>,
    /// Coarse attributes and actions that gain starred counterparts.
    pub magnified: Vec<String>,
    /// Sort of the observing agent and its fine location fluent.
    pub observer: Option<(String, String)>,
    /// Directly observable fine fluents.
    pub observe: Vec<String>,
    pub tests: Vec<TestSpec>,
    pub facts: Vec<Atom>,
    pub axioms: Vec<Axiom>,
}

impl RefinementSpec {
    pub fn is_magnified(&self, name: &str) -> bool {
        self.magnified.iter().any(|m| m == name)
    }

    pub fn counterpart_of(&self, coarse_sort: &str) -> Option<&Counterpart> {
        self.counterparts.iter().find(|c| c.coarse == coarse_sort)
    }

    /// Every `(fine, coarse)` component pair across all counterparts.
    pub fn component_map(&self) -> BTreeMap<String, String> {
        self.counterparts
            .iter()
            .flat_map(|c| c.components.iter().cloned())
            .collect()
    }

    /// Direct fluents are those listed under `observe`; magnified coarse
    /// fluents whose starred form is direct are observed indirectly.
    pub fn observability(&self) -> BTreeMap<String, Observability> {
        let mut out = BTreeMap::new();
        for f in &self.observe {
            out.insert(f.clone(), Observability::Direct);
            if let Some(coarse) = f.strip_suffix('*') {
                if self.is_magnified(coarse) {
                    out.entry(coarse.to_owned()).or_insert(Observability::Indirect);
                }
            }
        }
        out
    }
}
