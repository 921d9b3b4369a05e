//! Minimal-length planning and plan verification.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use thiserror::Error;

use crate::domain::{ActionId, GroundLit, GroundedDescription};
use crate::semantics::{successor, State, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Goal {
    pub lits: Vec<GroundLit>,
}

impl Goal {
    pub fn new(lits: Vec<GroundLit>) -> Self {
        Goal { lits }
    }

    pub fn holds(&self, s: &State) -> bool {
        s.holds_all(&self.lits)
    }

    pub fn render(&self, g: &GroundedDescription) -> String {
        self.lits.iter().map(|l| g.lit_text(*l)).collect::<Vec<_>>().join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Plan {
    pub actions: Vec<ActionId>,
}

impl Plan {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn render(&self, g: &GroundedDescription) -> Vec<String> {
        self.actions.iter().map(|a| g.action_text(*a)).collect()
    }
}

pub const DEFAULT_COARSE_HORIZON: usize = 20;
pub const DEFAULT_FINE_HORIZON: usize = 40;

#[derive(Debug, Clone)]
pub struct PlanOptions {
    pub max_horizon: usize,
    /// Cap on distinct states expanded across the whole search.
    pub state_budget: usize,
    pub deadline: Option<Instant>,
    /// Action names never tried.
    pub exclude: BTreeSet<String>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            max_horizon: DEFAULT_COARSE_HORIZON,
            state_budget: 2_000_000,
            deadline: None,
            exclude: BTreeSet::new(),
        }
    }
}

impl PlanOptions {
    pub fn with_horizon(max_horizon: usize) -> Self {
        PlanOptions { max_horizon, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no plan within {0} steps")]
    Unsat(usize),
    #[error("search budget exhausted after {expanded} states")]
    ResourceExhausted { expanded: usize },
    #[error("search deadline passed")]
    Timeout,
}

struct Iddfs<'a> {
    g: &'a GroundedDescription,
    goal: &'a Goal,
    actions: Vec<ActionId>,
    succ: HashMap<State, Vec<(ActionId, State)>>,
    memo: HashMap<State, usize>,
    opts: &'a PlanOptions,
    ticks: u32,
    /// Whether the depth bound cut off some branch in this iteration.
    cut: bool,
    stack: Vec<ActionId>,
}

impl Iddfs<'_> {
    fn expand(&mut self, s: &State) -> Result<Vec<(ActionId, State)>, PlanError> {
        if let Some(v) = self.succ.get(s) {
            return Ok(v.clone());
        }
        if self.succ.len() >= self.opts.state_budget {
            return Err(PlanError::ResourceExhausted { expanded: self.succ.len() });
        }
        let mut out = Vec::new();
        for &a in &self.actions {
            self.ticks += 1;
            if self.ticks.is_multiple_of(64) {
                if let Some(d) = self.opts.deadline {
                    if Instant::now() >= d {
                        return Err(PlanError::Timeout);
                    }
                }
            }
            if let Transition::Next(t) = successor(self.g, s, a) {
                if t != *s {
                    out.push((a, t));
                }
            }
        }
        self.succ.insert(s.clone(), out.clone());
        Ok(out)
    }

    fn dfs(&mut self, s: &State, remaining: usize) -> Result<bool, PlanError> {
        if self.goal.holds(s) {
            return Ok(true);
        }
        if remaining == 0 {
            self.cut = true;
            return Ok(false);
        }
        if self.memo.get(s).is_some_and(|r| *r >= remaining) {
            return Ok(false);
        }
        for (a, t) in self.expand(s)? {
            self.stack.push(a);
            if self.dfs(&t, remaining - 1)? {
                return Ok(true);
            }
            self.stack.pop();
        }
        self.memo.insert(s.clone(), remaining);
        Ok(false)
    }
}

/// Shortest plan reaching `goal`, ties broken by lexicographic order of
/// action ids step by step.
pub fn plan_minimal(g: &GroundedDescription, init: &State, goal: &Goal, opts: &PlanOptions) -> Result<Plan, PlanError> {
    let actions = g
        .agent_actions()
        .filter(|a| !opts.exclude.contains(g.action_pred(*a)))
        .collect();
    let mut search = Iddfs {
        g,
        goal,
        actions,
        succ: HashMap::new(),
        memo: HashMap::new(),
        opts,
        ticks: 0,
        cut: false,
        stack: Vec::new(),
    };
    for depth in 0..=opts.max_horizon {
        search.memo.clear();
        search.stack.clear();
        search.cut = false;
        if search.dfs(init, depth)? {
            return Ok(Plan { actions: search.stack });
        }
        if !search.cut {
            break;
        }
    }
    Err(PlanError::Unsat(opts.max_horizon))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailReason {
    Inexecutable(usize),
    Inconsistent(String),
    GoalUnsatisfied,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Reaches(State),
    FailsAt { step: usize, reason: FailReason },
}

impl Verdict {
    pub fn reaches(&self) -> bool {
        matches!(self, Verdict::Reaches(_))
    }
}

pub fn verify_plan(g: &GroundedDescription, init: &State, plan: &[ActionId], goal: &Goal) -> Verdict {
    let mut s = init.clone();
    for (i, a) in plan.iter().enumerate() {
        s = match successor(g, &s, *a) {
            Transition::Next(t) => t,
            Transition::Inexecutable(e) => {
                return Verdict::FailsAt { step: i, reason: FailReason::Inexecutable(e) }
            }
            Transition::Inconsistent(m) => {
                return Verdict::FailsAt { step: i, reason: FailReason::Inconsistent(m) }
            }
        };
    }
    if goal.holds(&s) {
        Verdict::Reaches(s)
    } else {
        Verdict::FailsAt { step: plan.len(), reason: FailReason::GoalUnsatisfied }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ground, parse_domain, parse_ground_literals, parse_ground_term};
    use crate::semantics::complete_state;

    const LINE: &str = "\
sorts:
  cell = {c1, c2, c3, c4}
statics:
  adj(cell, cell)
fluents basic:
  at(cell)
  lit(cell)
actions agent:
  go(cell)
  light(cell)
facts:
  adj(c1, c2).
  adj(c2, c3).
  adj(c3, c4).
axioms:
  adj(X, Y) if adj(Y, X).
  go(C) causes at(C).
  light(C) causes lit(C).
  -at(X) if at(Y), X != Y.
  impossible go(C) if at(D), -adj(C, D).
  impossible light(C) if -at(C).
";

    fn setup(init: &str) -> (GroundedDescription, State) {
        let g = ground(&parse_domain(LINE).unwrap()).unwrap();
        let s = complete_state(&g, &lits(&g, init)).unwrap();
        (g, s)
    }

    fn lits(g: &GroundedDescription, text: &str) -> Vec<GroundLit> {
        parse_ground_literals(text).unwrap().into_iter().map(|(a, p)| g.lit_from_ast(&a, p).unwrap()).collect()
    }

    fn act(g: &GroundedDescription, text: &str) -> ActionId {
        g.action_id(&parse_ground_term(text).unwrap()).unwrap()
    }

    const START: &str = "at(c1), -lit(c1), -lit(c2), -lit(c3), -lit(c4)";

    #[test]
    fn finds_the_shortest_plan() {
        let (g, s) = setup(START);
        let goal = Goal::new(lits(&g, "lit(c3)"));
        let p = plan_minimal(&g, &s, &goal, &PlanOptions::default()).unwrap();
        assert_eq!(p.render(&g), ["go(c2)", "go(c3)", "light(c3)"]);
        assert!(verify_plan(&g, &s, &p.actions, &goal).reaches());
    }

    #[test]
    fn satisfied_goal_needs_no_actions() {
        let (g, s) = setup(START);
        let p = plan_minimal(&g, &s, &Goal::new(lits(&g, "at(c1)")), &PlanOptions::default()).unwrap();
        assert_eq!(p.horizon(), 0);
    }

    #[test]
    fn horizon_bounds_the_search() {
        let (g, s) = setup(START);
        let goal = Goal::new(lits(&g, "lit(c4)"));
        assert_eq!(plan_minimal(&g, &s, &goal, &PlanOptions::with_horizon(3)), Err(PlanError::Unsat(3)));
        assert_eq!(plan_minimal(&g, &s, &goal, &PlanOptions::with_horizon(4)).unwrap().horizon(), 4);
    }

    #[test]
    fn unreachable_goal_stops_before_the_horizon() {
        let (g, s) = setup(START);
        let goal = Goal::new(lits(&g, "at(c1), at(c2)"));
        assert_eq!(plan_minimal(&g, &s, &goal, &PlanOptions::with_horizon(50)), Err(PlanError::Unsat(50)));
    }

    #[test]
    fn excluded_actions_are_never_tried() {
        let (g, s) = setup(START);
        let mut opts = PlanOptions::default();
        opts.exclude.insert("light".into());
        let r = plan_minimal(&g, &s, &Goal::new(lits(&g, "lit(c1)")), &opts);
        assert!(matches!(r, Err(PlanError::Unsat(_))));
    }

    #[test]
    fn budget_and_deadline_are_enforced() {
        let (g, s) = setup(START);
        let goal = Goal::new(lits(&g, "lit(c1), lit(c4)"));
        let opts = PlanOptions { state_budget: 2, ..Default::default() };
        assert!(matches!(plan_minimal(&g, &s, &goal, &opts), Err(PlanError::ResourceExhausted { .. })));
        let opts = PlanOptions { deadline: Some(Instant::now()), ..Default::default() };
        assert_eq!(plan_minimal(&g, &s, &goal, &opts), Err(PlanError::Timeout));
    }

    #[test]
    fn verification_reports_the_failing_step() {
        let (g, s) = setup(START);
        let goal = Goal::new(lits(&g, "lit(c2)"));
        let bad = [act(&g, "go(c2)"), act(&g, "go(c4)")];
        assert!(matches!(
            verify_plan(&g, &s, &bad, &goal),
            Verdict::FailsAt { step: 1, reason: FailReason::Inexecutable(_) }
        ));
        let short = [act(&g, "go(c2)")];
        assert_eq!(
            verify_plan(&g, &s, &short, &goal),
            Verdict::FailsAt { step: 1, reason: FailReason::GoalUnsatisfied }
        );
    }
}
