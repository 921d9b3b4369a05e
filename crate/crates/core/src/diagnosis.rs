//! Histories, initial-state candidates, and minimal explanations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::domain::{parse_ground_term, ActionId, AtomId, DomainError, GroundLit, GroundedDescription};
use crate::search::Goal;
use crate::semantics::{complete_state, propagate, successor, State, Transition};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Obs { lit: GroundLit, step: usize },
    Hpd { action: ActionId, step: usize },
    NotHpd { action: ActionId, step: usize },
    Attempt { action: ActionId, step: usize },
    /// Mental action such as `start(1)`; no effect on the domain.
    Mental { name: String, step: usize },
}

impl Record {
    pub fn step(&self) -> usize {
        match self {
            Record::Obs { step, .. }
            | Record::Hpd { step, .. }
            | Record::NotHpd { step, .. }
            | Record::Attempt { step, .. }
            | Record::Mental { step, .. } => *step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistoryError {
    #[error("record at step {step} is after the current step {current}")]
    FutureStep { step: usize, current: usize },
    #[error("action already has a verdict at step {0}")]
    DuplicateVerdict(usize),
    #[error("line {line}: {message}")]
    BadLog { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct History {
    pub records: Vec<Record>,
    pub current_step: usize,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    fn check_step(&self, step: usize) -> Result<(), HistoryError> {
        if step > self.current_step {
            return Err(HistoryError::FutureStep { step, current: self.current_step });
        }
        Ok(())
    }

    pub fn observe(&mut self, lit: GroundLit, step: usize) -> Result<(), HistoryError> {
        self.check_step(step)?;
        let rec = Record::Obs { lit, step };
        if !self.records.contains(&rec) {
            self.records.push(rec);
        }
        Ok(())
    }

    pub fn attempt(&mut self, action: ActionId, step: usize) -> Result<(), HistoryError> {
        self.check_step(step)?;
        self.records.push(Record::Attempt { action, step });
        Ok(())
    }

    fn verdict_exists(&self, step: usize) -> bool {
        self.records
            .iter()
            .any(|r| matches!(r, Record::Hpd { step: s, .. } | Record::NotHpd { step: s, .. } if *s == step))
    }

    /// Records that the action occurred at `step` and advances the clock past it.
    pub fn happened(&mut self, action: ActionId, step: usize) -> Result<(), HistoryError> {
        self.check_step(step)?;
        if self.verdict_exists(step) {
            return Err(HistoryError::DuplicateVerdict(step));
        }
        self.records.push(Record::Hpd { action, step });
        self.current_step = self.current_step.max(step + 1);
        Ok(())
    }

    /// Records that an attempted action had no effect. The step is still used up.
    pub fn not_happened(&mut self, action: ActionId, step: usize) -> Result<(), HistoryError> {
        self.check_step(step)?;
        if self.verdict_exists(step) {
            return Err(HistoryError::DuplicateVerdict(step));
        }
        self.records.push(Record::NotHpd { action, step });
        self.current_step = self.current_step.max(step + 1);
        Ok(())
    }

    pub fn mental(&mut self, name: impl Into<String>, step: usize) -> Result<(), HistoryError> {
        self.check_step(step)?;
        self.records.push(Record::Mental { name: name.into(), step });
        Ok(())
    }

    pub fn observations_at(&self, step: usize) -> impl Iterator<Item = GroundLit> + '_ {
        self.records.iter().filter_map(move |r| match r {
            Record::Obs { lit, step: s } if *s == step => Some(*lit),
            _ => None,
        })
    }

    /// Physical action applied between `step` and `step + 1`, if any.
    pub fn occurred_at(&self, step: usize) -> Option<ActionId> {
        self.records.iter().find_map(|r| match r {
            Record::Hpd { action, step: s } if *s == step => Some(*action),
            _ => None,
        })
    }

    /// One record per line in the order recorded.
    pub fn to_log(&self, g: &GroundedDescription) -> String {
        let mut out = String::new();
        for r in &self.records {
            match r {
                Record::Obs { lit, step } => {
                    writeln!(out, "obs({}, {}, {step}).", g.atom_text(lit.atom), lit.positive)
                }
                Record::Hpd { action, step } => writeln!(out, "hpd({}, {step}).", g.action_text(*action)),
                Record::NotHpd { action, step } => writeln!(out, "nothpd({}, {step}).", g.action_text(*action)),
                Record::Attempt { action, step } => writeln!(out, "attempt({}, {step}).", g.action_text(*action)),
                Record::Mental { name, step } => writeln!(out, "hpd({name}, {step})."),
            }
            .expect("write to string");
        }
        out
    }

    pub fn from_log(g: &GroundedDescription, text: &str) -> Result<History, HistoryError> {
        let mut h = History::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| HistoryError::BadLog { line: i + 1, message };
            let body = line.strip_suffix('.').unwrap_or(line);
            let (kind, rest) = body.split_once('(').ok_or_else(|| bad("expected a record".into()))?;
            let inner = rest.strip_suffix(')').ok_or_else(|| bad("unbalanced parentheses".into()))?;
            let args = split_args(inner);
            let step = args
                .last()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| bad("missing step".into()))?;
            let parsed = parse_ground_term(args[0]);
            let atom = || parsed.clone().map_err(|e| bad(e.to_string()));
            let rec = match (kind.trim(), args.len()) {
                ("obs", 3) => {
                    let positive = match args[1] {
                        "true" => true,
                        "false" => false,
                        other => return Err(bad(format!("bad truth value `{other}`"))),
                    };
                    let lit = g.lit_from_ast(&atom()?, positive).map_err(|e| bad(e.to_string()))?;
                    Record::Obs { lit, step }
                }
                (kind @ ("hpd" | "nothpd" | "attempt"), 2) => {
                    match (parsed.as_ref().ok().and_then(|a| g.action_id(a)), kind) {
                        (Some(action), "hpd") => Record::Hpd { action, step },
                        (Some(action), "nothpd") => Record::NotHpd { action, step },
                        (Some(action), _) => Record::Attempt { action, step },
                        (None, "hpd") => Record::Mental { name: args[0].to_owned(), step },
                        (None, _) => return Err(bad(format!("unknown action `{}`", args[0]))),
                    }
                }
                (other, _) => return Err(bad(format!("unknown record `{other}`"))),
            };
            h.current_step = match rec {
                Record::Hpd { .. } | Record::NotHpd { .. } => h.current_step.max(step + 1),
                _ => h.current_step.max(step),
            };
            h.records.push(rec);
        }
        Ok(h)
    }
}

/// Top-level comma-separated arguments, nested parentheses kept whole.
fn split_args(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim());
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Explanation {
    /// `(default index, default head)` for every default not applied.
    pub default_exceptions: Vec<(usize, GroundLit)>,
    /// `(exogenous action, step)`, applied before the agent action of that step.
    pub exogenous: Vec<(ActionId, usize)>,
}

impl Explanation {
    pub fn cost(&self) -> (usize, usize) {
        (self.exogenous.len(), self.default_exceptions.len())
    }

    pub fn render(&self, g: &GroundedDescription) -> Vec<String> {
        let mut out: Vec<String> = self
            .exogenous
            .iter()
            .map(|(a, s)| format!("{} at {s}", g.action_text(*a)))
            .collect();
        out.extend(self.default_exceptions.iter().map(|(_, l)| format!("not {}", g.lit_text(*l))));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelOfHistory {
    pub trajectory: Vec<State>,
    pub explanation: Explanation,
}

impl ModelOfHistory {
    pub fn current(&self) -> &State {
        self.trajectory.last().expect("trajectory has an initial state")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosisError {
    #[error("no model of the history: {0}")]
    NoModel(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

pub const DEFAULT_MAX_EXOGENOUS: usize = 2;

/// Initial state with the defaults in `exceptions` not applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialCandidate {
    pub state: State,
    pub exceptions: Vec<(usize, GroundLit)>,
}

/// One way to settle a family of defaults sharing a head predicate and first argument.
#[derive(Debug, Clone)]
struct FamilyOption {
    lits: Vec<GroundLit>,
    /// Default whose head is asserted, if any.
    applied: Option<usize>,
    exceptions: Vec<usize>,
}

/// Defaults grouped into families. A default whose head is already refuted by
/// what the step-0 observations force is dropped rather than counted as an exception.
fn default_families(g: &GroundedDescription, forced: &[i8]) -> Vec<Vec<FamilyOption>> {
    let refuted = |l: GroundLit| forced[l.atom as usize] == i8::from(!l.positive);
    let mut groups: BTreeMap<(u32, Option<u32>), Vec<usize>> = BTreeMap::new();
    for (i, d) in g.defaults.iter().enumerate() {
        let atom = &g.atoms[d.head.atom as usize];
        groups.entry((atom.pred, atom.args.first().copied())).or_default().push(i);
    }
    let mut out = Vec::new();
    for ((pred, first), mut ids) in groups {
        ids.retain(|d| !refuted(g.defaults[*d].head));
        ids.sort_by_key(|i| (g.defaults[*i].priority, *i));
        let mut options = Vec::new();
        for (j, &d) in ids.iter().enumerate() {
            options.push(FamilyOption {
                lits: vec![g.defaults[d].head],
                applied: Some(d),
                exceptions: ids[..j].to_vec(),
            });
        }
        // Every default excepted: the family's atoms are free.
        let members: Vec<AtomId> = g
            .atoms_of_pred(&g.preds[pred as usize])
            .filter(|a| g.atoms[*a as usize].args.first().copied() == first)
            .collect();
        for &a in &members {
            let lit = GroundLit::new(a, true);
            if ids.iter().any(|d| g.defaults[*d].head == lit) {
                continue;
            }
            options.push(FamilyOption { lits: vec![lit], applied: None, exceptions: ids.clone() });
        }
        options.push(FamilyOption {
            lits: members.iter().map(|a| GroundLit::new(*a, false)).collect(),
            applied: None,
            exceptions: ids.clone(),
        });
        out.push(options);
    }
    out
}

fn contradicts(lits: &[GroundLit], obs: &[GroundLit]) -> bool {
    lits.iter().any(|l| obs.contains(&l.negate()))
}

/// Initial states consistent with the step-0 observations, in non-decreasing
/// number of default exceptions. Within one count, families are ordered by
/// head predicate and first argument and options by priority.
pub fn initial_state_candidates(g: &GroundedDescription, history: &History) -> Vec<InitialCandidate> {
    let obs0: Vec<GroundLit> = history.observations_at(0).collect();
    let Ok(forced) = propagate(g, &obs0) else { return Vec::new() };
    let families: Vec<Vec<FamilyOption>> = default_families(g, &forced)
        .into_iter()
        .map(|opts| opts.into_iter().filter(|o| !contradicts(&o.lits, &obs0)).collect())
        .collect();
    let max_cost: usize = families
        .iter()
        .map(|f| f.iter().map(|o| o.exceptions.len()).max().unwrap_or(0))
        .sum();
    let mut out = Vec::new();
    for e in 0..=max_cost {
        let mut chosen = Vec::new();
        combos(g, &families, 0, e, &mut chosen, &obs0, &mut out);
    }
    out
}

fn combos<'a>(
    g: &GroundedDescription,
    families: &'a [Vec<FamilyOption>],
    idx: usize,
    budget: usize,
    chosen: &mut Vec<&'a FamilyOption>,
    obs0: &[GroundLit],
    out: &mut Vec<InitialCandidate>,
) {
    if idx == families.len() {
        if budget != 0 {
            return;
        }
        let mut partial: Vec<GroundLit> = obs0.to_vec();
        for o in chosen.iter() {
            for l in &o.lits {
                if !partial.contains(l) {
                    partial.push(*l);
                }
            }
        }
        let Ok(state) = complete_state(g, &partial) else { return };
        let bodies_hold = chosen
            .iter()
            .filter_map(|o| o.applied)
            .all(|d| state.holds_all(&g.defaults[d].body));
        if !bodies_hold {
            return;
        }
        let mut exceptions: Vec<(usize, GroundLit)> = chosen
            .iter()
            .flat_map(|o| o.exceptions.iter().map(|d| (*d, g.defaults[*d].head)))
            .collect();
        exceptions.sort();
        out.push(InitialCandidate { state, exceptions });
        return;
    }
    for o in &families[idx] {
        if o.exceptions.len() > budget {
            continue;
        }
        chosen.push(o);
        combos(g, families, idx + 1, budget - o.exceptions.len(), chosen, obs0, out);
        chosen.pop();
    }
}

struct Diagnoser<'a> {
    g: &'a GroundedDescription,
    history: &'a History,
    obs: Vec<Vec<GroundLit>>,
    agent: Vec<Option<ActionId>>,
    exo: Vec<ActionId>,
}

enum Outcome {
    Consistent(Vec<State>),
    /// First step whose state cannot be reached or contradicts an observation.
    ViolatedAt(usize, Vec<State>),
}

impl Diagnoser<'_> {
    /// Simulates from `states[from]` with the given insertions, sorted by step.
    fn simulate(&self, mut states: Vec<State>, from: usize, inserted: &[(ActionId, usize)]) -> Outcome {
        states.truncate(from + 1);
        let n = self.history.current_step;
        let mut i = from;
        loop {
            if !states[i].holds_all(&self.obs[i]) {
                return Outcome::ViolatedAt(i, states);
            }
            if i == n {
                return Outcome::Consistent(states);
            }
            let mut s = states[i].clone();
            for (x, _) in inserted.iter().filter(|(_, st)| *st == i) {
                match successor(self.g, &s, *x) {
                    Transition::Next(t) => s = t,
                    _ => return Outcome::ViolatedAt(i + 1, states),
                }
            }
            if let Some(a) = self.agent[i] {
                match successor(self.g, &s, a) {
                    Transition::Next(t) => s = t,
                    _ => return Outcome::ViolatedAt(i + 1, states),
                }
            }
            states.push(s);
            i += 1;
        }
    }

    /// Exact search for `k` more insertions at steps no earlier than `min_step`.
    fn search(
        &self,
        states: Vec<State>,
        from: usize,
        inserted: &mut Vec<(ActionId, usize)>,
        min_step: usize,
        k: usize,
    ) -> Option<Vec<State>> {
        match self.simulate(states, from, inserted) {
            Outcome::Consistent(t) => Some(t),
            Outcome::ViolatedAt(_, _) if k == 0 => None,
            Outcome::ViolatedAt(t, states) => {
                for j in min_step..t {
                    let base = self.state_before_agent(&states, j, inserted);
                    let Some(base) = base else { continue };
                    for &x in &self.exo {
                        let Transition::Next(next) = successor(self.g, &base, x) else { continue };
                        if next == base {
                            continue;
                        }
                        inserted.push((x, j));
                        if let Some(traj) = self.search(states.clone(), j, inserted, j, k - 1) {
                            return Some(traj);
                        }
                        inserted.pop();
                    }
                }
                None
            }
        }
    }

    /// State at step `j` after the insertions already placed at `j`.
    fn state_before_agent(&self, states: &[State], j: usize, inserted: &[(ActionId, usize)]) -> Option<State> {
        let mut s = states.get(j)?.clone();
        for (x, _) in inserted.iter().filter(|(_, st)| *st == j) {
            s = successor(self.g, &s, *x).state()?;
        }
        Some(s)
    }
}

/// Model of the history with the fewest exogenous insertions, then the fewest
/// default exceptions. Insertions are tried earliest step first and lowest
/// action id first.
pub fn consistent_model(g: &GroundedDescription, history: &History, max_exogenous: usize) -> Result<ModelOfHistory, DiagnosisError> {
    let n = history.current_step;
    let mut obs = vec![Vec::new(); n + 1];
    for r in &history.records {
        if let Record::Obs { lit, step } = r {
            obs[*step].push(*lit);
        }
    }
    let agent = (0..n).map(|i| history.occurred_at(i)).collect();
    let d = Diagnoser { g, history, obs, agent, exo: g.exogenous_actions().collect() };
    let candidates = initial_state_candidates(g, history);
    if candidates.is_empty() {
        return Err(DiagnosisError::NoModel("no initial state agrees with the step-0 observations".into()));
    }
    for k in 0..=max_exogenous {
        for c in &candidates {
            let mut inserted = Vec::new();
            if let Some(trajectory) = d.search(vec![c.state.clone()], 0, &mut inserted, 0, k) {
                inserted.sort_by_key(|(a, s)| (*s, *a));
                return Ok(ModelOfHistory {
                    trajectory,
                    explanation: Explanation { default_exceptions: c.exceptions.clone(), exogenous: inserted },
                });
            }
        }
    }
    Err(DiagnosisError::NoModel(format!(
        "observations cannot be explained with at most {max_exogenous} exogenous actions"
    )))
}

pub fn goal_achieved(model: &ModelOfHistory, goal: &Goal) -> bool {
    goal.holds(model.current())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{action, grounded, lits, ROOMS};

    #[test]
    fn records_cannot_be_added_out_of_order() {
        let g = grounded(ROOMS);
        let mv = action(&g, "move(rob, b)");
        let mut h = History::new();
        assert_eq!(h.observe(lits(&g, "loc(rob, a)")[0], 1), Err(HistoryError::FutureStep { step: 1, current: 0 }));
        h.attempt(mv, 0).unwrap();
        h.happened(mv, 0).unwrap();
        assert_eq!(h.current_step, 1);
        assert_eq!(h.not_happened(mv, 0), Err(HistoryError::DuplicateVerdict(0)));
        assert_eq!(h.occurred_at(0), Some(mv));
    }

    #[test]
    fn malformed_logs_are_rejected() {
        let g = grounded(ROOMS);
        assert!(matches!(History::from_log(&g, "obs(loc(rob, a), maybe, 0).\n"), Err(HistoryError::BadLog { line: 1, .. })));
        assert!(matches!(History::from_log(&g, "attempt(fly(rob), 0).\n"), Err(HistoryError::BadLog { .. })));
        let h = History::from_log(&g, "hpd(start(1), 0).\n").unwrap();
        assert_eq!(h.records, [Record::Mental { name: "start(1)".into(), step: 0 }]);
    }

    #[test]
    fn defaults_fill_what_was_not_observed() {
        let g = grounded(ROOMS);
        let mut h = History::new();
        for l in lits(&g, "loc(rob, b), -in_hand(rob, bk)") {
            h.observe(l, 0).unwrap();
        }
        let m = consistent_model(&g, &h, 0).unwrap();
        assert!(m.current().holds_all(&lits(&g, "loc(bk, a)")));
        assert_eq!(m.explanation.cost(), (0, 0));
    }

    #[test]
    fn surprise_is_explained_by_the_cheapest_story() {
        let g = grounded(ROOMS);
        let mv = action(&g, "move(rob, b)");
        let mut h = History::new();
        for l in lits(&g, "loc(rob, a), -in_hand(rob, bk)") {
            h.observe(l, 0).unwrap();
        }
        h.attempt(mv, 0).unwrap();
        h.happened(mv, 0).unwrap();
        h.observe(lits(&g, "loc(bk, b)")[0], 1).unwrap();
        // Unseen at step 0, so the book was simply never in `a`.
        let m = consistent_model(&g, &h, 2).unwrap();
        assert_eq!(m.explanation.cost(), (0, 1));
        assert_eq!(m.explanation.render(&g), ["not loc(bk, a)"]);

        let mut h = History::new();
        for l in lits(&g, "loc(rob, a), loc(bk, a), -in_hand(rob, bk)") {
            h.observe(l, 0).unwrap();
        }
        h.attempt(mv, 0).unwrap();
        h.happened(mv, 0).unwrap();
        h.observe(lits(&g, "loc(bk, b)")[0], 1).unwrap();
        assert!(matches!(consistent_model(&g, &h, 0), Err(DiagnosisError::NoModel(_))));
        let m = consistent_model(&g, &h, 1).unwrap();
        assert_eq!(m.explanation.render(&g), ["exo_move(bk, b) at 0"]);
        assert_eq!(m.trajectory.len(), 2);
    }

    #[test]
    fn contradictory_observations_have_no_model() {
        let g = grounded(ROOMS);
        let mut h = History::new();
        for l in lits(&g, "loc(rob, a), loc(rob, b)") {
            h.observe(l, 0).unwrap();
        }
        assert!(initial_state_candidates(&g, &h).is_empty());
        assert!(consistent_model(&g, &h, 2).is_err());
    }
}
