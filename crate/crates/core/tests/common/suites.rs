//! Exhaustive comparisons against the brute-force oracles, shared by the
//! oracle tests and the acceptance run.

use super::{action, grounded, lits, oracle, CHAIN, DIAG, DOORS, MINI_RA};
use mrati::diagnosis::{consistent_model, History};
use mrati::domain::{ActionId, GroundLit, GroundedDescription};
use mrati::search::{plan_minimal, verify_plan, Goal, PlanOptions};
use mrati::semantics::{successor, State, Transition};

pub const ORACLE_DOMAINS: [(&str, &str); 3] = [("mini_ra", MINI_RA), ("doors", DOORS), ("chain", CHAIN)];

/// Every (state, action) pair checked against the transition oracle.
pub fn successor_cases(name: &str, text: &str) -> Result<usize, String> {
    let g = grounded(text);
    let states = oracle::legal_states(&g);
    let mut checked = 0;
    for s in &states {
        for a in 0..g.num_actions() as u32 {
            let expected = oracle::successors(&g, &states, s, a);
            let ok = match successor(&g, s, a) {
                Transition::Next(t) => expected == vec![t],
                Transition::Inexecutable(_) => !oracle::executable(&g, s, a),
                Transition::Inconsistent(_) => expected.is_empty() && oracle::executable(&g, s, a),
            };
            if !ok {
                return Err(format!("{name}: {} in {:?}", g.action_text(a), s.describe(&g)));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Every (state, goal) pair checked against breadth-first distances.
pub fn planner_cases(name: &str, text: &str) -> Result<usize, String> {
    let g = grounded(text);
    let graph = oracle::StateGraph::build(&g);
    let mut goals: Vec<Goal> = graph
        .states
        .iter()
        .map(|t| Goal::new(g.basic_atoms.iter().map(|b| GroundLit::new(*b, t.get(*b))).collect()))
        .collect();
    for &b in &g.basic_atoms {
        goals.push(Goal::new(vec![GroundLit::new(b, true)]));
        goals.push(Goal::new(vec![GroundLit::new(b, false)]));
    }
    let mut checked = 0;
    for (i, init) in graph.states.iter().enumerate() {
        let dist = graph.distances(i);
        for goal in &goals {
            let want = graph.goal_distance(&dist, goal);
            let got = plan_minimal(&g, init, goal, &PlanOptions::with_horizon(12));
            match (want, got) {
                (Some(d), Ok(p)) if p.horizon() == d && verify_plan(&g, init, &p.actions, goal).reaches() => {}
                (None, Err(_)) => {}
                (w, got) => return Err(format!("{name}: oracle {w:?}, planner {got:?}")),
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Default exceptions of an initial state: defaults whose body holds but whose
/// head does not, unless every state agreeing with the step-0 observations
/// already refutes the head.
fn exceptions(g: &GroundedDescription, s0: &State, agreeing: &[&State]) -> usize {
    g.defaults
        .iter()
        .filter(|d| s0.holds_all(&d.body) && !s0.holds(d.head))
        .filter(|d| agreeing.iter().any(|s| s.holds(d.head)))
        .count()
}

pub fn consistent(g: &GroundedDescription, s0: &State, h: &History, ins: &[(usize, ActionId)]) -> bool {
    let mut s = s0.clone();
    for step in 0..=h.current_step {
        if !h.observations_at(step).all(|l| s.holds(l)) {
            return false;
        }
        if step == h.current_step {
            break;
        }
        let mut acts: Vec<ActionId> = ins.iter().filter(|(st, _)| *st == step).map(|(_, a)| *a).collect();
        acts.extend(h.occurred_at(step));
        for a in acts {
            match successor(g, &s, a) {
                Transition::Next(t) => s = t,
                _ => return false,
            }
        }
    }
    true
}

/// Every sequence of up to `k` insertions, with steps non-decreasing.
fn insertion_sets(steps: usize, exo: &[ActionId], k: usize) -> Vec<Vec<(usize, ActionId)>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for seq in &frontier {
            let lo = seq.last().map_or(0, |(s, _): &(usize, ActionId)| *s);
            for st in lo..steps {
                for &x in exo {
                    let mut v = seq.clone();
                    v.push((st, x));
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn oracle_cost(g: &GroundedDescription, states: &[State], h: &History, k: usize) -> Option<(usize, usize)> {
    let exo: Vec<ActionId> = g.exogenous_actions().collect();
    let sets = insertion_sets(h.current_step, &exo, k);
    let mut best: Option<(usize, usize)> = None;
    let agreeing: Vec<&State> = states.iter().filter(|s| h.observations_at(0).all(|l| s.holds(l))).collect();
    for s0 in &agreeing {
        let exc = exceptions(g, s0, &agreeing);
        for ins in &sets {
            let cost = (ins.len(), exc);
            if best.is_some_and(|b| b <= cost) {
                continue;
            }
            if consistent(g, s0, h, ins) {
                best = Some(cost);
            }
        }
    }
    best
}

/// All 3-step histories over the two-room diagnosis domain. Returns the
/// number checked and how many needed an exogenous action.
pub fn diagnosis_cases() -> Result<(usize, usize), String> {
    let g = grounded(DIAG);
    let states = oracle::legal_states(&g);
    let step_actions: Vec<Option<ActionId>> = std::iter::once(None)
        .chain(["move(rob, a)", "move(rob, b)", "pickup(rob, bk)", "putdown(rob, bk)"].iter().map(|a| Some(action(&g, a))))
        .collect();
    let obs_choices: Vec<Vec<GroundLit>> = vec![
        vec![],
        lits(&g, "loc(bk, a)"),
        lits(&g, "-loc(bk, a)"),
        lits(&g, "in_hand(rob, bk)"),
    ];
    let mut checked = 0;
    let mut with_exo = 0;
    let first_obs = ["", ", loc(bk, b)", ", -loc(bk, a)", ", -loc(bk, b)"];
    for (start, extra) in ["a", "b"].iter().flat_map(|s| first_obs.iter().map(move |o| (s, o))) {
        for a0 in &step_actions {
            for a1 in &step_actions {
                for a2 in &step_actions {
                    for o1 in &obs_choices {
                        for o3 in &obs_choices {
                            let mut h = History::new();
                            for l in lits(&g, &format!("loc(rob, {start}), -in_hand(rob, bk){extra}")) {
                                h.observe(l, 0).map_err(|e| e.to_string())?;
                            }
                            for (i, a) in [a0, a1, a2].into_iter().enumerate() {
                                if i == 1 {
                                    for l in o1 {
                                        h.observe(*l, 1).map_err(|e| e.to_string())?;
                                    }
                                }
                                match a {
                                    Some(a) => h.happened(*a, i).map_err(|e| e.to_string())?,
                                    None => h.current_step = i + 1,
                                }
                            }
                            for l in o3 {
                                h.observe(*l, 3).map_err(|e| e.to_string())?;
                            }
                            let want = oracle_cost(&g, &states, &h, 3);
                            let got = consistent_model(&g, &h, 3).ok();
                            if got.as_ref().map(|m| m.explanation.cost()) != want {
                                return Err(format!("cost differs from oracle {want:?} on\n{}", h.to_log(&g)));
                            }
                            if let Some(m) = got {
                                let ins: Vec<(usize, ActionId)> =
                                    m.explanation.exogenous.iter().map(|(a, s)| (*s, *a)).collect();
                                let fits = consistent(&g, &m.trajectory[0], &h, &ins)
                                    && (0..=h.current_step)
                                        .all(|step| h.observations_at(step).all(|l| m.trajectory[step].holds(l)));
                                if !fits {
                                    return Err(format!("model does not fit\n{}", h.to_log(&g)));
                                }
                                with_exo += usize::from(m.explanation.cost().0 > 0);
                            }
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    Ok((checked, with_exo))
}
