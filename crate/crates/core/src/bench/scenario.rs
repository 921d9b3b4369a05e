use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::controller::{Domain, Task};
use crate::domain::{parse_domain, parse_ground_literals, Atom, GroundLit, Term};
use crate::executor::{ExoEntry, ExoScript, Trigger};
use crate::search::{plan_minimal, Goal, PlanOptions};
use crate::semantics::{complete_state, State};

pub const RA_DOMAIN: &str = include_str!("../../domains/ra.dom");

pub const GOAL: &str = "loc(book1, library), loc(book2, library), -in_hand(rob1, book1), -in_hand(rob1, book2)";

const ROOMS: [&str; 4] = ["office1", "office2", "kitchen", "library"];
const CELLS_PER_ROOM: usize = 4;

pub const SCENARIOS: std::ops::RangeInclusive<usize> = 1..=5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("no scenario {0}")]
    Unknown(usize),
    #[error("scenario {id} sampler found no solvable instance in {attempts} attempts")]
    Exhausted { id: usize, attempts: usize },
}

pub fn ra_domain() -> Domain {
    Domain::new(parse_domain(RA_DOMAIN).expect("bundled domain parses")).expect("bundled domain refines")
}

/// Where the robot, the books and the cup start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub robot: usize,
    pub book2: usize,
    pub cup: usize,
}

fn cell(room: usize, i: usize) -> String {
    format!("c{}", room * CELLS_PER_ROOM + i + 1)
}

fn atom(pred: &str, args: &[&str]) -> Atom {
    Atom::new(pred, args.iter().map(|a| Term::Const((*a).to_owned())).collect())
}

fn lits(text: &str) -> Vec<(Atom, bool)> {
    parse_ground_literals(text).expect("literal text is well formed")
}

fn room_index(name: &str) -> usize {
    ROOMS.iter().position(|r| *r == name).expect("known room")
}

/// The robot starts holding `book1`; beliefs match the world at the start.
fn base_task(layout: Layout, rng: &mut ChaCha8Rng) -> Task {
    let rc = cell(layout.robot, rng.gen_range(0..CELLS_PER_ROOM));
    let bc = cell(layout.book2, rng.gen_range(0..CELLS_PER_ROOM));
    let cc = cell(layout.cup, rng.gen_range(0..CELLS_PER_ROOM));
    let truth = vec![
        atom("loc*", &["rob1", &rc]),
        atom("loc*", &["book1", &rc]),
        atom("in_hand*", &["rob1", "book1"]),
        atom("loc*", &["book2", &bc]),
        atom("loc*", &["cup1_base", &cc]),
        atom("loc*", &["cup1_handle", &cc]),
    ];
    let mut beliefs = lits(&format!(
        "loc(rob1, {r}), loc(book1, {r}), in_hand(rob1, book1), loc(book2, {b}), loc(cup1, {c})",
        r = ROOMS[layout.robot],
        b = ROOMS[layout.book2],
        c = ROOMS[layout.cup]
    ));
    beliefs.extend(ROOMS.iter().map(|r| (atom("locked", &[r]), false)));
    Task { goal: lits(GOAL), initial_obs: beliefs, truth, script: ExoScript::default() }
}

fn belief_state(dom: &Domain, task: &Task) -> Option<State> {
    let l: Option<Vec<GroundLit>> = task.initial_obs.iter().map(|(a, v)| dom.g.lit_from_ast(a, *v).ok()).collect();
    complete_state(&dom.g, &l?).ok()
}

/// Rooms the robot is in after each action of the plan computed from its beliefs.
fn planned_rooms(dom: &Domain, task: &Task, start: usize) -> Option<Vec<usize>> {
    let s = belief_state(dom, task)?;
    let goal: Option<Vec<GroundLit>> = task.goal.iter().map(|(a, v)| dom.g.lit_from_ast(a, *v).ok()).collect();
    let plan = plan_minimal(&dom.g, &s, &Goal::new(goal?), &PlanOptions::default()).ok()?;
    let mut at = start;
    Some(
        plan.actions
            .iter()
            .map(|&a| {
                let args = dom.g.action_args(a);
                if dom.g.action_pred(a) == "move" {
                    at = room_index(args[1]);
                }
                at
            })
            .collect(),
    )
}

fn exo(trigger: Trigger, action: &str) -> ExoEntry {
    ExoEntry { trigger, action: crate::domain::parse_ground_term(action).expect("action text is well formed") }
}

/// Fills in the scenario's surprise, or `None` when the layout cannot host it.
fn script_for(id: usize, dom: &Domain, task: &Task, layout: Layout, rng: &mut ChaCha8Rng) -> Option<Vec<ExoEntry>> {
    let library = room_index("library");
    Some(match id {
        1 => vec![],
        2 => vec![exo(Trigger::Step(1), "exo_move(book2, library)")],
        3 => {
            let to = *(0..ROOMS.len()).filter(|&r| r != layout.book2).collect::<Vec<_>>().choose(rng)?;
            vec![exo(Trigger::Step(1), &format!("exo_move(book2, {})", ROOMS[to]))]
        }
        4 => {
            let rooms = planned_rooms(dom, task, layout.robot)?;
            let reach = rooms.iter().position(|&r| r == layout.book2).filter(|&i| i > 1)?;
            let mut ahead: Vec<usize> = rooms[1..reach].iter().copied().filter(|&r| r != layout.book2).collect();
            ahead.dedup();
            let to = *ahead.choose(rng)?;
            vec![exo(Trigger::Step(1), &format!("exo_move(book2, {})", ROOMS[to]))]
        }
        5 => {
            let to = *(0..ROOMS.len()).filter(|&r| r != library).collect::<Vec<_>>().choose(rng)?;
            vec![exo(
                Trigger::When(lits("loc(book1, library), -in_hand(rob1, book1), -loc(rob1, library)")),
                &format!("exo_move(book1, {})", ROOMS[to]),
            )]
        }
        _ => return None,
    })
}

/// Whether the goal is reachable from the true initial world.
fn solvable(dom: &Domain, task: &Task) -> bool {
    let Ok(lifted) = crate::multires::lift_observations(
        &dom.fine,
        &task.truth.iter().map(|a| (a.clone(), true)).collect::<Vec<_>>(),
    ) else {
        return false;
    };
    let init: Vec<GroundLit> = lifted.iter().filter_map(|(a, v)| dom.g.lit_from_ast(a, *v).ok()).collect();
    let Ok(s) = complete_state(&dom.g, &init) else { return false };
    let Some(goal) = task.goal.iter().map(|(a, v)| dom.g.lit_from_ast(a, *v).ok()).collect::<Option<Vec<_>>>() else {
        return false;
    };
    plan_minimal(&dom.g, &s, &Goal::new(goal), &PlanOptions::default()).is_ok()
}

pub const MAX_ATTEMPTS: usize = 100;

/// A random instance of scenario `id`: the robot holds `book1` in some room
/// other than the library, `book2` waits elsewhere, and the script realises
/// the scenario's surprise.
pub fn generate_scenario(dom: &Domain, id: usize, seed: u64) -> Result<Task, ScenarioError> {
    if !SCENARIOS.contains(&id) {
        return Err(ScenarioError::Unknown(id));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let library = room_index("library");
    let others: Vec<usize> = (0..ROOMS.len()).filter(|&r| r != library).collect();
    for _ in 0..MAX_ATTEMPTS {
        let layout = Layout {
            robot: *others.choose(&mut rng).expect("rooms"),
            book2: *others.choose(&mut rng).expect("rooms"),
            cup: rng.gen_range(0..ROOMS.len()),
        };
        let mut task = base_task(layout, &mut rng);
        let Some(script) = script_for(id, dom, &task, layout, &mut rng) else { continue };
        task.script = ExoScript::new(script);
        if solvable(dom, &task) {
            return Ok(task);
        }
    }
    Err(ScenarioError::Exhausted { id, attempts: MAX_ATTEMPTS })
}

/// The two narrated runs: `book2` carried to the library behind the robot's
/// back, and `book1` taken from the library after delivery.
pub fn example_trace_task(n: usize) -> Option<Task> {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let kitchen = room_index("kitchen");
    let (book2, script) = match n {
        1 => (room_index("office2"), vec![exo(Trigger::Step(1), "exo_move(book2, library)")]),
        2 => (
            kitchen,
            vec![exo(
                Trigger::When(lits("loc(book1, library), -in_hand(rob1, book1), -loc(rob1, library)")),
                "exo_move(book1, kitchen)",
            )],
        ),
        _ => return None,
    };
    let mut task = base_task(Layout { robot: kitchen, book2, cup: room_index("office1") }, &mut rng);
    task.script = ExoScript::new(script);
    Some(task)
}
