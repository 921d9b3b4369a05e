//! Simulated world at fine resolution: ground truth, noisy action outcomes,
//! observations and scripted exogenous events.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{ground, Atom, DomainError, GroundLit, GroundedDescription, SymbolKind, Term};
use crate::multires::{lift_observations, zoom, FineDescription};
use crate::semantics::{complete_state, successor, State, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("`{0}` is not a ground fine action")]
    UnknownAction(String),
    #[error("truth is not a legal fine state: {0}")]
    IllegalTruth(String),
    #[error("refinement names no observer")]
    NoObserver,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Success probabilities, recognition accuracy and durations per action family.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionModel {
    /// Family name (without `*`) to success probability. Unlisted families always succeed.
    pub success: BTreeMap<String, f64>,
    /// Probability that an object in the robot's room is recognised.
    pub recognition: f64,
    /// Family name to duration. Unlisted families take one unit.
    pub duration: BTreeMap<String, u64>,
    /// Duration of a move between cells of the same room.
    pub move_within_room: u64,
    /// Name of the movement family.
    pub move_family: String,
}

impl Default for ActionModel {
    fn default() -> Self {
        let success = [("move", 0.85), ("pickup", 0.95), ("putdown", 0.95)];
        let duration = [("move", 15), ("pickup", 5), ("putdown", 5), ("unlock", 5)];
        ActionModel {
            success: success.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            recognition: 0.9,
            duration: duration.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            move_within_room: 3,
            move_family: "move".into(),
        }
    }
}

impl ActionModel {
    /// Every action succeeds and every object in view is recognised.
    pub fn noise_free() -> Self {
        ActionModel { success: BTreeMap::new(), recognition: 1.0, ..Default::default() }
    }

    fn family(pred: &str) -> &str {
        pred.strip_suffix('*').unwrap_or(pred)
    }

    pub fn success_prob(&self, pred: &str) -> f64 {
        self.success.get(Self::family(pred)).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    /// Before the agent action with this index.
    Step(usize),
    /// First time the literals hold in the world, at either resolution.
    When(Vec<(Atom, bool)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExoEntry {
    pub trigger: Trigger,
    /// Exogenous action, coarse or fine.
    pub action: Atom,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExoScript {
    pub entries: Vec<ExoEntry>,
}

impl ExoScript {
    pub fn new(entries: Vec<ExoEntry>) -> Self {
        ExoScript { entries }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecVerdict {
    Success,
    NoEffect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: ExecVerdict,
    pub elapsed: u64,
    pub observations: Vec<(Atom, bool)>,
}

fn render_lits(lits: &[(Atom, bool)]) -> String {
    lits.iter()
        .map(|(a, v)| format!("{}{}", if *v { "" } else { "-" }, compact(a)))
        .collect::<Vec<_>>()
        .join(",")
}

fn compact(a: &Atom) -> String {
    a.to_string().replace(' ', "")
}

/// Ground truth of one trial.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub fine: Arc<FineDescription>,
    /// True basic fine atoms.
    pub truth: BTreeSet<Atom>,
    pub clock: u64,
    pub model: ActionModel,
    pub trace: Vec<String>,
    rng: ChaCha8Rng,
    fired: Vec<bool>,
    observer_fluent: String,
    robots: BTreeSet<String>,
    local: HashMap<BTreeSet<String>, Arc<GroundedDescription>>,
}

impl WorldState {
    pub fn new(
        fine: Arc<FineDescription>,
        truth: impl IntoIterator<Item = Atom>,
        model: ActionModel,
        seed: u64,
    ) -> Result<Self, ExecError> {
        let (sort, fluent) = fine.spec.observer.clone().ok_or(ExecError::NoObserver)?;
        let robots = fine.desc.signature.members(&sort);
        Ok(WorldState {
            fine,
            truth: truth.into_iter().collect(),
            clock: 0,
            model,
            trace: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            fired: Vec::new(),
            observer_fluent: fluent,
            robots,
            local: HashMap::new(),
        })
    }

    fn parent(&self, c: &str) -> String {
        self.fine.parent.get(c).cloned().unwrap_or_else(|| c.to_owned())
    }

    /// Coarse constants an action can touch: its arguments and, transitively,
    /// whatever the world relates to them.
    fn local_relcon(&self, seeds: impl IntoIterator<Item = String>) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = seeds.into_iter().map(|c| self.parent(&c)).collect();
        loop {
            let before = out.len();
            for a in &self.truth {
                if a.args.first().is_some_and(|t| out.contains(&self.parent(t.name()))) {
                    for t in &a.args {
                        out.insert(self.parent(t.name()));
                    }
                }
            }
            if out.len() == before {
                return out;
            }
        }
    }

    fn grounding(&mut self, relcon: &BTreeSet<String>) -> Result<Arc<GroundedDescription>, ExecError> {
        if let Some(g) = self.local.get(relcon) {
            return Ok(g.clone());
        }
        let z = zoom(&self.fine, relcon);
        let g = Arc::new(ground(&z.desc)?);
        self.local.insert(relcon.clone(), g.clone());
        Ok(g)
    }

    fn local_state(&self, g: &GroundedDescription) -> Result<State, ExecError> {
        let lits: Vec<_> = self
            .truth
            .iter()
            .filter_map(|a| g.atom_id(a))
            .map(|id| GroundLit::new(id, true))
            .collect();
        complete_state(g, &lits).map_err(|e| ExecError::IllegalTruth(e.to_string()))
    }

    /// Whole-world legality check; grounds the full fine description.
    pub fn check_legal(&self) -> Result<(), ExecError> {
        let g = ground(&self.fine.desc)?;
        for a in &self.truth {
            if g.atom_id(a).is_none() {
                return Err(ExecError::IllegalTruth(a.to_string()));
            }
        }
        self.local_state(&g).map(|_| ())
    }

    /// Applies an action to the truth. Returns whether it was executable.
    fn apply(&mut self, action: &Atom) -> Result<bool, ExecError> {
        let relcon = self.local_relcon(action.args.iter().map(|t| t.name().to_owned()));
        let g = self.grounding(&relcon)?;
        let a = g.action_id(action).ok_or_else(|| ExecError::UnknownAction(action.to_string()))?;
        let s = self.local_state(&g)?;
        match successor(&g, &s, a) {
            Transition::Next(t) => {
                for &b in &g.basic_atoms {
                    let atom = g.atom_to_ast(b);
                    if t.get(b) {
                        self.truth.insert(atom);
                    } else {
                        self.truth.remove(&atom);
                    }
                }
                Ok(true)
            }
            Transition::Inexecutable(_) | Transition::Inconsistent(_) => Ok(false),
        }
    }

    pub fn robot_cell(&self, robot: &str) -> Option<String> {
        self.truth
            .iter()
            .find(|a| a.pred == self.observer_fluent && a.args.first().is_some_and(|t| t.name() == robot))
            .and_then(|a| a.args.last().map(|t| t.name().to_owned()))
    }

    pub fn robot_room(&self, robot: &str) -> Option<String> {
        self.robot_cell(robot).map(|c| self.parent(&c))
    }

    fn duration(&self, action: &Atom, room_before: Option<String>) -> u64 {
        let family = ActionModel::family(&action.pred);
        let target = action.args.last().map(|t| self.parent(t.name()));
        if family == self.model.move_family && room_before.is_some() && room_before == target {
            return self.model.move_within_room;
        }
        self.model.duration.get(family).copied().unwrap_or(1)
    }

    /// Runs one concrete agent action and reports what the robot then sees.
    pub fn execute(&mut self, action: &Atom) -> Result<Outcome, ExecError> {
        let robot = action.args.first().map(|t| t.name().to_owned()).unwrap_or_default();
        let room_before = self.robot_room(&robot);
        let p = self.model.success_prob(&action.pred);
        let draw: f64 = self.rng.gen();
        let verdict = if draw < p && self.apply(action)? { ExecVerdict::Success } else { ExecVerdict::NoEffect };
        let elapsed = self.duration(action, room_before);
        self.clock += elapsed;
        let result = if verdict == ExecVerdict::Success { "ok" } else { "noeffect" };
        self.trace.push(format!("t={} kind=exec action={} result={result}", self.clock, compact(action)));
        let observations = self.observe(&robot);
        Ok(Outcome { verdict, elapsed, observations })
    }

    /// Records a mental or otherwise non-physical action in the trace.
    pub fn note(&mut self, action: &str) {
        self.trace.push(format!("t={} kind=exec action={action} result=ok", self.clock));
    }

    /// What `robot` perceives: its own cell, held parts, and every object part
    /// in its room (each missed with the model's recognition error).
    pub fn observe(&mut self, robot: &str) -> Vec<(Atom, bool)> {
        let Some(cell) = self.robot_cell(robot) else { return Vec::new() };
        let room = self.parent(&cell);
        let sig = &self.fine.desc.signature;
        let cells: Vec<String> = self.fine.components_of(&room).into_iter().map(str::to_owned).collect();
        let loc_args = sig.symbol(&self.observer_fluent).map(|(_, a)| a.clone()).unwrap_or_default();
        let parts: Vec<String> = loc_args
            .first()
            .map(|s| sig.members(s).into_iter().filter(|c| !self.robots.contains(c)).collect())
            .unwrap_or_default();
        let loc = |x: &str, c: &str| Atom::new(self.observer_fluent.clone(), vec![Term::Const(x.into()), Term::Const(c.into())]);
        let mut out = vec![(loc(robot, &cell), true)];
        let held_fluents: Vec<String> = self
            .fine
            .spec
            .observe
            .iter()
            .filter(|f| **f != self.observer_fluent)
            .filter(|f| sig.symbol(f).is_some_and(|(k, a)| k == SymbolKind::BasicFluent && a.len() == 2))
            .cloned()
            .collect();
        for x in &parts {
            let at = self
                .truth
                .iter()
                .find(|a| a.pred == self.observer_fluent && a.args[0].name() == x)
                .map(|a| a.args[1].name().to_owned());
            let in_room = at.as_ref().is_some_and(|c| self.parent(c) == room);
            let seen = in_room && self.rng.gen::<f64>() < self.model.recognition;
            if seen {
                out.push((loc(x, at.as_deref().unwrap_or_default()), true));
            } else if !in_room {
                for c in &cells {
                    out.push((loc(x, c), false));
                }
            }
            for f in &held_fluents {
                let atom = Atom::new(f.clone(), vec![Term::Const(robot.into()), Term::Const(x.clone())]);
                let v = self.truth.contains(&atom);
                out.push((atom, v));
            }
        }
        let line = render_lits(&out.iter().filter(|(_, v)| *v).cloned().collect::<Vec<_>>());
        self.trace.push(format!("t={} kind=obs robot={robot} room={room} seen={line}", self.clock));
        out
    }

    /// Coarse atoms true in the world, lifted through the component relation.
    pub fn coarse_view(&self) -> BTreeSet<Atom> {
        let pos: Vec<(Atom, bool)> = self.truth.iter().map(|a| (a.clone(), true)).collect();
        lift_observations(&self.fine, &pos)
            .map(|v| v.into_iter().map(|(a, _)| a).collect())
            .unwrap_or_default()
    }

    /// Whether every literal holds, fine literals against the truth and the rest
    /// against the coarse view.
    pub fn holds(&self, lits: &[(Atom, bool)]) -> bool {
        let coarse = self.coarse_view();
        lits.iter().all(|(a, v)| {
            let is_fine = self.fine.desc.signature.kind_of(&a.pred) == Some(SymbolKind::BasicFluent);
            let present = if is_fine { self.truth.contains(a) } else { coarse.contains(a) };
            present == *v
        })
    }

    /// Fine form of a coarse exogenous action: the starred symbol with each
    /// magnified constant replaced by its first component.
    fn fine_action(&self, action: &Atom) -> Atom {
        if action.pred.ends_with('*') || !self.fine.spec.is_magnified(&action.pred) {
            return action.clone();
        }
        let args = action
            .args
            .iter()
            .map(|t| {
                let first = self
                    .fine
                    .spec
                    .counterparts
                    .iter()
                    .flat_map(|c| c.components.iter())
                    .find(|(_, p)| p == t.name())
                    .map(|(f, _)| f.clone());
                Term::Const(first.unwrap_or_else(|| t.name().to_owned()))
            })
            .collect();
        Atom::new(format!("{}*", action.pred), args)
    }

    /// Fires every untriggered script entry whose condition holds before
    /// agent action `step`. Entries not executable in the world are skipped.
    pub fn inject(&mut self, script: &ExoScript, step: usize) -> Result<Vec<Atom>, ExecError> {
        self.fired.resize(script.entries.len(), false);
        let mut applied = Vec::new();
        for (i, e) in script.entries.iter().enumerate() {
            if self.fired[i] {
                continue;
            }
            let due = match &e.trigger {
                Trigger::Step(n) => *n == step,
                Trigger::When(lits) => self.holds(lits),
            };
            if !due {
                continue;
            }
            self.fired[i] = true;
            let fine = self.fine_action(&e.action);
            if self.apply(&fine)? {
                self.trace.push(format!("t={} kind=exo action={}", self.clock, compact(&fine)));
                applied.push(fine);
            } else {
                log::warn!("scripted {} not executable; skipped", e.action);
                self.trace.push(format!("t={} kind=exo action={} result=skipped", self.clock, compact(&fine)));
            }
        }
        Ok(applied)
    }

    pub fn trace_text(&self) -> String {
        let mut s = String::new();
        for l in &self.trace {
            let _ = writeln!(s, "{l}");
        }
        s
    }

}

/// Interface the controller drives, at either resolution.
pub trait World {
    fn execute(&mut self, action: &Atom) -> Result<Outcome, ExecError>;
    fn observe(&mut self, robot: &str) -> Vec<(Atom, bool)>;
    fn inject(&mut self, script: &ExoScript, step: usize) -> Result<Vec<Atom>, ExecError>;
    fn holds(&self, lits: &[(Atom, bool)]) -> bool;
    fn note(&mut self, action: &str);
    fn clock(&self) -> u64;
    fn trace(&self) -> &[String];
}

impl World for WorldState {
    fn execute(&mut self, action: &Atom) -> Result<Outcome, ExecError> {
        WorldState::execute(self, action)
    }
    fn observe(&mut self, robot: &str) -> Vec<(Atom, bool)> {
        WorldState::observe(self, robot)
    }
    fn inject(&mut self, script: &ExoScript, step: usize) -> Result<Vec<Atom>, ExecError> {
        WorldState::inject(self, script, step)
    }
    fn holds(&self, lits: &[(Atom, bool)]) -> bool {
        WorldState::holds(self, lits)
    }
    fn note(&mut self, action: &str) {
        WorldState::note(self, action)
    }
    fn clock(&self) -> u64 {
        self.clock
    }
    fn trace(&self) -> &[String] {
        &self.trace
    }
}

/// Ground truth kept at coarse resolution, for trials without refinement.
#[derive(Debug, Clone)]
pub struct CoarseWorld {
    pub g: Arc<GroundedDescription>,
    pub truth: State,
    pub clock: u64,
    pub model: ActionModel,
    pub trace: Vec<String>,
    rng: ChaCha8Rng,
    fired: Vec<bool>,
    loc: String,
    robots: BTreeSet<String>,
}

impl CoarseWorld {
    /// `observer` names the robot sort and its location fluent.
    pub fn new(
        g: Arc<GroundedDescription>,
        truth: &[Atom],
        observer: (String, String),
        model: ActionModel,
        seed: u64,
    ) -> Result<Self, ExecError> {
        let mut lits = Vec::new();
        for a in truth {
            let l = g.lit_from_ast(a, true)?;
            lits.push(l);
        }
        let truth = complete_state(&g, &lits).map_err(|e| ExecError::IllegalTruth(e.to_string()))?;
        let robots = g.desc.signature.members(&observer.0);
        let loc = observer.1.trim_end_matches('*').to_owned();
        Ok(CoarseWorld {
            g,
            truth,
            clock: 0,
            model,
            trace: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            fired: Vec::new(),
            loc,
            robots,
        })
    }

    pub fn robot_room(&self, robot: &str) -> Option<String> {
        self.g
            .atoms_of_pred(&self.loc)
            .find(|&a| self.truth.get(a) && self.g.atom_args(a)[0] == robot)
            .map(|a| self.g.atom_args(a)[1].to_owned())
    }

    fn apply(&mut self, action: &Atom) -> Result<bool, ExecError> {
        let a = self.g.action_id(action).ok_or_else(|| ExecError::UnknownAction(action.to_string()))?;
        match successor(&self.g, &self.truth, a) {
            Transition::Next(t) => {
                self.truth = t;
                Ok(true)
            }
            _ => Ok(false),
        }
    }
}

impl World for CoarseWorld {
    fn execute(&mut self, action: &Atom) -> Result<Outcome, ExecError> {
        let robot = action.args.first().map(|t| t.name().to_owned()).unwrap_or_default();
        let p = self.model.success_prob(&action.pred);
        let draw: f64 = self.rng.gen();
        let verdict = if draw < p && self.apply(action)? { ExecVerdict::Success } else { ExecVerdict::NoEffect };
        let elapsed = self.model.duration.get(ActionModel::family(&action.pred)).copied().unwrap_or(1);
        self.clock += elapsed;
        let result = if verdict == ExecVerdict::Success { "ok" } else { "noeffect" };
        self.trace.push(format!("t={} kind=exec action={} result={result}", self.clock, compact(action)));
        let observations = self.observe(&robot);
        Ok(Outcome { verdict, elapsed, observations })
    }

    /// The robot's room, every object's presence there, and what the robot holds.
    fn observe(&mut self, robot: &str) -> Vec<(Atom, bool)> {
        let Some(room) = self.robot_room(robot) else { return Vec::new() };
        let g = self.g.clone();
        let c = |s: &str| Term::Const(s.to_owned());
        let mut out = vec![(Atom::new(self.loc.clone(), vec![c(robot), c(&room)]), true)];
        let things: Vec<String> = g
            .desc
            .signature
            .symbol(&self.loc)
            .map(|(_, a)| g.desc.signature.members(&a[0]))
            .unwrap_or_default()
            .into_iter()
            .filter(|x| !self.robots.contains(x))
            .collect();
        let held: Vec<String> = self
            .g
            .desc
            .signature
            .basic_fluents
            .iter()
            .filter(|(n, a)| **n != self.loc && a.len() == 2 && self.robots.iter().any(|r| g.desc.signature.members(&a[0]).contains(r)))
            .map(|(n, _)| n.clone())
            .collect();
        for x in &things {
            let at = Atom::new(self.loc.clone(), vec![c(x), c(&room)]);
            let present = g.atom_id(&at).is_some_and(|id| self.truth.get(id));
            let seen = present && self.rng.gen::<f64>() < self.model.recognition;
            if seen || !present {
                out.push((at, seen));
            }
            for f in &held {
                let atom = Atom::new(f.clone(), vec![c(robot), c(x)]);
                if let Some(id) = g.atom_id(&atom) {
                    out.push((atom, self.truth.get(id)));
                }
            }
        }
        let line = render_lits(&out.iter().filter(|(_, v)| *v).cloned().collect::<Vec<_>>());
        self.trace.push(format!("t={} kind=obs robot={robot} room={room} seen={line}", self.clock));
        out
    }

    fn inject(&mut self, script: &ExoScript, step: usize) -> Result<Vec<Atom>, ExecError> {
        self.fired.resize(script.entries.len(), false);
        let mut applied = Vec::new();
        for (i, e) in script.entries.iter().enumerate() {
            if self.fired[i] {
                continue;
            }
            let due = match &e.trigger {
                Trigger::Step(n) => *n == step,
                Trigger::When(lits) => self.holds(lits),
            };
            if !due {
                continue;
            }
            self.fired[i] = true;
            if self.apply(&e.action)? {
                self.trace.push(format!("t={} kind=exo action={}", self.clock, compact(&e.action)));
                applied.push(e.action.clone());
            } else {
                log::warn!("scripted {} not executable; skipped", e.action);
                self.trace.push(format!("t={} kind=exo action={} result=skipped", self.clock, compact(&e.action)));
            }
        }
        Ok(applied)
    }

    fn holds(&self, lits: &[(Atom, bool)]) -> bool {
        lits.iter().all(|(a, v)| self.g.atom_id(a).is_some_and(|id| self.truth.get(id)) == *v)
    }

    fn note(&mut self, action: &str) {
        self.trace.push(format!("t={} kind=exec action={action} result=ok", self.clock));
    }

    fn clock(&self) -> u64 {
        self.clock
    }

    fn trace(&self) -> &[String] {
        &self.trace
    }
}
