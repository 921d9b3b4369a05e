//! The agent loop: coarse reasoning with the intention layer or a plain
//! planner, refinement and zooming of each coarse action, execution in a
//! simulated world, and lifting of what was seen back to the coarse history.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::diagnosis::{consistent_model, History, DEFAULT_MAX_EXOGENOUS};
use crate::domain::{
    ground_with_budget, ActionId, Atom, AtomKind, DomainError, GroundLit, GroundedDescription, SystemDescription,
    DEFAULT_GROUNDING_BUDGET,
};
use crate::executor::{ActionModel, CoarseWorld, ExecError, ExoScript, World, WorldState};
use crate::intention::{advance, create_activity, next_intended_action, ActionVerdict, IntendedAction, MentalState};
use crate::multires::{fine_goal, lift_observations, refine, relevant_constants, zoom, FineDescription, RefineError};
use crate::search::{plan_minimal, Goal, PlanError, PlanOptions, DEFAULT_COARSE_HORIZON, DEFAULT_FINE_HORIZON};
use crate::semantics::{complete_state, direct_effects, successor, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Mode {
    Ati,
    Tp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// Coarse actions run directly in a coarse world.
    Coarse,
    /// Each coarse action is refined and run as concrete actions.
    Fine { zoom: bool },
}

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub mode: Mode,
    pub resolution: Resolution,
    pub max_horizon: usize,
    pub fine_horizon: usize,
    pub fine_timeout: Duration,
    pub max_exogenous: usize,
    /// Coarse actions attempted before the trial is abandoned.
    pub max_actions: usize,
    /// Concrete-level replans allowed per coarse action.
    pub max_fine_replans: usize,
    pub grounding_budget: u128,
    pub seed: u64,
    pub model: ActionModel,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            mode: Mode::Ati,
            resolution: Resolution::Coarse,
            max_horizon: DEFAULT_COARSE_HORIZON,
            fine_horizon: DEFAULT_FINE_HORIZON,
            fine_timeout: Duration::from_secs(60),
            max_exogenous: DEFAULT_MAX_EXOGENOUS,
            max_actions: 60,
            max_fine_replans: 4,
            grounding_budget: DEFAULT_GROUNDING_BUDGET,
            seed: 0,
            model: ActionModel::noise_free(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControllerError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("{0}")]
    Invalid(String),
}

/// Coarse description, its grounding and its refinement, shared across trials.
#[derive(Debug, Clone)]
pub struct Domain {
    pub coarse: SystemDescription,
    pub g: Arc<GroundedDescription>,
    pub fine: Arc<FineDescription>,
}

impl Domain {
    pub fn new(coarse: SystemDescription) -> Result<Self, ControllerError> {
        let g = Arc::new(crate::domain::ground(&coarse)?);
        let fine = Arc::new(refine(&coarse)?);
        Ok(Domain { coarse, g, fine })
    }

    pub fn robot(&self) -> Result<String, ControllerError> {
        let (sort, _) = self.fine.spec.observer.clone().ok_or_else(|| ControllerError::Invalid("no observer".into()))?;
        self.fine
            .desc
            .signature
            .members(&sort)
            .into_iter()
            .next()
            .ok_or_else(|| ControllerError::Invalid(format!("sort `{sort}` is empty")))
    }
}

/// One trial: the goal, what the robot initially believes, the true fine
/// world, and the scripted surprises.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub goal: Vec<(Atom, bool)>,
    pub initial_obs: Vec<(Atom, bool)>,
    /// True basic fine atoms.
    pub truth: Vec<Atom>,
    pub script: ExoScript,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub goal_achieved: bool,
    /// False when the trial was cut off by a timeout or a resource limit.
    pub completed: bool,
    pub reason: Option<String>,
    pub plans_computed: usize,
    pub refined_plans: usize,
    pub planning_time: Duration,
    pub coarse_time: Duration,
    pub fine_time: Duration,
    pub execution_time: u64,
    pub actions_executed: usize,
    pub concrete_actions: usize,
    pub trace: Vec<String>,
}

impl RunRecord {
    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|l| format!("{l}\n")).collect()
    }

    /// One line summarising the outcome.
    pub fn summary(&self) -> String {
        format!(
            "goal_achieved={} completed={} reason={} actions={} concrete={} plans={} refined={} execution_time={}",
            self.goal_achieved,
            self.completed,
            self.reason.as_deref().unwrap_or("-").replace(' ', "_"),
            self.actions_executed,
            self.concrete_actions,
            self.plans_computed,
            self.refined_plans,
            self.execution_time
        )
    }
}

#[derive(Debug, Default)]
struct Stats {
    plans: usize,
    refined: usize,
    coarse: Duration,
    fine: Duration,
    actions: usize,
    concrete: usize,
}

enum Abort {
    Timeout(String),
    Error(ControllerError),
}

impl From<ControllerError> for Abort {
    fn from(e: ControllerError) -> Self {
        Abort::Error(e)
    }
}

impl From<ExecError> for Abort {
    fn from(e: ExecError) -> Self {
        Abort::Error(e.into())
    }
}

/// Result of carrying out one coarse action.
struct Attempt {
    achieved: bool,
    observations: Vec<(Atom, bool)>,
}

struct Runner<'a> {
    dom: &'a Domain,
    task: &'a Task,
    cfg: &'a ControllerConfig,
    robot: String,
    goal: Goal,
    world: Box<dyn World>,
    stats: Stats,
    /// Last seen cell of each fine constant.
    cells: BTreeMap<String, String>,
    zoomed: HashMap<BTreeSet<String>, Arc<GroundedDescription>>,
    full_fine: Option<Arc<GroundedDescription>>,
    coarse_step: usize,
}

fn ground_lits(g: &GroundedDescription, lits: &[(Atom, bool)]) -> Result<Vec<GroundLit>, ControllerError> {
    lits.iter().map(|(a, v)| g.lit_from_ast(a, *v).map_err(Into::into)).collect()
}

impl<'a> Runner<'a> {
    fn new(dom: &'a Domain, task: &'a Task, cfg: &'a ControllerConfig) -> Result<Self, ControllerError> {
        let robot = dom.robot()?;
        let goal = Goal::new(ground_lits(&dom.g, &task.goal)?);
        let world: Box<dyn World> = match cfg.resolution {
            Resolution::Coarse => {
                let fine_truth: Vec<(Atom, bool)> = task.truth.iter().map(|a| (a.clone(), true)).collect();
                let coarse: Vec<Atom> = lift_observations(&dom.fine, &fine_truth)?
                    .into_iter()
                    .filter(|(a, _)| {
                        dom.g.atom_id(a).is_some_and(|id| dom.g.atoms[id as usize].kind == AtomKind::Basic)
                    })
                    .map(|(a, _)| a)
                    .collect();
                let observer = dom.fine.spec.observer.clone().unwrap_or_default();
                Box::new(CoarseWorld::new(dom.g.clone(), &coarse, observer, cfg.model.clone(), cfg.seed)?)
            }
            Resolution::Fine { .. } => Box::new(WorldState::new(
                dom.fine.clone(),
                task.truth.iter().cloned(),
                cfg.model.clone(),
                cfg.seed,
            )?),
        };
        Ok(Runner {
            dom,
            task,
            cfg,
            robot,
            goal,
            world,
            stats: Stats::default(),
            cells: BTreeMap::new(),
            zoomed: HashMap::new(),
            full_fine: None,
            coarse_step: 0,
        })
    }

    fn g(&self) -> &GroundedDescription {
        &self.dom.g
    }

    fn coarse_plan(&mut self, from: &State) -> Result<crate::search::Plan, PlanError> {
        let t = Instant::now();
        let r = plan_minimal(self.g(), from, &self.goal, &PlanOptions::with_horizon(self.cfg.max_horizon));
        self.stats.coarse += t.elapsed();
        self.stats.plans += 1;
        r
    }

    /// Fine observations are remembered cell by cell before lifting.
    fn remember(&mut self, obs: &[(Atom, bool)]) {
        let loc = self.dom.fine.spec.observer.as_ref().map(|(_, f)| f.clone()).unwrap_or_default();
        for (a, v) in obs {
            if a.pred != loc || a.args.len() != 2 {
                continue;
            }
            let x = a.args[0].name().to_owned();
            let c = a.args[1].name().to_owned();
            if *v {
                self.cells.insert(x, c);
            } else if self.cells.get(&x) == Some(&c) {
                self.cells.remove(&x);
            }
        }
    }

    fn lift(&self, obs: &[(Atom, bool)]) -> Result<Vec<(Atom, bool)>, ControllerError> {
        match self.cfg.resolution {
            Resolution::Coarse => Ok(obs.to_vec()),
            Resolution::Fine { .. } => Ok(lift_observations(&self.dom.fine, obs)?
                .into_iter()
                .filter(|(a, _)| self.g().atom_id(a).is_some())
                .collect()),
        }
    }

    /// Carries out coarse action `a` expected to lead from `s1` to `s2`.
    fn attempt(&mut self, s1: &State, a: ActionId, s2: &State) -> Result<Attempt, Abort> {
        self.stats.actions += 1;
        let atom = self.g().action_to_ast(a);
        match self.cfg.resolution {
            Resolution::Coarse => {
                self.world.inject(&self.task.script, self.coarse_step)?;
                let out = self.world.execute(&atom)?;
                self.stats.concrete += 1;
                let effects = direct_effects(self.g(), s1, a).unwrap_or_default();
                let contradicted = out.observations.iter().any(|(o, v)| {
                    self.g().atom_id(o).is_some_and(|id| effects.iter().any(|e| e.atom == id && e.positive != *v))
                });
                Ok(Attempt { achieved: !contradicted, observations: out.observations })
            }
            Resolution::Fine { zoom: use_zoom } => self.refine_and_run(s1, a, s2, use_zoom),
        }
    }

    fn fine_grounding(&mut self, relcon: &BTreeSet<String>, use_zoom: bool) -> Result<Arc<GroundedDescription>, Abort> {
        if !use_zoom {
            if let Some(g) = &self.full_fine {
                return Ok(g.clone());
            }
            let g = ground_with_budget(&self.dom.fine.desc, self.cfg.grounding_budget)
                .map_err(|e| Abort::Timeout(format!("fine grounding: {e}")))?;
            let g = Arc::new(g);
            self.full_fine = Some(g.clone());
            return Ok(g);
        }
        if let Some(g) = self.zoomed.get(relcon) {
            return Ok(g.clone());
        }
        let z = zoom(&self.dom.fine, relcon);
        let g = Arc::new(
            ground_with_budget(&z.desc, self.cfg.grounding_budget)
                .map_err(|e| Abort::Timeout(format!("zoomed grounding: {e}")))?,
        );
        self.zoomed.insert(relcon.clone(), g.clone());
        Ok(g)
    }

    /// Fine state matching the coarse belief, using remembered cells where
    /// they agree with it and the first cell of the believed place otherwise.
    fn fine_state(&self, zg: &GroundedDescription, s1: &State) -> Option<State> {
        let g = self.g();
        let fine = &self.dom.fine;
        let first_component = |c: &str| fine.components_of(c).first().map(|s| s.to_string()).unwrap_or(c.to_owned());
        let mut lits = Vec::new();
        for &b in &g.basic_atoms {
            if !s1.get(b) {
                continue;
            }
            let pred = g.atom_pred(b);
            let args = g.atom_args(b);
            if !fine.spec.is_magnified(pred) {
                if let Some(id) = zg.atom_id(&g.atom_to_ast(b)) {
                    lits.push(GroundLit::new(id, true));
                }
                continue;
            }
            let star = format!("{pred}*");
            let loc = fine.spec.observer.as_ref().map(|(_, f)| f.as_str()) == Some(star.as_str());
            if loc && args.len() == 2 {
                // Held objects follow the robot.
                let held = g.basic_atoms.iter().any(|&h| {
                    s1.get(h) && g.atom_pred(h) != pred && g.atom_args(h).get(1) == Some(&args[0])
                });
                let parts: Vec<String> = match fine.components_of(args[0]) {
                    v if v.is_empty() => vec![args[0].to_owned()],
                    v => v.into_iter().map(str::to_owned).collect(),
                };
                if held && !self.robot_is(args[0]) {
                    continue;
                }
                let remembered = parts
                    .iter()
                    .filter_map(|p| self.cells.get(p))
                    .find(|c| fine.parent.get(*c).map(String::as_str) == Some(args[1]))
                    .cloned();
                let cell = remembered.unwrap_or_else(|| first_component(args[1]));
                for p in parts {
                    let atom = Atom::new(
                        star.clone(),
                        vec![crate::domain::Term::Const(p), crate::domain::Term::Const(cell.clone())],
                    );
                    if let Some(id) = zg.atom_id(&atom) {
                        lits.push(GroundLit::new(id, true));
                    }
                }
                continue;
            }
            let mut fargs = Vec::new();
            for c in &args {
                fargs.push(crate::domain::Term::Const(first_component(c)));
            }
            if let Some(id) = zg.atom_id(&Atom::new(star, fargs)) {
                lits.push(GroundLit::new(id, true));
            }
        }
        complete_state(zg, &lits).ok()
    }

    fn robot_is(&self, c: &str) -> bool {
        c == self.robot
    }

    /// Belief after a concrete action: the prediction, corrected by what was seen.
    fn merge(&self, zg: &GroundedDescription, predicted: &State, obs: &[(Atom, bool)]) -> Option<State> {
        // Parts of one object move together, so a sighting of one part places all of them.
        let owner = |x: &str| self.dom.fine.parent.get(x).cloned().unwrap_or_else(|| x.to_owned());
        let mut seen: Vec<GroundLit> = Vec::new();
        let mut placed: BTreeMap<String, String> = BTreeMap::new();
        for (a, v) in obs {
            if let Some(id) = zg.atom_id(a) {
                seen.push(GroundLit::new(id, *v));
                if *v && a.args.len() == 2 {
                    placed.insert(format!("{}/{}", a.pred, owner(a.args[0].name())), a.args[1].name().to_owned());
                }
            }
        }
        let mut lits = seen.clone();
        for &b in &zg.basic_atoms {
            if !predicted.get(b) || seen.iter().any(|l| l.atom == b) {
                continue;
            }
            let args = zg.atom_args(b);
            let key = format!("{}/{}", zg.atom_pred(b), owner(args[0]));
            if args.len() == 2 && placed.get(&key).is_some_and(|c| c != args[1]) {
                continue;
            }
            lits.push(GroundLit::new(b, true));
        }
        complete_state(zg, &lits).or_else(|_| complete_state(zg, &seen)).ok()
    }

    fn refine_and_run(&mut self, s1: &State, a: ActionId, s2: &State, use_zoom: bool) -> Result<Attempt, Abort> {
        let t = Instant::now();
        let relcon = relevant_constants(self.g(), s1, a, s2, &self.goal);
        let zg = self.fine_grounding(&relcon, use_zoom)?;
        let goal_lits: Vec<GroundLit> = fine_goal(self.g(), s1, s2, &relcon)
            .iter()
            .filter_map(|(at, v)| zg.lit_from_ast(at, *v).ok())
            .collect();
        let fgoal = Goal::new(goal_lits);
        let mut state = self.fine_state(&zg, s1);
        self.stats.fine += t.elapsed();
        let mut last_obs = Vec::new();
        let mut replans = 0;
        let achieved = loop {
            let Some(fs) = state.clone() else { break false };
            if fgoal.holds(&fs) {
                break true;
            }
            if replans > self.cfg.max_fine_replans {
                break false;
            }
            replans += 1;
            let t = Instant::now();
            let opts = PlanOptions {
                max_horizon: self.cfg.fine_horizon,
                deadline: Some(t + self.cfg.fine_timeout),
                exclude: self.dom.fine.test_action_names(),
                ..Default::default()
            };
            let plan = plan_minimal(&zg, &fs, &fgoal, &opts);
            self.stats.fine += t.elapsed();
            self.stats.refined += 1;
            let plan = match plan {
                Ok(p) => p,
                Err(PlanError::Timeout) => return Err(Abort::Timeout("fine planning timed out".into())),
                Err(PlanError::ResourceExhausted { expanded }) => {
                    return Err(Abort::Timeout(format!("fine planning exhausted after {expanded} states")))
                }
                Err(PlanError::Unsat(_)) => break false,
            };
            let mut cur = fs;
            let mut diverged = false;
            for &fa in &plan.actions {
                self.world.inject(&self.task.script, self.coarse_step)?;
                let out = self.world.execute(&zg.action_to_ast(fa))?;
                self.stats.concrete += 1;
                self.remember(&out.observations);
                let predicted = successor(&zg, &cur, fa).state().unwrap_or_else(|| cur.clone());
                let t = Instant::now();
                let next = self.merge(&zg, &predicted, &out.observations);
                self.stats.fine += t.elapsed();
                last_obs = out.observations;
                match next {
                    Some(n) if n == predicted => cur = n,
                    other => {
                        state = other;
                        diverged = true;
                        break;
                    }
                }
            }
            if !diverged {
                state = Some(cur);
            }
        };
        if last_obs.is_empty() {
            last_obs = self.world.observe(&self.robot);
            self.remember(&last_obs);
        }
        let t = Instant::now();
        let observations = self.lift(&last_obs)?;
        self.stats.fine += t.elapsed();
        Ok(Attempt { achieved, observations })
    }

    fn record(self, achieved: bool, completed: bool, reason: Option<String>) -> RunRecord {
        RunRecord {
            goal_achieved: achieved,
            completed,
            reason,
            plans_computed: self.stats.plans,
            refined_plans: self.stats.refined,
            planning_time: self.stats.coarse + self.stats.fine,
            coarse_time: self.stats.coarse,
            fine_time: self.stats.fine,
            execution_time: self.world.clock(),
            actions_executed: self.stats.actions,
            concrete_actions: self.stats.concrete,
            trace: self.world.trace().to_vec(),
        }
    }

    fn finish(self, result: Result<Option<String>, Abort>) -> Result<RunRecord, ControllerError> {
        match result {
            Ok(reason) => {
                let achieved = self.world.holds(&self.task.goal);
                Ok(self.record(achieved, true, reason))
            }
            Err(Abort::Timeout(m)) => Ok(self.record(false, false, Some(m))),
            Err(Abort::Error(e)) => Err(e),
        }
    }

    /// Observations an intention-driven agent keeps: those over constants
    /// relevant to the transition or goal, and the action's direct effects.
    fn relevant(&self, obs: &[(Atom, bool)], relcon: &BTreeSet<String>, effects: &[GroundLit]) -> Vec<GroundLit> {
        obs.iter()
            .filter_map(|(a, v)| self.g().lit_from_ast(a, *v).ok())
            .filter(|l| {
                effects.iter().any(|e| e.atom == l.atom)
                    || self.g().atom_args(l.atom).iter().all(|c| relcon.contains(*c))
            })
            .collect()
    }

    fn run_ati(&mut self) -> Result<Option<String>, Abort> {
        let mut history = History::new();
        for l in ground_lits(self.g(), &self.task.initial_obs)? {
            history.observe(l, 0).map_err(|e| ControllerError::Invalid(e.to_string()))?;
        }
        let mut relcon: BTreeSet<String> = self.goal.lits.iter().flat_map(|l| self.g().atom_args(l.atom)).map(str::to_owned).collect();
        relcon.insert(self.robot.clone());
        let first = self.world.observe(&self.robot);
        self.remember(&first);
        let first = self.lift(&first)?;
        for l in self.relevant(&first, &relcon, &[]) {
            history.observe(l, 0).map_err(|e| ControllerError::Invalid(e.to_string()))?;
        }
        let mut mental = MentalState::default();
        mental.select(self.goal.clone());
        loop {
            let t = Instant::now();
            let model = consistent_model(self.g(), &history, self.cfg.max_exogenous);
            self.stats.coarse += t.elapsed();
            let model = match model {
                Ok(m) => m,
                Err(e) => return Ok(Some(format!("diagnosis failed: {e}"))),
            };
            let t = Instant::now();
            let next = next_intended_action(&mental, &model, self.g());
            self.stats.coarse += t.elapsed();
            let step = history.current_step;
            match next {
                IntendedAction::Done => return Ok(None),
                IntendedAction::Replan => {
                    let plan = match self.coarse_plan(model.current()) {
                        Ok(p) => p,
                        Err(e) => return Ok(Some(format!("no plan: {e}"))),
                    };
                    let activity = create_activity(&mut mental, self.g(), model.current(), &self.goal, &plan)
                        .map_err(|e| ControllerError::Invalid(e.to_string()))?;
                    let name = format!("start({})", activity.name);
                    mental.start(activity).map_err(|e| ControllerError::Invalid(e.to_string()))?;
                    history.mental(name.clone(), step).map_err(|e| ControllerError::Invalid(e.to_string()))?;
                    self.world.note(&name);
                }
                IntendedAction::Start(_) => {}
                IntendedAction::Stop(n) => {
                    mental.stop();
                    let name = format!("stop({n})");
                    history.mental(name.clone(), step).map_err(|e| ControllerError::Invalid(e.to_string()))?;
                    self.world.note(&name);
                }
                IntendedAction::Agent(a) => {
                    if self.stats.actions >= self.cfg.max_actions {
                        return Ok(Some("action budget exhausted".into()));
                    }
                    let s1 = model.current().clone();
                    let Some(s2) = successor(self.g(), &s1, a).state() else {
                        return Ok(Some("intended action not executable".into()));
                    };
                    let attempt = self.attempt(&s1, a, &s2)?;
                    self.coarse_step += 1;
                    let verdict = if attempt.achieved { ActionVerdict::Hpd } else { ActionVerdict::NotHpd };
                    let res = match verdict {
                        ActionVerdict::Hpd => history.happened(a, step),
                        ActionVerdict::NotHpd => history.not_happened(a, step),
                    };
                    res.map_err(|e| ControllerError::Invalid(e.to_string()))?;
                    advance(&mut mental, verdict);
                    let relcon = relevant_constants(self.g(), &s1, a, &s2, &self.goal);
                    let effects = direct_effects(self.g(), &s1, a).unwrap_or_default();
                    for l in self.relevant(&attempt.observations, &relcon, &effects) {
                        history.observe(l, history.current_step).map_err(|e| ControllerError::Invalid(e.to_string()))?;
                    }
                }
            }
        }
    }

    /// Belief rebuilt from remembered facts, with defaults for the rest.
    fn tp_belief(&mut self, known: &BTreeMap<u32, bool>) -> Option<State> {
        let mut h = History::new();
        for (a, v) in known {
            h.observe(GroundLit::new(*a, *v), 0).ok()?;
        }
        let t = Instant::now();
        let m = consistent_model(self.g(), &h, 0).ok();
        self.stats.coarse += t.elapsed();
        m.map(|m| m.current().clone())
    }

    fn run_tp(&mut self) -> Result<Option<String>, Abort> {
        let mut known: BTreeMap<u32, bool> = BTreeMap::new();
        for l in ground_lits(self.g(), &self.task.initial_obs)? {
            known.insert(l.atom, l.positive);
        }
        let first = self.world.observe(&self.robot);
        self.remember(&first);
        let Some(mut belief) = self.tp_belief(&known) else {
            return Ok(Some("initial beliefs are inconsistent".into()));
        };
        'replan: loop {
            let plan = match self.coarse_plan(&belief) {
                Ok(p) => p,
                Err(e) => return Ok(Some(format!("no plan: {e}"))),
            };
            for &a in &plan.actions {
                if self.stats.actions >= self.cfg.max_actions {
                    return Ok(Some("action budget exhausted".into()));
                }
                let Some(s2) = successor(self.g(), &belief, a).state() else { continue 'replan };
                let effects = direct_effects(self.g(), &belief, a).unwrap_or_default();
                let attempt = self.attempt(&belief, a, &s2)?;
                self.coarse_step += 1;
                let seen: Vec<GroundLit> = attempt
                    .observations
                    .iter()
                    .filter_map(|(o, v)| self.g().lit_from_ast(o, *v).ok())
                    .collect();
                let failed = !attempt.achieved
                    || seen.iter().any(|l| effects.iter().any(|e| e.atom == l.atom && e.positive != l.positive));
                if !failed {
                    belief = s2;
                    continue;
                }
                // On failure the robot also takes in what it saw of the action's own objects.
                let args: BTreeSet<&str> = self.g().action_args(a).into_iter().collect();
                for &b in &self.g().basic_atoms {
                    known.insert(b, belief.get(b));
                }
                for l in &seen {
                    let about = self.g().atom_args(l.atom).first().is_some_and(|x| args.contains(x));
                    if about || effects.iter().any(|e| e.atom == l.atom) {
                        known.insert(l.atom, l.positive);
                    }
                }
                self.forget_conflicts(&mut known, &seen, &args);
                match self.tp_belief(&known) {
                    Some(b) => belief = b,
                    None => return Ok(Some("beliefs became inconsistent".into())),
                }
                continue 'replan;
            }
            return Ok(None);
        }
    }

    /// Drops remembered positives about an object once it is seen to be
    /// absent, so defaults can fill the gap.
    fn forget_conflicts(&self, known: &mut BTreeMap<u32, bool>, seen: &[GroundLit], args: &BTreeSet<&str>) {
        let g = self.g();
        let absent: BTreeSet<(String, &str)> = seen
            .iter()
            .filter(|l| !l.positive)
            .filter(|l| g.atom_args(l.atom).first().is_some_and(|x| args.contains(x)))
            .map(|l| (g.atom_pred(l.atom).to_owned(), g.atom_args(l.atom)[0]))
            .collect();
        let present: BTreeSet<(String, &str)> = seen
            .iter()
            .filter(|l| l.positive)
            .map(|l| (g.atom_pred(l.atom).to_owned(), g.atom_args(l.atom)[0]))
            .collect();
        known.retain(|&atom, _| {
            let key = (g.atom_pred(atom).to_owned(), g.atom_args(atom).first().copied().unwrap_or_default());
            let observed = seen.iter().any(|l| l.atom == atom);
            // Unobserved negatives about a relocated object would block the defaults.
            observed || !(absent.contains(&key) || present.contains(&key))
        });
    }
}

pub fn run_goal(dom: &Domain, task: &Task, cfg: &ControllerConfig) -> Result<RunRecord, ControllerError> {
    let mut r = Runner::new(dom, task, cfg)?;
    let result = match cfg.mode {
        Mode::Ati => r.run_ati(),
        Mode::Tp => r.run_tp(),
    };
    r.finish(result)
}

/// Both configurations on the same initial world and script.
pub fn run_paired(
    dom: &Domain,
    task: &Task,
    a: &ControllerConfig,
    b: &ControllerConfig,
) -> Result<(RunRecord, RunRecord), ControllerError> {
    if a.seed != b.seed {
        return Err(ControllerError::Invalid("paired runs must share a seed".into()));
    }
    Ok((run_goal(dom, task, a)?, run_goal(dom, task, b)?))
}
