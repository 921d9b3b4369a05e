//! Activities, mental state and the choice of the next intended action.

use thiserror::Error;

use crate::diagnosis::{goal_achieved, ModelOfHistory};
use crate::domain::{ActionId, GroundedDescription};
use crate::search::{verify_plan, Goal, Plan, Verdict};
use crate::semantics::State;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activity {
    pub name: u32,
    pub goal: Goal,
    pub components: Vec<ActionId>,
}

impl Activity {
    pub fn length(&self) -> usize {
        self.components.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntendedAction {
    Agent(ActionId),
    Start(u32),
    Stop(u32),
    Done,
    Replan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionVerdict {
    Hpd,
    NotHpd,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntentionError {
    #[error("plan does not reach the goal from the current state")]
    PlanDoesNotVerify,
    #[error("activity {0} is already active")]
    AlreadyActive(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentalState {
    pub active: Option<Activity>,
    pub current_action_index: usize,
    pub active_goal: Option<Goal>,
    pub next_activity_name: u32,
}

impl Default for MentalState {
    fn default() -> Self {
        MentalState { active: None, current_action_index: 0, active_goal: None, next_activity_name: 1 }
    }
}

impl MentalState {
    pub fn select(&mut self, goal: Goal) {
        self.active_goal = Some(goal);
    }

    pub fn abandon(&mut self) {
        self.active_goal = None;
        self.active = None;
    }

    /// Action the active activity expects next, if any remain.
    pub fn next_action(&self) -> Option<ActionId> {
        self.active.as_ref().and_then(|a| a.components.get(self.current_action_index).copied())
    }

    pub fn start(&mut self, activity: Activity) -> Result<(), IntentionError> {
        if let Some(a) = &self.active {
            return Err(IntentionError::AlreadyActive(a.name));
        }
        self.active = Some(activity);
        self.current_action_index = 0;
        Ok(())
    }

    pub fn stop(&mut self) {
        self.active = None;
        self.current_action_index = 0;
    }
}

/// Names the plan as a fresh activity once it is checked to reach the goal.
pub fn create_activity(
    mental: &mut MentalState,
    g: &GroundedDescription,
    from: &State,
    goal: &Goal,
    plan: &Plan,
) -> Result<Activity, IntentionError> {
    if !verify_plan(g, from, &plan.actions, goal).reaches() {
        return Err(IntentionError::PlanDoesNotVerify);
    }
    let name = mental.next_activity_name;
    mental.next_activity_name += 1;
    Ok(Activity { name, goal: goal.clone(), components: plan.actions.clone() })
}

/// Whether the rest of the activity, run from the believed current state, reaches its goal.
pub fn projected_success(activity: &Activity, index: usize, model: &ModelOfHistory, g: &GroundedDescription) -> bool {
    let rest = activity.components.get(index..).unwrap_or(&[]);
    matches!(verify_plan(g, model.current(), rest, &activity.goal), Verdict::Reaches(_))
}

pub fn next_intended_action(mental: &MentalState, model: &ModelOfHistory, g: &GroundedDescription) -> IntendedAction {
    let Some(goal) = &mental.active_goal else { return IntendedAction::Done };
    if goal_achieved(model, goal) {
        return IntendedAction::Done;
    }
    let Some(activity) = &mental.active else { return IntendedAction::Replan };
    if projected_success(activity, mental.current_action_index, model, g) {
        if let Some(a) = activity.components.get(mental.current_action_index) {
            return IntendedAction::Agent(*a);
        }
    }
    IntendedAction::Stop(activity.name)
}

pub fn advance(mental: &mut MentalState, verdict: ActionVerdict) {
    if verdict == ActionVerdict::Hpd && mental.active.is_some() {
        mental.current_action_index += 1;
    }
}
