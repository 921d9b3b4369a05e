//! Fixtures shared by unit tests.

use crate::domain::{ground, parse_domain, parse_ground_literals, parse_ground_term, ActionId, GroundLit, GroundedDescription};
use crate::search::Goal;
use crate::semantics::{complete_state, State};

/// Two rooms, a robot and a book that by default starts in `a`.
pub const ROOMS: &str = "\
sorts:
  place = {a, b}
  robot = {rob}
  book = {bk}
  thing = robot + book
fluents basic:
  loc(thing, place)
  in_hand(robot, book)
actions agent:
  move(robot, place)
  pickup(robot, book)
  putdown(robot, book)
actions exogenous:
  exo_move(book, place)
axioms:
  move(R, P) causes loc(R, P).
  pickup(R, O) causes in_hand(R, O).
  putdown(R, O) causes -in_hand(R, O).
  exo_move(O, P) causes loc(O, P).
  -loc(T, P2) if loc(T, P1), P1 != P2.
  loc(O, P) if loc(R, P), in_hand(R, O).
  impossible move(R, P) if loc(R, P).
  impossible pickup(R, O) if loc(R, P1), loc(O, P2), P1 != P2.
  impossible pickup(R, O) if in_hand(R, O).
  impossible putdown(R, O) if -in_hand(R, O).
  impossible exo_move(O, P) if in_hand(R, O).
  impossible exo_move(O, P) if loc(O, P).
defaults:
  1: loc(X, a) if book(X).
";

pub fn grounded(text: &str) -> GroundedDescription {
    ground(&parse_domain(text).unwrap()).unwrap()
}

pub fn lits(g: &GroundedDescription, text: &str) -> Vec<GroundLit> {
    parse_ground_literals(text).unwrap().into_iter().map(|(a, p)| g.lit_from_ast(&a, p).unwrap()).collect()
}

pub fn state(g: &GroundedDescription, text: &str) -> State {
    complete_state(g, &lits(g, text)).unwrap()
}

pub fn goal(g: &GroundedDescription, text: &str) -> Goal {
    Goal::new(lits(g, text))
}

pub fn action(g: &GroundedDescription, text: &str) -> ActionId {
    g.action_id(&parse_ground_term(text).unwrap()).unwrap()
}
