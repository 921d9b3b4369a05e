#![allow(dead_code)]

pub mod oracle;
pub mod suites;

use mrati::domain::{ground, parse_domain, parse_ground_literals, parse_ground_term, GroundLit, GroundedDescription};
use mrati::search::Goal;
use mrati::semantics::{complete_state, State};

pub const RA: &str = include_str!("../../domains/ra.dom");

/// Two rooms, one robot, one book; the RA axioms with locations made total.
pub const MINI_RA: &str = "\
sorts:
  place = {a, b}
  robot = {rob}
  book = {bk}
  thing = robot + book
statics:
  next_to(place, place)
fluents basic:
  loc(thing, place)
  in_hand(robot, book)
  locked(place)
fluents defined:
  placed(thing)
  unplaced(thing)
actions agent:
  move(robot, place)
  pickup(robot, book)
  putdown(robot, book)
  unlock(robot, place)
actions exogenous:
  exo_move(book, place)
  exo_lock(place)
facts:
  next_to(a, b).
axioms:
  next_to(P2, P1) if next_to(P1, P2).
  move(R, P) causes loc(R, P).
  pickup(R, O) causes in_hand(R, O).
  putdown(R, O) causes -in_hand(R, O).
  unlock(R, P) causes -locked(P).
  exo_move(O, P) causes loc(O, P).
  exo_lock(P) causes locked(P).
  -loc(T, P2) if loc(T, P1), P1 != P2.
  loc(O, P) if loc(R, P), in_hand(R, O).
  placed(T) if loc(T, P).
  unplaced(T) if thing(T), -placed(T).
  -unplaced(T) if thing(T).
  impossible pickup(R, O) if loc(R, P1), loc(O, P2), P1 != P2.
  impossible pickup(R, O) if in_hand(R, O).
  impossible putdown(R, O) if -in_hand(R, O).
  impossible move(R, P) if loc(R, P1), -next_to(P, P1).
  impossible move(R, P) if locked(P).
  impossible unlock(R, P) if -locked(P).
  impossible unlock(R, P) if loc(R, P1), -next_to(P, P1).
  impossible exo_move(O, P) if in_hand(R, O).
  impossible exo_move(O, P) if loc(O, P).
  impossible exo_lock(P) if locked(P).
  impossible exo_lock(P) if loc(R, P).
defaults:
  1: loc(X, a) if book(X).
";

/// Three rooms in a ring of doors; reachability is a recursive defined fluent.
pub const DOORS: &str = "\
sorts:
  room = {r1, r2, r3}
statics:
  door(room, room)
fluents basic:
  at(room)
  open(room, room)
fluents defined:
  reach(room)
  cut_off(room)
actions agent:
  go(room)
  toggle(room, room)
facts:
  door(r1, r2).
  door(r2, r3).
  door(r3, r1).
axioms:
  go(R) causes at(R).
  toggle(X, Y) causes open(X, Y) if -open(X, Y).
  toggle(X, Y) causes -open(X, Y) if open(X, Y).
  -at(X) if at(Y), X != Y.
  -open(X, Y) if -door(X, Y).
  reach(R) if at(R).
  reach(Y) if reach(X), open(X, Y).
  reach(Y) if reach(X), open(Y, X).
  cut_off(R) if -reach(R).
  impossible go(R) if -reach(R).
  impossible go(R) if at(R).
  impossible toggle(X, Y) if -door(X, Y).
  impossible toggle(X, Y) if cut_off(X).
";

/// A chain of indirect effects: power feeds a relay which lights a lamp.
pub const CHAIN: &str = "\
sorts:
  unit = {u1, u2}
fluents basic:
  power(unit)
  relay(unit)
  lamp(unit)
  broken(unit)
actions agent:
  flip(unit)
  cut(unit)
  repair(unit)
axioms:
  flip(U) causes power(U).
  cut(U) causes -power(U).
  repair(U) causes -broken(U).
  relay(U) if power(U).
  lamp(U) if relay(U), -broken(U).
  -lamp(U) if broken(U).
  -relay(U) if -power(U).
  -lamp(U) if -relay(U).
  impossible flip(U) if power(U).
  impossible cut(U) if -power(U).
  impossible repair(U) if -broken(U).
";

pub fn grounded(text: &str) -> GroundedDescription {
    ground(&parse_domain(text).unwrap()).unwrap()
}

pub fn lits(g: &GroundedDescription, text: &str) -> Vec<GroundLit> {
    parse_ground_literals(text)
        .unwrap()
        .into_iter()
        .map(|(a, p)| g.lit_from_ast(&a, p).unwrap())
        .collect()
}

pub fn state(g: &GroundedDescription, text: &str) -> State {
    complete_state(g, &lits(g, text)).unwrap()
}

pub fn goal(g: &GroundedDescription, text: &str) -> Goal {
    Goal::new(lits(g, text))
}

pub fn action(g: &GroundedDescription, text: &str) -> u32 {
    g.action_id(&parse_ground_term(text).unwrap()).unwrap()
}

/// Two rooms, one book with two prioritized defaults; used for diagnosis.
pub const DIAG: &str = "\
sorts:
  place = {a, b}
  robot = {rob}
  book = {bk}
  thing = robot + book
fluents basic:
  loc(thing, place)
  in_hand(robot, book)
fluents defined:
  placed(thing)
  unplaced(thing)
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
  placed(T) if loc(T, P).
  unplaced(T) if thing(T), -placed(T).
  -unplaced(T) if thing(T).
  impossible move(R, P) if loc(R, P).
  impossible pickup(R, O) if loc(R, P1), loc(O, P2), P1 != P2.
  impossible pickup(R, O) if in_hand(R, O).
  impossible putdown(R, O) if -in_hand(R, O).
  impossible exo_move(O, P) if in_hand(R, O).
  impossible exo_move(O, P) if loc(O, P).
defaults:
  1: loc(X, a) if book(X).
  2: loc(X, b) if book(X), -loc(X, a).
";
