mod common;

use common::{grounded, oracle, suites, MINI_RA};
use mrati::domain::{AtomKind, GroundLit};
use mrati::search::{plan_minimal, PlanOptions};
use mrati::semantics::{complete_state, legal_states, successor, Transition, DEFAULT_ORACLE_BOUND};

const DOMAINS: [(&str, &str); 3] = suites::ORACLE_DOMAINS;

#[test]
fn legal_states_match_enumeration() {
    for (name, text) in DOMAINS {
        let g = grounded(text);
        let mine = legal_states(&g, DEFAULT_ORACLE_BOUND).unwrap();
        let theirs = oracle::legal_states(&g);
        assert_eq!(mine, theirs, "{name}");
        assert!(!mine.is_empty(), "{name}");
    }
}

#[test]
fn mini_ra_count_matches_formula() {
    // Each placement of robot and book over two rooms: 2 * 2 unheld,
    // plus 2 held with the book following the robot, times 2^2 lock states.
    let g = grounded(MINI_RA);
    assert_eq!(legal_states(&g, 24).unwrap().len(), (2 * 2 + 2) * 4);
}

#[test]
fn single_robot_two_places() {
    let text = "\
sorts:
  place = {p, q}
  robot = {r}
fluents basic:
  loc(robot, place)
fluents defined:
  placed(robot)
  unplaced(robot)
axioms:
  -loc(R, P2) if loc(R, P1), P1 != P2.
  placed(R) if loc(R, P).
  unplaced(R) if robot(R), -placed(R).
  -unplaced(R) if robot(R).
";
    assert_eq!(legal_states(&grounded(text), 24).unwrap().len(), 2);
}

#[test]
fn unsatisfiable_constraints_give_no_states() {
    let text = "\
sorts:
  s = {x}
fluents basic:
  f(s)
axioms:
  f(X) if -f(X).
  -f(X) if f(X).
";
    assert!(legal_states(&grounded(text), 24).unwrap().is_empty());
}

#[test]
fn successor_matches_oracle_everywhere() {
    for (name, text) in DOMAINS {
        assert!(suites::successor_cases(name, text).unwrap() > 0);
    }
}

#[test]
fn successor_is_inertial_and_legal() {
    for (_, text) in DOMAINS {
        let g = grounded(text);
        for s in oracle::legal_states(&g) {
            for a in 0..g.num_actions() as u32 {
                let Transition::Next(t) = successor(&g, &s, a) else { continue };
                assert!(oracle::legal(&g, &t));
                let touched: Vec<u32> = g.causal.iter().filter(|c| c.action == a).map(|c| c.head.atom).collect();
                let ramified: Vec<u32> = g
                    .constraints
                    .iter()
                    .filter(|c| g.atoms[c.head.atom as usize].kind == AtomKind::Basic)
                    .map(|c| c.head.atom)
                    .collect();
                for &b in &g.basic_atoms {
                    if !touched.contains(&b) && !ramified.contains(&b) {
                        assert_eq!(s.get(b), t.get(b));
                    }
                }
            }
        }
    }
}

#[test]
fn completion_matches_naive_closure() {
    for (name, text) in DOMAINS {
        let g = grounded(text);
        for mask in 0u64..(1 << g.basic_atoms.len()) {
            let partial: Vec<GroundLit> = g
                .basic_atoms
                .iter()
                .enumerate()
                .map(|(i, a)| GroundLit::new(*a, mask >> i & 1 == 1))
                .collect();
            let mut base = mrati::semantics::State::with_statics(&g);
            for l in &partial {
                base.set(l.atom, l.positive);
            }
            let naive = oracle::complete(&g, &base);
            let mine = complete_state(&g, &partial).ok();
            assert_eq!(mine, naive, "{name}");
        }
    }
}

#[test]
fn plan_length_matches_bfs_distance() {
    for (name, text) in DOMAINS {
        assert!(suites::planner_cases(name, text).unwrap() > 0);
    }
}

#[test]
fn planner_is_deterministic() {
    let g = grounded(MINI_RA);
    let states = oracle::legal_states(&g);
    let goal = common::goal(&g, "loc(bk, b), -in_hand(rob, bk)");
    for s in &states {
        let a = plan_minimal(&g, s, &goal, &PlanOptions::default());
        let b = plan_minimal(&g, s, &goal, &PlanOptions::default());
        assert_eq!(a, b);
    }
}
