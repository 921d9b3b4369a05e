mod common;

use common::*;
use mrati::domain::{ground, parse_domain, print_domain, SymbolKind};
use mrati::multires::refine;
use mrati::semantics::successor;

#[test]
fn refined_ra_round_trips_through_text() {
    let fine = refine(&parse_domain(RA).unwrap()).unwrap();
    let text = print_domain(&fine.desc);
    let back = parse_domain(&text).unwrap_or_else(|e| panic!("{}\n{text}", e.render("fine")));
    assert_eq!(back, fine.desc);
}

#[test]
fn refined_ra_shape() {
    let fine = refine(&parse_domain(RA).unwrap()).unwrap();
    let sig = &fine.desc.signature;
    assert_eq!(sig.members("place*").len(), 16);
    assert_eq!(sig.kind_of("loc"), Some(SymbolKind::DefinedFluent));
    assert_eq!(sig.kind_of("loc*"), Some(SymbolKind::BasicFluent));
    assert_eq!(sig.kind_of("move*"), Some(SymbolKind::AgentAction));
    assert_eq!(sig.kind_of("move"), None);
    assert_eq!(sig.kind_of("unlock"), Some(SymbolKind::AgentAction));
    assert_eq!(sig.kind_of("test_loc*"), Some(SymbolKind::AgentAction));
    assert!(fine.desc.defaults.is_empty());
    let g = ground(&fine.desc).unwrap();
    println!("fine atoms {} actions {}", g.num_atoms(), g.num_actions());
}

#[test]
fn bridge_defines_coarse_location() {
    let fine = refine(&parse_domain(RA).unwrap()).unwrap();
    let g = ground(&fine.desc).unwrap();
    let s = state(&g, "loc*(rob1, c3), loc*(book1, c14), loc*(book2, c1), loc*(cup1_base, c9), loc*(cup1_handle, c9)");
    for l in ["loc(rob1, office1)", "loc(book1, library)", "loc(cup1, kitchen)", "-loc(rob1, office2)"] {
        assert!(s.holds_all(&lits(&g, l)), "{l}");
    }
    let t = successor(&g, &s, action(&g, "move*(rob1, c4)")).state().unwrap();
    assert!(t.holds_all(&lits(&g, "loc*(rob1, c4), loc(rob1, office1)")));
    let t = successor(&g, &t, action(&g, "move*(rob1, c9)")).state().unwrap();
    assert!(t.holds_all(&lits(&g, "loc(rob1, kitchen), -loc(rob1, office1)")));
}

mod relevance {
    use super::common::oracle::StateGraph;
    use super::common::*;
    use mrati::domain::{GroundedDescription, ActionId, AtomKind};
    use mrati::multires::relevant_constants;
    use mrati::search::Goal;
    use mrati::semantics::{successor, State};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    /// Applies the relevance rules to a fixpoint over atom text.
    fn naive(g: &GroundedDescription, s1: &State, a: ActionId, s2: &State, goal: &Goal) -> BTreeSet<String> {
        let args = |id: u32| g.atom_to_ast(id).args.into_iter().map(|t| t.name().to_owned()).collect::<Vec<_>>();
        let mut out = BTreeSet::new();
        loop {
            let before = out.len();
            out.extend(g.action_to_ast(a).args.iter().map(|t| t.name().to_owned()));
            for l in &goal.lits {
                out.extend(args(l.atom));
            }
            for id in 0..g.num_atoms() as u32 {
                if g.atoms[id as usize].kind != AtomKind::Static && s1.get(id) != s2.get(id) {
                    out.extend(args(id));
                }
            }
            for e in g.exec.iter().filter(|e| e.action == a) {
                for l in e.body.iter().filter(|l| l.positive && s1.get(l.atom)) {
                    out.extend(args(l.atom));
                }
            }
            let goal_objects: BTreeSet<String> = goal.lits.iter().flat_map(|l| args(l.atom)).collect();
            for &b in &g.basic_atoms {
                if s1.get(b) && goal_objects.contains(&args(b)[0]) {
                    out.extend(args(b));
                }
            }
            if out.len() == before {
                return out;
            }
        }
    }

    #[test]
    fn move_toward_goal_object() {
        let g = grounded(RA);
        let s1 = state(&g, "loc(rob1, kitchen), loc(book1, office1), loc(book2, library), loc(cup1, office2)");
        let a = action(&g, "move(rob1, office1)");
        let s2 = successor(&g, &s1, a).state().unwrap();
        let r = relevant_constants(&g, &s1, a, &s2, &goal(&g, "loc(book1, library)"));
        let expect: BTreeSet<String> =
            ["rob1", "kitchen", "office1", "book1", "library"].iter().map(|s| s.to_string()).collect();
        assert_eq!(r, expect);
        let without = relevant_constants(&g, &s1, a, &s2, &Goal::default());
        assert!(!without.contains("book1"));
    }

    fn cases() -> (GroundedDescription, Vec<(State, ActionId, State)>) {
        let g = grounded(MINI_RA);
        let graph = StateGraph::build(&g);
        let mut ts = Vec::new();
        for s in &graph.states {
            for a in g.agent_actions() {
                if let Some(t) = successor(&g, s, a).state() {
                    ts.push((s.clone(), a, t));
                }
            }
        }
        (g, ts)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_fixpoint_and_grows_with_goal(i in 0usize..10_000, picks in proptest::collection::vec(0usize..1000, 0..4)) {
            let (g, ts) = cases();
            let (s1, a, s2) = &ts[i % ts.len()];
            let basic = &g.basic_atoms;
            let mut lits = Vec::new();
            let mut r_prev = relevant_constants(&g, s1, *a, s2, &Goal::default());
            for p in picks {
                let b = basic[p % basic.len()];
                lits.push(mrati::domain::GroundLit::new(b, p % 2 == 0));
                let goal = Goal::new(lits.clone());
                let r = relevant_constants(&g, s1, *a, s2, &goal);
                prop_assert_eq!(&r, &naive(&g, s1, *a, s2, &goal));
                prop_assert!(r.is_superset(&r_prev));
                r_prev = r;
            }
        }
    }
}

mod zooming {
    use super::common::*;
    use mrati::domain::{ground, parse_domain, print_domain, Atom, Term};
    use mrati::multires::{lift_observations, refine, relevant_constants, zoom, RefineError};
    use mrati::search::Goal;
    use mrati::semantics::successor;
    use std::collections::BTreeSet;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn move_only_zoom_drops_manipulation() {
        let fine = refine(&parse_domain(RA).unwrap()).unwrap();
        let g = grounded(RA);
        let s1 = state(&g, "loc(rob1, kitchen), loc(book1, office1), loc(book2, library), loc(cup1, office2)");
        let a = action(&g, "move(rob1, office1)");
        let s2 = successor(&g, &s1, a).state().unwrap();
        let relcon = relevant_constants(&g, &s1, a, &s2, &Goal::default());
        assert_eq!(relcon, set(&["rob1", "kitchen", "office1"]));
        let z = zoom(&fine, &relcon);
        let sig = &z.desc.signature;
        assert!(sig.kind_of("move*").is_some());
        for gone in ["pickup*", "putdown*", "in_hand*", "exo_move*"] {
            assert!(sig.kind_of(gone).is_none(), "{gone}");
        }
        let cells = sig.members("place*");
        assert_eq!(cells, set(&["c1", "c2", "c3", "c4", "c9", "c10", "c11", "c12"]));
        assert!(z.desc.axioms.iter().all(|ax| !ax.to_string().contains("pickup")));
        parse_domain(&print_domain(&z.desc)).unwrap();
        let zg = ground(&z.desc).unwrap();
        assert!(zg.num_atoms() < ground(&fine.desc).unwrap().num_atoms() / 3);
    }

    #[test]
    fn zoom_over_everything_is_identity() {
        let fine = refine(&parse_domain(RA).unwrap()).unwrap();
        let all = fine.desc.signature.members("whole");
        let z = zoom(&fine, &all);
        assert_eq!(z.desc, fine.desc);
    }

    fn atom(text: &str) -> Atom {
        let (pred, rest) = text.split_once('(').unwrap();
        let args = rest.trim_end_matches(')').split(',').map(|a| Term::Const(a.trim().to_owned())).collect();
        Atom::new(pred, args)
    }

    #[test]
    fn lifting() {
        let fine = refine(&parse_domain(RA).unwrap()).unwrap();
        let lift = |obs: &[(&str, bool)]| {
            let v: Vec<(Atom, bool)> = obs.iter().map(|(a, b)| (atom(a), *b)).collect();
            lift_observations(&fine, &v)
        };
        assert_eq!(lift(&[("loc*(book1, c14)", true)]).unwrap(), vec![(atom("loc(book1, library)"), true)]);
        assert_eq!(
            lift(&[("in_hand*(rob1, cup1_handle)", true)]).unwrap(),
            vec![(atom("in_hand(rob1, cup1)"), true)]
        );
        assert!(lift(&[]).unwrap().is_empty());
        let partial = lift(&[("loc*(book1, c13)", false), ("loc*(book1, c14)", false)]).unwrap();
        assert!(partial.is_empty());
        let all: Vec<(String, bool)> = ["c13", "c14", "c15", "c16"].iter().map(|c| (format!("loc*(book1, {c})"), false)).collect();
        let all: Vec<(&str, bool)> = all.iter().map(|(a, b)| (a.as_str(), *b)).collect();
        assert_eq!(lift(&all).unwrap(), vec![(atom("loc(book1, library)"), false)]);
        assert_eq!(lift(&[("loc*(book9, c1)", true)]), Err(RefineError::Unmapped("book9".into())));
        let dup = lift(&[("loc*(cup1_base, c1)", true), ("loc*(cup1_handle, c2)", true)]).unwrap();
        assert_eq!(dup, vec![(atom("loc(cup1, office1)"), true)]);
    }
}

mod zoom_size {
    use mrati::bench::level::{level_domain, level_spec, level_task};
    use mrati::controller::Domain;
    use mrati::domain::{ground_with_budget, Atom, DomainError, GroundLit, SystemDescription};
    use mrati::multires::{relevant_constants, zoom};
    use mrati::search::{plan_minimal, Goal, PlanOptions};
    use mrati::semantics::{complete_state, successor};

    /// Ground axiom instances the grounder would create.
    fn ground_size(desc: &SystemDescription) -> u128 {
        match ground_with_budget(desc, 0) {
            Err(DomainError::Budget { needed, .. }) => needed,
            other => panic!("expected a budget error, got {other:?}"),
        }
    }

    #[test]
    fn zoomed_grounding_is_a_small_fraction_at_level_three() {
        let spec = level_spec(3).unwrap();
        let dom = Domain::new(level_domain(&spec)).unwrap();
        let g = &dom.g;
        let full = ground_size(&dom.fine.desc) as f64;
        let mut ratios = Vec::new();
        for seed in 0..20 {
            let task = level_task(&spec, seed);
            let lits = |xs: &[(Atom, bool)]| -> Vec<GroundLit> {
                xs.iter().map(|(a, p)| g.lit_from_ast(a, *p).unwrap()).collect()
            };
            let mut s = complete_state(g, &lits(&task.initial_obs)).unwrap();
            let goal = Goal::new(lits(&task.goal));
            let plan = plan_minimal(g, &s, &goal, &PlanOptions::default()).unwrap();
            for &a in &plan.actions {
                let t = successor(g, &s, a).state().unwrap();
                let relcon = relevant_constants(g, &s, a, &t, &goal);
                ratios.push(ground_size(&zoom(&dom.fine, &relcon).desc) as f64 / full);
                s = t;
            }
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(ratios.iter().all(|r| *r < 0.5), "{ratios:?}");
        assert!(mean < 0.1, "mean zoomed fraction {mean:.3}");
    }
}
