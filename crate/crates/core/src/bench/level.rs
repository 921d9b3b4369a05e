use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controller::Task;
use crate::domain::{parse_domain, Atom, SystemDescription, Term};
use crate::executor::ExoScript;

/// Size of one complexity level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSpec {
    pub id: usize,
    pub rooms: usize,
    pub cells_per_room: usize,
    /// Number of fine parts of each object.
    pub parts: Vec<usize>,
}

impl LevelSpec {
    pub fn name(&self) -> String {
        format!("L{}", self.id)
    }

    pub fn objects(&self) -> usize {
        self.parts.len()
    }

    pub fn total_parts(&self) -> usize {
        self.parts.iter().sum()
    }
}

fn parts(groups: &[(usize, usize)]) -> Vec<usize> {
    groups.iter().flat_map(|&(n, p)| std::iter::repeat_n(p, n)).collect()
}

/// Levels 1 to 8.
pub fn level_spec(id: usize) -> Option<LevelSpec> {
    let (rooms, cells, objects) = match id {
        1 => (2, 2, parts(&[(1, 1)])),
        2 => (3, 2, parts(&[(2, 2)])),
        3 => (4, 4, parts(&[(3, 3)])),
        4 => (5, 5, parts(&[(4, 4)])),
        5 => (5, 9, parts(&[(8, 2)])),
        6 => (5, 12, parts(&[(8, 2), (4, 1)])),
        7 => (5, 16, parts(&[(8, 2), (4, 1)])),
        8 => (5, 16, parts(&[(16, 2), (8, 1)])),
        _ => return None,
    };
    Some(LevelSpec { id, rooms, cells_per_room: cells, parts: objects })
}

pub const LEVELS: std::ops::RangeInclusive<usize> = 1..=8;

pub fn room(r: usize) -> String {
    format!("room{}", r + 1)
}

pub fn cell(r: usize, c: usize) -> String {
    format!("r{}c{}", r + 1, c + 1)
}

pub fn object(o: usize) -> String {
    format!("obj{}", o + 1)
}

pub fn part(o: usize, p: usize) -> String {
    format!("obj{}p{}", o + 1, p + 1)
}

/// Cells of a room laid out row by row on a grid as close to square as possible.
fn grid_edges(n: usize) -> Vec<(usize, usize)> {
    let width = (1..=n).find(|w| w * w >= n).unwrap_or(1);
    let mut out = Vec::new();
    for i in 0..n {
        if (i + 1) % width != 0 && i + 1 < n {
            out.push((i, i + 1));
        }
        if i + width < n {
            out.push((i, i + width));
        }
    }
    out
}

fn list(items: impl IntoIterator<Item = String>) -> String {
    items.into_iter().collect::<Vec<_>>().join(", ")
}

/// Domain text for a level: rooms in a corridor, each a grid of cells, with
/// a doorway between the last cell of a room and the first cell of the next.
pub fn level_domain_text(spec: &LevelSpec) -> String {
    let mut t = String::new();
    let rooms: Vec<String> = (0..spec.rooms).map(room).collect();
    let objects: Vec<String> = (0..spec.objects()).map(object).collect();
    let _ = writeln!(t, "sorts:\n  place = {{{}}}\n  robot = {{rob1}}\n  object = {{{}}}\n  thing = robot + object\n", list(rooms.clone()), list(objects));
    t.push_str(
        "statics:\n  next_to(place, place)\n\nfluents basic:\n  loc(thing, place)\n  in_hand(robot, object)\n\n\
         actions agent:\n  move(robot, place)\n  pickup(robot, object)\n  putdown(robot, object)\n\n\
         actions exogenous:\n  exo_move(object, place)\n\nfacts:\n",
    );
    for r in 1..spec.rooms {
        let _ = writeln!(t, "  next_to({}, {}).", room(r - 1), room(r));
    }
    t.push_str(
        "\naxioms:\n  next_to(P2, P1) if next_to(P1, P2).\n  move(R, P) causes loc(R, P).\n  \
         pickup(R, O) causes in_hand(R, O).\n  putdown(R, O) causes -in_hand(R, O).\n  \
         exo_move(O, P) causes loc(O, P).\n  -loc(T, P2) if loc(T, P1), P1 != P2.\n  \
         loc(O, P) if loc(R, P), in_hand(R, O).\n  \
         impossible pickup(R, O) if loc(R, P1), loc(O, P2), P1 != P2.\n  \
         impossible pickup(R, O) if in_hand(R, O2).\n  impossible putdown(R, O) if -in_hand(R, O).\n  \
         impossible move(R, P) if loc(R, P1), -next_to(P, P1).\n  \
         impossible exo_move(O, P) if in_hand(R, O).\n  impossible exo_move(O, P) if loc(O, P).\n\n",
    );
    let cells: Vec<String> = (0..spec.rooms)
        .flat_map(|r| (0..spec.cells_per_room).map(move |c| format!("{}: {}", cell(r, c), room(r))))
        .collect();
    let parts: Vec<String> = spec
        .parts
        .iter()
        .enumerate()
        .flat_map(|(o, &n)| (0..n).map(move |p| format!("{}: {}", part(o, p), object(o))))
        .collect();
    let _ = writeln!(
        t,
        "refinement:\n  counterpart place* of place = {{{}}}\n  counterpart object* of object = {{{}}}\n  \
         magnify next_to, loc, in_hand, move, pickup, putdown, exo_move\n  observer robot via loc*\n  \
         observe loc*, in_hand*\n  test in_hand*(R, O) by R.\n",
        list(cells),
        list(parts)
    );
    t.push_str("fine facts:\n");
    for r in 0..spec.rooms {
        for (a, b) in grid_edges(spec.cells_per_room) {
            let _ = writeln!(t, "  next_to*({}, {}).", cell(r, a), cell(r, b));
        }
        if r + 1 < spec.rooms {
            let _ = writeln!(t, "  next_to*({}, {}).", cell(r, spec.cells_per_room - 1), cell(r + 1, 0));
        }
    }
    t.push_str("\nfine axioms:\n  loc*(P2, C) if loc*(P1, C), component(P1, O), component(P2, O), P1 != P2.\n");
    t
}

pub fn level_domain(spec: &LevelSpec) -> SystemDescription {
    parse_domain(&level_domain_text(spec)).expect("generated level domains are well formed")
}

fn atom(pred: &str, args: &[&str]) -> Atom {
    Atom::new(pred, args.iter().map(|a| Term::Const((*a).to_owned())).collect())
}

/// A random placement and a target: move `obj1` to another room. The robot,
/// the target and its destination are drawn first, so levels that differ only
/// in their other objects share them under the same seed.
pub fn level_task(spec: &LevelSpec, seed: u64) -> Task {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let place = |rng: &mut ChaCha8Rng| (rng.gen_range(0..spec.rooms), rng.gen_range(0..spec.cells_per_room));
    let (rr, rc) = place(&mut rng);
    let target = place(&mut rng);
    let mut dest: Vec<usize> = (0..spec.rooms).filter(|&r| r != target.0).collect();
    dest.shuffle(&mut rng);
    let mut truth = vec![atom("loc*", &["rob1", &cell(rr, rc)])];
    let mut beliefs = vec![(atom("loc", &["rob1", &room(rr)]), true)];
    for (o, &n) in spec.parts.iter().enumerate() {
        let (r, c) = if o == 0 { target } else { place(&mut rng) };
        for p in 0..n {
            truth.push(atom("loc*", &[&part(o, p), &cell(r, c)]));
        }
        beliefs.push((atom("loc", &[&object(o), &room(r)]), true));
    }
    let goal = vec![
        (atom("loc", &[&object(0), &room(dest[0])]), true),
        (atom("in_hand", &["rob1", &object(0)]), false),
    ];
    Task { goal, initial_obs: beliefs, truth, script: ExoScript::default() }
}
