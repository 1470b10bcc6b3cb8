//! Shared fixtures, oracles and generators for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

pub mod props;

use acpstep_core::frontend::{load, GroundingResult};
use acpstep_core::model::{Atom, AtomSet, CAtom, CRule, GroundProgram, Interpretation};
use acpstep_core::stepping::{
    candidate_rules, undecided_atoms, validate_assignment, Computation, State, StepDelta,
};
use acpstep_core::Limits;
use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

pub const INTRO: &str = "a :- not b.\nb :- not a.\na :- b.\n";

pub const COLOURING_BUGGY: &str = "\
1{color(X,red;green;blue)}1 :- node(X).
:- edge(X,Y), color(X,C), color(X,C).
node(X):-edge(X,Y).
node(Y):-edge(X,Y).
edge(1,2). edge(1,3). edge(1,4).
edge(2,4). edge(2,5). edge(2,6).
edge(3,4). edge(3,5). edge(3,6).
edge(4,5). edge(5,6).
";

pub const EX_3_1: &str = "\
a :- <{a,b},{{},{a,b}}>.
b :- a.
a :- b.
<{c},{{},{c}}>.
:- c.
";

pub const EX_3_2: &str = "a :- b.\nb :- <{a},{{},{a}}>.\n";

pub const EX_3_3: &str = "a | <{a,b},{{a},{a,b}}>.\nb | <{a,b},{{b},{a,b}}>.\n";

pub const MAZE_INSTANCE: &str = "\
col(1..5). row(1..5).
entrance(1,2). exit(5,4). wall(3,3). empty(3,4).
";

pub const MAZE_STEP: &str = "\
maxCol(X) :- col(X), not col(X+1).
maxRow(Y) :- row(Y), not row(Y+1).
border(1,Y) :- col(1), row(Y).
border(X,1) :- col(X), row(1).
border(X,Y) :- row(Y), maxCol(X).
border(X,Y) :- col(X), maxRow(Y).

wall(X,Y) :- border(X,Y), not entrance(X,Y), not exit(X,Y).
{ wall(X,Y) : col(X), row(Y), not border(X,Y) }.
empty(X,Y) :- col(X), row(Y), not wall(X,Y).
";

pub const MAZE_NO_AS: &str = "\
adjacent(X,Y,X,Y+1) :- col(X), row(Y), row(Y+1).
adjacent(X,Y,X,Y-1) :- col(X), row(Y), row(Y-1).
adjacent(X,Y,X+1,Y) :- col(X), row(Y), col(X+1).
adjacent(X,Y,X-1,Y) :- col(X), row(Y), col(X-1).
reach(X,Y)   :- entrance(X,Y), not wall(X,Y).
reach(XX,YY) :- adjacent(X,Y,XX,YY), reach(X,Y), not wall(XX,YY).

:- empty(X,Y), not reach(X,Y).
:- empty(X,Y), empty(X+1,Y), empty(X,X+1), empty(X+1,Y+1).
";

/// Rules of the state after the jump through the instance facts and the
/// border-related rules, as listed for the walkthrough.
pub const MAZE_S4_RULES: &str = "\
col(1). col(2). col(3). col(4). col(5).
row(1). row(2). row(3). row(4). row(5).
wall(3,3). empty(3,4). entrance(1,2). exit(5,4).
maxCol(5) :- col(5), not col(6).
maxRow(5) :- row(5), not row(6).
border(1,1) :- col(1), row(1).
border(2,1) :- col(2), row(1).
border(3,1) :- col(3), row(1).
border(4,1) :- col(4), row(1).
border(5,1) :- col(5), row(1).
border(1,2) :- col(1), row(2).
border(5,2) :- row(2), maxCol(5).
border(1,3) :- col(1), row(3).
border(5,3) :- row(3), maxCol(5).
border(1,4) :- col(1), row(4).
border(5,4) :- row(4), maxCol(5).
border(1,5) :- col(1), row(5).
border(5,1) :- row(1), maxCol(5).
border(5,5) :- row(5), maxCol(5).
border(1,5) :- col(1), maxRow(5).
border(2,5) :- col(2), maxRow(5).
border(3,5) :- col(3), maxRow(5).
border(4,5) :- col(4), maxRow(5).
border(5,5) :- col(5), maxRow(5).
";

pub const MAZE_I_AUX: &str = "col(1), col(2), col(3), col(4), col(5), maxCol(5),
row(1), row(2), row(3), row(4), row(5), maxRow(5),
empty(3,4), wall(3,3), entrance(1,2), exit(5,4),
border(1,1), border(2,1), border(3,1), border(4,1),
border(5,1), border(1,2), border(5,2), border(1,3),
border(5,3), border(1,4), border(5,4), border(1,5),
border(2,5), border(3,5), border(4,5), border(5,5)";

/// Instances added by the final jump of the walkthrough.
pub const MAZE_S6_NEW_RULES: &str = "\
wall(1, 1) :- border(1, 1), not entrance(1, 1), not exit(1, 1).
wall(2, 1) :- border(2, 1), not entrance(2, 1), not exit(2, 1).
wall(3, 1) :- border(3, 1), not entrance(3, 1), not exit(3, 1).
wall(4, 1) :- border(4, 1), not entrance(4, 1), not exit(4, 1).
wall(5, 1) :- border(5, 1), not entrance(5, 1), not exit(5, 1).
wall(5, 2) :- border(5, 2), not entrance(5, 2), not exit(5, 2).
wall(1, 3) :- border(1, 3), not entrance(1, 3), not exit(1, 3).
wall(5, 3) :- border(5, 3), not entrance(5, 3), not exit(5, 3).
wall(1, 4) :- border(1, 4), not entrance(1, 4), not exit(1, 4).
wall(1, 5) :- border(1, 5), not entrance(1, 5), not exit(1, 5).
wall(2, 5) :- border(2, 5), not entrance(2, 5), not exit(2, 5).
wall(3, 5) :- border(3, 5), not entrance(3, 5), not exit(3, 5).
wall(4, 5) :- border(4, 5), not entrance(4, 5), not exit(4, 5).
wall(5, 5) :- border(5, 5), not entrance(5, 5), not exit(5, 5).
empty(1, 2) :- col(1), row(2), not wall(1, 2).
empty(2, 2) :- col(2), row(2), not wall(2, 2).
empty(4, 2) :- col(4), row(2), not wall(4, 2).
empty(2, 3) :- col(2), row(3), not wall(2, 3).
empty(4, 3) :- col(4), row(3), not wall(4, 3).
empty(2, 4) :- col(2), row(4), not wall(2, 4).
empty(3, 4) :- col(3), row(4), not wall(3, 4).
empty(4, 4) :- col(4), row(4), not wall(4, 4).
empty(5, 4) :- col(5), row(4), not wall(5, 4).
";

/// The generated maze, projected to `wall/2` and `empty/2`.
pub const MAZE_SOLUTION: &str = "wall(1,1), empty(1,2), wall(1,3), wall(1,4), wall(1,5),
 wall(2,1), empty(2,2), empty(2,3), empty(2,4), wall(2,5),
 wall(3,1), wall(3,2), wall(3,3), empty(3,4), wall(3,5),
 wall(4,1), empty(4,2), empty(4,3), empty(4,4), wall(4,5),
 wall(5,1), wall(5,2), wall(5,3), empty(5,4), wall(5,5)";

pub fn grounded(text: &str) -> GroundingResult {
    load(text, &Limits::default()).expect("fixture grounds").1
}

pub fn atom(s: &str) -> Atom {
    Atom::parse(s).expect("fixture atom")
}

pub fn atoms(text: &str) -> AtomSet {
    Interpretation::parse_list(text)
        .expect("fixture atom list")
        .into_atoms()
}

pub fn interp(text: &str) -> Interpretation {
    Interpretation::parse_list(text).expect("fixture atom list")
}

/// The ground rule of `gr` with the given text, ignoring whitespace.
pub fn rule(gr: &GroundingResult, text: &str) -> Arc<CRule> {
    let k = gr
        .program
        .find_by_text(text)
        .unwrap_or_else(|| panic!("no ground rule {text}"));
    gr.program.rules()[k].clone()
}

pub fn delta(r: &Arc<CRule>, t: &str, f: &str) -> StepDelta {
    StepDelta {
        rule: r.clone(),
        delta_true: atoms(t),
        delta_false: atoms(f),
    }
}

/// Splits a listing into one rule text per statement.
pub fn statements(listing: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    for c in listing.chars() {
        match c {
            '(' | '{' | '<' => depth += 1,
            ')' | '}' | '>' => depth -= 1,
            _ => {}
        }
        cur.push(c);
        if c == '.' && depth == 0 && !cur.ends_with("..") {
            let t = cur.trim().to_string();
            if !t.is_empty() {
                out.push(t);
            }
            cur.clear();
        }
    }
    out
}

pub fn state(rules: &[&Arc<CRule>], pos: &str, neg: &str, ups: &[&str]) -> State {
    let mut unfounded: Vec<AtomSet> = vec![AtomSet::new()];
    unfounded.extend(ups.iter().map(|u| atoms(u)));
    unfounded.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    State {
        rules: GroundProgram::from_shared(rules.iter().map(|r| (*r).clone())),
        pos: interp(pos),
        neg: atoms(neg),
        unfounded,
    }
}

/// Answer sets of an elementary program with at most one head atom per rule,
/// via the Gelfond-Lifschitz reduct and least models.
pub fn gl_answer_sets(p: &GroundProgram) -> Vec<Interpretation> {
    let dom: Vec<Atom> = p.universe().iter().cloned().collect();
    let el = |c: &CAtom| c.as_elementary().expect("elementary").clone();
    let mut out = Vec::new();
    for m in 0u64..(1u64 << dom.len()) {
        let i: Interpretation = dom
            .iter()
            .enumerate()
            .filter(|(k, _)| m & (1 << k) != 0)
            .map(|(_, a)| a.clone())
            .collect();
        let mut reduct = Vec::new();
        let mut violated = false;
        for r in p.rules() {
            if r.neg_body.iter().any(|c| i.contains(&el(c))) {
                continue;
            }
            let pos: Vec<Atom> = r.pos_body.iter().map(el).collect();
            match r.head.first() {
                Some(h) => reduct.push((el(h), pos)),
                None => violated |= pos.iter().all(|a| i.contains(a)),
            }
        }
        if violated {
            continue;
        }
        let mut least = Interpretation::new();
        loop {
            let before = least.len();
            for (h, pos) in &reduct {
                if pos.iter().all(|a| least.contains(a)) {
                    least.insert(h.clone());
                }
            }
            if least.len() == before {
                break;
            }
        }
        if least == i {
            out.push(i);
        }
    }
    out.sort();
    out
}

/// Every valid assignment for stepping `r` from `s`.
pub fn all_assignments(s: &State, r: &Arc<CRule>) -> Vec<StepDelta> {
    let open: Vec<Atom> = undecided_atoms(s, r).into_iter().collect();
    let mut out = Vec::new();
    for m in 0u64..(1u64 << open.len()) {
        let (t, f): (Vec<_>, Vec<_>) = open
            .iter()
            .enumerate()
            .partition(|(k, _)| m & (1 << k) != 0);
        let d = StepDelta {
            rule: r.clone(),
            delta_true: t.into_iter().map(|(_, a)| a.clone()).collect(),
            delta_false: f.into_iter().map(|(_, a)| a.clone()).collect(),
        };
        if validate_assignment(s, &d).is_none() {
            out.push(d);
        }
    }
    out
}

/// All maximal computations from the empty state, as step lists.
pub fn all_computations(p: &GroundProgram, limits: &Limits) -> Vec<Computation> {
    let mut done = Vec::new();
    let mut stack = vec![Computation::start(State::empty())];
    while let Some(c) = stack.pop() {
        let cands = candidate_rules(p, c.last());
        if cands.is_empty() {
            done.push(c);
            continue;
        }
        for r in &cands {
            for d in all_assignments(c.last(), r) {
                let mut next = c.clone();
                next.push(d, limits).expect("valid step");
                stack.push(next);
            }
        }
    }
    done
}

/// A random maximal computation from the empty state.
pub fn random_walk(p: &GroundProgram, rng: &mut impl Rng, limits: &Limits) -> Computation {
    let mut c = Computation::start(State::empty());
    loop {
        let cands = candidate_rules(p, c.last());
        let Some(r) = cands.choose(rng) else {
            return c;
        };
        let options = all_assignments(c.last(), r);
        let d = options.choose(rng).expect("candidate admits a step").clone();
        c.push(d, limits).expect("valid step");
    }
}

fn prop_atom(i: usize) -> Atom {
    Atom::prop(&format!("p{i}"))
}

fn catom(n: usize) -> impl Strategy<Value = CAtom> {
    prop_oneof![
        6 => (0..n).prop_map(|i| CAtom::atom(prop_atom(i))),
        2 => (vec(0..n, 1..=3), any::<u8>()).prop_map(|(idx, mask)| {
            let dom: AtomSet = idx.into_iter().map(prop_atom).collect();
            let list: Vec<Atom> = dom.iter().cloned().collect();
            let sats = (0u32..(1 << list.len())).filter(|m| mask & (1 << m) != 0).map(|m| {
                list.iter()
                    .enumerate()
                    .filter(|(k, _)| m & (1 << k) != 0)
                    .map(|(_, a)| a.clone())
                    .collect::<AtomSet>()
            });
            CAtom::explicit(dom.clone(), sats.collect::<Vec<_>>()).expect("subsets of the domain")
        }),
        1 => (vec(0..n, 1..=3), option::of(0i64..3), option::of(0i64..4)).prop_map(
            |(idx, lo, hi)| CAtom::choice(idx.into_iter().map(prop_atom), lo, hi)
        ),
    ]
}

/// Random c-programs with at most 10 atoms and 8 rules.
pub fn program() -> impl Strategy<Value = GroundProgram> {
    (1usize..=10).prop_flat_map(|n| {
        vec(
            (
                prop_oneof![7 => Just(1usize), 2 => Just(2), 1 => Just(0)]
                    .prop_flat_map(move |k| vec(catom(n), k)),
                vec(catom(n), 0..=2),
                vec(catom(n), 0..=1),
            )
                .prop_map(|(h, pb, nb)| CRule::new(h, pb, nb)),
            1..=8,
        )
        .prop_map(GroundProgram::new)
    })
}

/// Random elementary programs with at most one head atom per rule.
pub fn normal_program() -> impl Strategy<Value = GroundProgram> {
    (1usize..=10).prop_flat_map(|n| {
        vec(
            (option::weighted(0.85, 0..n), vec(0..n, 0..=2), vec(0..n, 0..=2)).prop_map(
                |(h, pb, nb)| {
                    let e = |i: usize| CAtom::atom(prop_atom(i));
                    CRule::new(
                        h.into_iter().map(e).collect(),
                        pb.into_iter().map(e).collect(),
                        nb.into_iter().map(e).collect(),
                    )
                },
            ),
            1..=8,
        )
        .prop_map(GroundProgram::new)
    })
}

/// Normal, convex and absolutely tight programs: head atoms have larger indices
/// than every atom occurring positively in the body.
pub fn tight_convex_program() -> impl Strategy<Value = GroundProgram> {
    (2usize..=10).prop_flat_map(|n| {
        vec(
            (1..n, any::<bool>(), vec(any::<prop::sample::Index>(), 0..=2), vec(0..n, 0..=2), option::of(0i64..2), any::<bool>())
                .prop_map(move |(level, choice_head, pb, nb, lo, choice_body)| {
                    let body_atoms: Vec<Atom> =
                        pb.iter().map(|ix| prop_atom(ix.index(level))).collect();
                    let head = if choice_head {
                        let hi = (level + 2).min(n);
                        CAtom::choice((level..hi).map(prop_atom), lo, Some(1))
                    } else {
                        CAtom::atom(prop_atom(level))
                    };
                    let pos_body: Vec<CAtom> = if choice_body && !body_atoms.is_empty() {
                        vec![CAtom::choice(body_atoms, Some(1), None)]
                    } else {
                        body_atoms.into_iter().map(CAtom::atom).collect()
                    };
                    let neg_body = nb.into_iter().map(|i| CAtom::atom(prop_atom(i))).collect();
                    CRule::new(vec![head], pos_body, neg_body)
                }),
            1..=8,
        )
        .prop_map(GroundProgram::new)
    })
}
