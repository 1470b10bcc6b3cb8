//! Property checks shared by the proptest suites and the acceptance run.

use std::collections::BTreeMap;

use acpstep_core::analysis::{dependency_graph, rule_dependency_graph, stable_guarantee};
use acpstep_core::model::{AtomSet, CRule, GroundProgram, Interpretation};
use acpstep_core::semantics::{
    enumerate_answer_sets, flp_reduct, is_answer_set, solve_all, Strategy,
};
use acpstep_core::stepping::{
    apply_jump, apply_step, check_state, computation_status, expand_jump, guided_computation,
    Computation, State, Status, StepDelta,
};
use acpstep_core::{Error, Limits};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{gl_answer_sets, random_walk};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn e2s(e: Error) -> String {
    e.to_string()
}

fn oracle(p: &GroundProgram, l: &Limits) -> Result<Vec<Interpretation>, String> {
    enumerate_answer_sets(p, l).map_err(e2s)
}

/// (a) Locally maintained unfounded sets match exhaustive recomputation, and
/// rooted computations project onto their prefixes.
pub fn incremental_unfounded(p: &GroundProgram, seed: u64) -> Check {
    let l = Limits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..WALKS {
        walk_projects(p, &mut rng, &l)?;
    }
    Ok(())
}

const WALKS: usize = 3;

fn walk_projects(p: &GroundProgram, rng: &mut ChaCha8Rng, l: &Limits) -> Check {
    let c = random_walk(p, rng, l);
    let last = c.last();
    for (k, s) in c.states.iter().enumerate() {
        if let Some(v) = check_state(s, l).map_err(e2s)? {
            return Err(format!("state {k} of the walk is not a state: {v}"));
        }
        let dom = s.rules.universe();
        ensure!(
            s.pos == last.pos.project(dom),
            "state {k}: I is not the projection of the final I"
        );
        let neg: AtomSet = last.neg.intersection(dom).cloned().collect();
        ensure!(s.neg == neg, "state {k}: I- is not the projection of the final I-");
    }
    Ok(())
}

/// (b) Succeeded computations end in answer sets, whether built by steps or a final jump.
pub fn soundness(p: &GroundProgram, seed: u64) -> Check {
    let l = Limits::default();
    let models = oracle(p, &l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..WALKS {
        walk_is_sound(p, &models, &mut rng, &l)?;
    }
    Ok(())
}

fn walk_is_sound(
    p: &GroundProgram,
    models: &[Interpretation],
    rng: &mut ChaCha8Rng,
    l: &Limits,
) -> Check {
    let l = l.clone();
    let c = random_walk(p, rng, &l);
    let st = computation_status(p, &c.states, false, &l).map_err(e2s)?;
    if st.status == Status::Succeeded {
        let i = &c.last().pos;
        ensure!(models.contains(i), "succeeded walk ends in {i}, not an answer set");
        let rep = is_answer_set(p, i, Strategy::Auto, &l).map_err(e2s)?;
        ensure!(rep.is_answer_set, "is_answer_set rejects the succeeded walk's {i}");
    }
    let cut = rng.random_range(0..c.states.len());
    let prefix = &c.states[..=cut];
    match apply_jump(p, &prefix[cut], p, &l) {
        Ok((s, i)) => {
            let mut states = prefix.to_vec();
            states.push(s);
            let st = computation_status(p, &states, false, &l).map_err(e2s)?;
            ensure!(st.status == Status::Succeeded, "jump through P did not succeed");
            ensure!(models.contains(&i), "jump through P reached {i}, not an answer set");
        }
        Err(Error::NoAnswerSet) => {}
        Err(e) => return Err(e2s(e)),
    }
    Ok(())
}

/// (c) Every answer set is reached by a guided computation from the empty state.
pub fn completeness(p: &GroundProgram) -> Check {
    let l = Limits::default();
    for i in oracle(p, &l)? {
        let c = guided_computation(p, &i, &State::empty(), None, &l).map_err(e2s)?;
        let last = c.last();
        ensure!(last.pos == i, "guided computation ends in {} not {i}", last.pos);
        ensure!(
            last.rules == flp_reduct(p, &i),
            "guided computation for {i} does not end with the reduct"
        );
        let st = computation_status(p, &c.states, false, &l).map_err(e2s)?;
        ensure!(st.status == Status::Succeeded, "guided computation for {i} is {:?}", st.status);
    }
    Ok(())
}

/// (d) A jump and its expansion replayed step by step reach the same state.
pub fn jump_expansion(p: &GroundProgram, seed: u64) -> Check {
    let l = Limits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = random_walk(p, &mut rng, &l);
    let from = c.states[rng.random_range(0..c.states.len())].clone();
    let selected = GroundProgram::from_shared(
        p.rules().iter().filter(|_| rng.random_bool(0.6)).cloned(),
    );
    match apply_jump(p, &from, &selected, &l) {
        Ok((to, i)) => {
            ensure!(to.pos == i && to.is_stable(), "jump state does not match its answer set");
            let steps = expand_jump(&from, &to, None).map_err(e2s)?;
            let replay = Computation::replay(from.clone(), &steps, &l).map_err(e2s)?;
            ensure!(*replay.last() == to, "replayed expansion differs from the jump state");
        }
        Err(Error::NoAnswerSet) => {
            let aux = from.rules.union(&selected);
            let compatible = oracle(&aux, &l)?.into_iter().any(|i| {
                from.pos.is_subset(&i) && from.neg.iter().all(|a| !i.contains(a))
            });
            ensure!(!compatible, "jump reported no answer set but one extends the state");
        }
        Err(e) => return Err(e2s(e)),
    }
    Ok(())
}

/// (e) Complete computations towards the same answer set agree in final state and length.
pub fn order_independence(p: &GroundProgram, seed: u64) -> Check {
    let l = Limits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in oracle(p, &l)? {
        let mut finals = Vec::new();
        for _ in 0..2 {
            let mut perm: Vec<usize> = (0..p.len()).collect();
            perm.shuffle(&mut rng);
            let ranks: BTreeMap<&CRule, usize> =
                p.rules().iter().map(|r| &**r).zip(perm).collect();
            let rank = |r: &CRule| ranks[r];
            let c = guided_computation(p, &i, &State::empty(), Some(&rank), &l).map_err(e2s)?;
            finals.push((c.last().clone(), c.len()));
        }
        ensure!(finals[0] == finals[1], "two orders towards {i} end differently");
    }
    Ok(())
}

/// (f) Atom-level and rule-level dependency graphs are acyclic together.
pub fn graph_equivalence(p: &GroundProgram) -> Check {
    let l = Limits::default();
    let atoms = dependency_graph(p, &l).is_acyclic();
    let rules = rule_dependency_graph(p, &l).is_acyclic();
    ensure!(atoms == rules, "atom graph acyclic={atoms}, rule graph acyclic={rules}");
    Ok(())
}

/// (g) Stepping the reduct in certificate order keeps every state stable.
pub fn certificate_stability(p: &GroundProgram) -> Check {
    let l = Limits::default();
    let g = stable_guarantee(p, &l).map_err(e2s)?;
    ensure!(g.holds, "generator produced a program without the guarantee: {:?}", g.violation);
    let order = g.certificate.expect("certificate when the guarantee holds");
    for i in oracle(p, &l)? {
        let reduct = flp_reduct(p, &i);
        let mut s = State::empty();
        for r in order.iter().filter(|r| reduct.contains(r)) {
            let mut d = StepDelta {
                rule: r.clone(),
                delta_true: AtomSet::new(),
                delta_false: AtomSet::new(),
            };
            for a in r.domain() {
                if !s.decides(&a) {
                    if i.contains(&a) {
                        d.delta_true.insert(a);
                    } else {
                        d.delta_false.insert(a);
                    }
                }
            }
            s = apply_step(&s, &d, &l).map_err(|e| format!("certificate step {}: {e}", r.text()))?;
            ensure!(s.is_stable(), "unstable state after {} towards {i}", r.text());
        }
        ensure!(s.pos == i, "certificate stepping ends in {} not {i}", s.pos);
    }
    Ok(())
}

/// (h) Answer sets agree with the Gelfond-Lifschitz construction on elementary normal programs.
pub fn gl_agreement(p: &GroundProgram) -> Check {
    let l = Limits::default();
    let gl = gl_answer_sets(p);
    let brute = oracle(p, &l)?;
    let search = solve_all(p, None, &l).map_err(e2s)?;
    ensure!(gl == brute, "GL {gl:?} vs enumeration {brute:?}");
    ensure!(gl == search, "GL {gl:?} vs search {search:?}");
    Ok(())
}
