use std::sync::Arc;

use crate::error::{Error, Result};
use crate::frontend::GroundingResult;
use crate::limits::Limits;
use crate::model::{AtomSet, CRule, GroundProgram, Interpretation};
use crate::semantics::{flp_reduct, is_answer_set, solve_extension, Strategy};

use super::{apply_step, State, StepDelta};

/// A sequence of states linked by steps; `states.len() == steps.len() + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Computation {
    pub states: Vec<State>,
    pub steps: Vec<StepDelta>,
}

impl Computation {
    pub fn start(s: State) -> Self {
        Computation {
            states: vec![s],
            steps: Vec::new(),
        }
    }

    /// Applies `steps` one after another from `start`.
    pub fn replay(start: State, steps: &[StepDelta], limits: &Limits) -> Result<Self> {
        let mut c = Computation::start(start);
        for d in steps {
            c.push(d.clone(), limits)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, d: StepDelta, limits: &Limits) -> Result<&State> {
        let next = apply_step(self.last(), &d, limits)?;
        self.states.push(next);
        self.steps.push(d);
        Ok(self.last())
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("a computation has a first state")
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_stable(&self) -> bool {
        self.states.iter().all(State::is_stable)
    }
}

/// Ranks ground rules by the first source statement they stem from.
pub fn source_rank(gr: &GroundingResult) -> impl Fn(&CRule) -> usize + '_ {
    move |r| {
        gr.provenance_of(r)
            .iter()
            .map(|p| p.statement)
            .min()
            .unwrap_or(usize::MAX)
    }
}

/// Jumps from `s` through `selected ⊆ P`; returns the new stable state and the
/// answer set of `P_S ∪ selected` it was built from.
pub fn apply_jump(
    p: &GroundProgram,
    s: &State,
    selected: &GroundProgram,
    limits: &Limits,
) -> Result<(State, Interpretation)> {
    if let Some(r) = selected.rules().iter().find(|r| !p.contains(r)) {
        return Err(Error::UnknownRule(r.text()));
    }
    let Some(i) = solve_extension(&s.rules, selected, s.pos.atoms(), &s.neg, limits)? else {
        return Err(Error::NoAnswerSet);
    };
    let state = jump_state(s, selected, &i);
    Ok((state, i))
}

/// The stable state a jump through `selected` reaches when it picks the answer set `i`.
pub fn jump_state(s: &State, selected: &GroundProgram, i: &Interpretation) -> State {
    let rules = s.rules.union(&flp_reduct(selected, i));
    let neg: AtomSet = s
        .neg
        .iter()
        .chain(rules.universe())
        .filter(|a| !i.contains(a))
        .cloned()
        .collect();
    State {
        rules,
        pos: i.clone(),
        neg,
        unfounded: vec![AtomSet::new()],
    }
}

/// Steps leading from `from` to a later state `to` of the same computation family.
///
/// At each point the eligible rule with the smallest rank is taken; ties go to
/// canonical order. Each step decides the new atoms as `to` does.
pub fn expand_jump(
    from: &State,
    to: &State,
    rank: Option<&dyn Fn(&CRule) -> usize>,
) -> Result<Vec<StepDelta>> {
    if !from.rules.rules().iter().all(|r| to.rules.contains(r))
        || !from.pos.is_subset(&to.pos)
        || !from.neg.is_subset(&to.neg)
    {
        return Err(Error::PreconditionViolated(
            "the target state does not extend the start state".into(),
        ));
    }
    let mut pending: Vec<Arc<CRule>> = to
        .rules
        .rules()
        .iter()
        .filter(|r| !from.rules.contains(r))
        .cloned()
        .collect();
    let mut pos = from.pos.clone();
    let mut dom = from.domain();
    let mut out = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        let pick = pending
            .iter()
            .enumerate()
            .filter(|(_, r)| r.active(&pos))
            .min_by_key(|(k, r)| (rank.map_or(0, |f| f(r)), *k))
            .map(|(k, _)| k);
        let Some(k) = pick else {
            return Err(Error::InvalidState(format!(
                "no remaining rule of the target is active; {} left",
                pending.len()
            )));
        };
        let r = pending.remove(k);
        let mut d = StepDelta {
            rule: r.clone(),
            delta_true: AtomSet::new(),
            delta_false: AtomSet::new(),
        };
        for a in r.domain() {
            if dom.contains(&a) {
                continue;
            }
            dom.insert(a.clone());
            if to.pos.contains(&a) {
                pos.insert(a.clone());
                d.delta_true.insert(a);
            } else {
                d.delta_false.insert(a);
            }
        }
        out.push(d);
    }
    Ok(out)
}

/// A computation from `start` that ends in the complete state for the answer
/// set `target` of `P`.
pub fn guided_computation(
    p: &GroundProgram,
    target: &Interpretation,
    start: &State,
    rank: Option<&dyn Fn(&CRule) -> usize>,
    limits: &Limits,
) -> Result<Computation> {
    if !start.pos.is_subset(target) {
        return Err(Error::PreconditionViolated(
            "the start interpretation is not contained in the target".into(),
        ));
    }
    if let Some(a) = start.neg.iter().find(|a| target.contains(a)) {
        return Err(Error::PreconditionViolated(format!(
            "atom {a} is false in the start state but true in the target"
        )));
    }
    let reduct = flp_reduct(p, target);
    if let Some(r) = start.rules.rules().iter().find(|r| !reduct.contains(r)) {
        return Err(Error::PreconditionViolated(format!(
            "rule {} of the start state is not in the reduct",
            r.text()
        )));
    }
    match is_answer_set(p, target, Strategy::Auto, limits) {
        Ok(rep) if !rep.is_answer_set => {
            return Err(Error::PreconditionViolated(
                "the target is not an answer set".into(),
            ))
        }
        Ok(_) => {}
        Err(e) if e.is_cap() => {}
        Err(e) => return Err(e),
    }
    let rules = start.rules.union(&reduct);
    let scope: AtomSet = rules.universe().union(start.pos.atoms()).cloned().collect();
    let to = State {
        pos: target.project(&scope),
        neg: start
            .neg
            .iter()
            .chain(rules.universe())
            .filter(|a| !target.contains(a))
            .cloned()
            .collect(),
        rules,
        unfounded: vec![AtomSet::new()],
    };
    let steps = expand_jump(start, &to, rank)?;
    Computation::replay(start.clone(), &steps, limits)
}
