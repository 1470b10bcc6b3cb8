//! States, successors, jumps and computations.

mod jump;
pub mod script;
mod status;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::GroundingResult;
use crate::limits::Limits;
use crate::model::{format_atom_set, Atom, AtomSet, CRule, GroundProgram, Interpretation, Truth};
use crate::semantics::{canonical_family, external_support, unfounded_sets};

pub use jump::{apply_jump, expand_jump, guided_computation, jump_state, source_rank, Computation};
pub use status::{computation_status, failed_at, Status, StatusReport};
pub use tree::{ComputationTree, Edge, Node};

/// A state `⟨P, I, I⁻, Υ⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    pub rules: GroundProgram,
    pub pos: Interpretation,
    pub neg: AtomSet,
    /// All unfounded subsets of `pos`, `∅` included, in canonical order.
    pub unfounded: Vec<AtomSet>,
}

impl Default for State {
    fn default() -> Self {
        State::empty()
    }
}

impl State {
    pub fn empty() -> Self {
        State {
            rules: GroundProgram::default(),
            pos: Interpretation::new(),
            neg: AtomSet::new(),
            unfounded: vec![AtomSet::new()],
        }
    }

    /// `dom(S) = I ∪ I⁻`.
    pub fn domain(&self) -> AtomSet {
        self.pos.atoms().union(&self.neg).cloned().collect()
    }

    pub fn decides(&self, a: &Atom) -> bool {
        self.pos.contains(a) || self.neg.contains(a)
    }

    pub fn is_stable(&self) -> bool {
        self.unfounded.len() == 1 && self.unfounded[0].is_empty()
    }

    pub fn nonempty_unfounded(&self) -> impl Iterator<Item = &AtomSet> {
        self.unfounded.iter().filter(|x| !x.is_empty())
    }

    /// A state structure with `Υ` computed exhaustively.
    pub fn with_exhaustive_unfounded(
        rules: GroundProgram,
        pos: Interpretation,
        neg: AtomSet,
        limits: &Limits,
    ) -> Result<State> {
        let unfounded = unfounded_sets(&rules, &pos, limits)?;
        Ok(State {
            rules,
            pos,
            neg,
            unfounded,
        })
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rules: Vec<String> = self.rules.rules().iter().map(|r| r.text()).collect();
        let ups: Vec<String> = self.unfounded.iter().map(|x| format_atom_set(x)).collect();
        write!(
            f,
            "<{{{}}}, {}, {}, {{{}}}>",
            rules.join(" "),
            self.pos,
            format_atom_set(&self.neg),
            ups.join(", ")
        )
    }
}

/// A step: the new rule with the atoms it decides true and false.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepDelta {
    pub rule: Arc<CRule>,
    pub delta_true: AtomSet,
    pub delta_false: AtomSet,
}

/// Why a state structure is not a state or an assignment not a step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: String,
    pub message: String,
}

impl Violation {
    fn new(condition: &str, message: impl Into<String>) -> Self {
        Violation {
            condition: condition.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.condition, self.message)
    }
}

/// `dom(r) \ dom(S)`.
pub fn undecided_atoms(s: &State, r: &CRule) -> AtomSet {
    r.domain().into_iter().filter(|a| !s.decides(a)).collect()
}

/// Checks the successor conditions for adding `d.rule` with the given assignment.
pub fn validate_assignment(s: &State, d: &StepDelta) -> Option<Violation> {
    let r = &d.rule;
    if s.rules.contains(r) {
        return Some(Violation::new(
            "already-considered",
            format!("rule {} is already in the state", r.text()),
        ));
    }
    if !r.active(&s.pos) {
        return Some(Violation::new(
            "not-active",
            format!("rule {} is not active under the current interpretation", r.text()),
        ));
    }
    if let Some(a) = d.delta_true.intersection(&d.delta_false).next() {
        return Some(Violation::new(
            "assignment-overlap",
            format!("atom {a} is assigned both true and false"),
        ));
    }
    let dom = r.domain();
    if let Some(a) = d.delta_true.iter().chain(&d.delta_false).find(|a| !dom.contains(*a)) {
        return Some(Violation::new(
            "outside-domain",
            format!("atom {a} does not occur in the rule"),
        ));
    }
    if let Some(a) = d.delta_true.iter().chain(&d.delta_false).find(|a| s.decides(a)) {
        return Some(Violation::new(
            "already-decided",
            format!("atom {a} is already decided in the state"),
        ));
    }
    if let Some(a) = dom
        .iter()
        .find(|a| !s.decides(a) && !d.delta_true.contains(*a) && !d.delta_false.contains(*a))
    {
        return Some(Violation::new(
            "undecided-atom",
            format!("atom {a} still needs a truth value"),
        ));
    }
    let next = s.pos.union(&d.delta_true);
    if let Some(l) = r.body().find(|l| !l.eval(&next)) {
        return Some(Violation::new(
            "body-false",
            format!("body literal {l} is false under the new interpretation"),
        ));
    }
    if !r.head_satisfied(&next) {
        let msg = if r.head.is_empty() {
            "the rule is a constraint; its empty head cannot be satisfied".to_string()
        } else {
            format!("no head c-atom of {} is satisfied", r.text())
        };
        return Some(Violation::new("head-false", msg));
    }
    None
}

/// `S'` for a valid step, with `Υ'` maintained locally from `Υ`.
pub fn apply_step(s: &State, d: &StepDelta, limits: &Limits) -> Result<State> {
    if let Some(v) = validate_assignment(s, d) {
        return Err(Error::InvalidStep(v.to_string()));
    }
    let pos = s.pos.union(&d.delta_true);
    let delta: Vec<&Atom> = d.delta_true.iter().collect();
    let cap = limits.subsets.min(63);
    if delta.len() > cap {
        return Err(Error::CapExceeded {
            what: "step delta subsets",
            size: delta.len(),
            cap,
        });
    }
    let mut unfounded = Vec::new();
    for x in &s.unfounded {
        for m in 0u64..(1u64 << delta.len()) {
            let mut xp = x.clone();
            xp.extend(
                delta
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| m & (1 << k) != 0)
                    .map(|(_, a)| (*a).clone()),
            );
            if !external_support(&d.rule, &xp, &pos) {
                unfounded.push(xp);
                if unfounded.len() > limits.unfounded {
                    return Err(Error::UnfoundedOverflow {
                        cap: limits.unfounded,
                    });
                }
            }
        }
    }
    let mut rules: Vec<Arc<CRule>> = s.rules.rules().to_vec();
    rules.push(d.rule.clone());
    Ok(State {
        rules: GroundProgram::from_shared(rules),
        pos,
        neg: s.neg.union(&d.delta_false).cloned().collect(),
        unfounded: canonical_family(unfounded),
    })
}

/// Checks the three state conditions; `Υ` is compared against exhaustive recomputation.
pub fn check_state(s: &State, limits: &Limits) -> Result<Option<Violation>> {
    if let Some(a) = s.neg.iter().find(|a| s.pos.contains(a)) {
        return Ok(Some(Violation::new(
            "disjointness",
            format!("atom {a} is both true and false"),
        )));
    }
    for r in s.rules.rules() {
        if let Some(l) = r.body().find(|l| !l.eval(&s.pos)) {
            return Ok(Some(Violation::new(
                "rule-not-active",
                format!("body literal {l} of {} is false", r.text()),
            )));
        }
        if !r.head_satisfied(&s.pos) {
            return Ok(Some(Violation::new(
                "rule-not-satisfied",
                format!("no head c-atom of {} is satisfied", r.text()),
            )));
        }
        if let Some(a) = r.domain().into_iter().find(|a| !s.decides(a)) {
            return Ok(Some(Violation::new(
                "domain-undecided",
                format!("atom {a} of {} is neither true nor false", r.text()),
            )));
        }
    }
    let want = unfounded_sets(&s.rules, &s.pos, limits)?;
    if want != s.unfounded {
        let show = |f: &[AtomSet]| {
            f.iter()
                .map(|x| format_atom_set(x))
                .collect::<Vec<_>>()
                .join(", ")
        };
        return Ok(Some(Violation::new(
            "unfounded-sets",
            format!(
                "tracked {{{}}} but the unfounded subsets are {{{}}}",
                show(&s.unfounded),
                show(&want)
            ),
        )));
    }
    Ok(None)
}

/// Whether `next` is a successor of the state `s`.
pub fn check_successor(s: &State, next: &State, limits: &Limits) -> Result<Option<Violation>> {
    let added: Vec<&Arc<CRule>> = next
        .rules
        .rules()
        .iter()
        .filter(|r| !s.rules.contains(r))
        .collect();
    let grows = s.rules.rules().iter().all(|r| next.rules.contains(r));
    if added.len() != 1 || !grows {
        return Ok(Some(Violation::new(
            "one-new-rule",
            format!(
                "a successor adds exactly one rule; {} rules were added",
                added.len()
            ),
        )));
    }
    if !s.pos.is_subset(&next.pos) || !s.neg.is_subset(&next.neg) {
        return Ok(Some(Violation::new(
            "monotone-interpretation",
            "the successor must extend both I and I⁻",
        )));
    }
    let d = StepDelta {
        rule: added[0].clone(),
        delta_true: next.pos.difference(s.pos.atoms()).into_atoms(),
        delta_false: next.neg.difference(&s.neg).cloned().collect(),
    };
    if let Some(v) = validate_assignment(s, &d) {
        return Ok(Some(v));
    }
    let expected = apply_step(s, &d, limits)?;
    if expected.unfounded != next.unfounded {
        return Ok(Some(Violation::new(
            "unfounded-sets",
            "the unfounded sets are not the extensions unsupported by the new rule",
        )));
    }
    Ok(None)
}

/// Some valid assignment of the undecided atoms of `r`, if any.
pub fn find_assignment(s: &State, r: &CRule) -> Option<StepDelta> {
    if s.rules.contains(r) || !r.active(&s.pos) {
        return None;
    }
    let open: Vec<Atom> = undecided_atoms(s, r).into_iter().collect();
    let mut vals: Vec<Option<bool>> = vec![None; open.len()];
    if !assign_rec(s, r, &open, &mut vals, 0) {
        return None;
    }
    let mut d = StepDelta {
        rule: Arc::new(r.clone()),
        delta_true: AtomSet::new(),
        delta_false: AtomSet::new(),
    };
    for (a, v) in open.into_iter().zip(vals) {
        if v == Some(true) {
            d.delta_true.insert(a);
        } else {
            d.delta_false.insert(a);
        }
    }
    Some(d)
}

fn assign_rec(s: &State, r: &CRule, open: &[Atom], vals: &mut Vec<Option<bool>>, k: usize) -> bool {
    let value = |a: &Atom| -> Option<bool> {
        match open.binary_search(a) {
            Ok(i) => vals[i],
            Err(_) => Some(s.pos.contains(a)),
        }
    };
    if r.body().any(|l| l.eval3(&value) == Truth::False)
        || r.head.iter().all(|h| h.eval3(&value) == Truth::False)
    {
        return false;
    }
    if k == open.len() {
        return true;
    }
    for v in [true, false] {
        vals[k] = Some(v);
        if assign_rec(s, r, open, vals, k + 1) {
            return true;
        }
    }
    vals[k] = None;
    false
}

/// Rules of `P` outside the state that admit a valid successor, in canonical order.
pub fn candidate_rules(p: &GroundProgram, s: &State) -> Vec<Arc<CRule>> {
    p.rules()
        .iter()
        .filter(|r| find_assignment(s, r).is_some())
        .cloned()
        .collect()
}

/// Candidate rules grouped by the source statements they stem from.
pub fn active_candidates(gr: &GroundingResult, s: &State) -> BTreeMap<usize, Vec<Arc<CRule>>> {
    group_by_statement(gr, |r| find_assignment(s, r).is_some())
}

/// Rules not yet in the state whose bodies hold, whether or not a step can add
/// them; grouped by source statement. A stuck state has only unsatisfiable
/// rules here.
pub fn active_pending(gr: &GroundingResult, s: &State) -> BTreeMap<usize, Vec<Arc<CRule>>> {
    group_by_statement(gr, |r| !s.rules.contains(r) && r.active(&s.pos))
}

fn group_by_statement(
    gr: &GroundingResult,
    keep: impl Fn(&CRule) -> bool,
) -> BTreeMap<usize, Vec<Arc<CRule>>> {
    let mut out: BTreeMap<usize, Vec<Arc<CRule>>> = BTreeMap::new();
    for (idx, r) in gr.program.rules().iter().enumerate() {
        if !keep(r) {
            continue;
        }
        let sources: std::collections::BTreeSet<usize> =
            gr.provenance[idx].iter().map(|p| p.statement).collect();
        for src in sources {
            out.entry(src).or_default().push(r.clone());
        }
    }
    out
}
