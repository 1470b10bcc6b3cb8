//! FLP-style answer-set semantics over c-programs: reduct, Condition (O),
//! external support, unfounded sets, and answer-set search.

mod search;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::model::{Atom, AtomSet, CRule, GroundProgram, Interpretation, Monotonicity};
use crate::par;

pub use search::{enumerate_answer_sets, solve_all, solve_extension, ExtensionQuery};

/// `P^I`: the rules of `P` active under `I`.
pub fn flp_reduct(p: &GroundProgram, i: &Interpretation) -> GroundProgram {
    GroundProgram::from_shared(p.rules().iter().filter(|r| r.active(i)).cloned())
}

/// Condition (O) for `I' ⊆ I`.
pub fn condition_o(p: &GroundProgram, i: &Interpretation, i_prime: &Interpretation) -> bool {
    let reduct: Vec<&Arc<CRule>> = p.rules().iter().filter(|r| r.active(i)).collect();
    condition_o_with(&reduct, i, &|a| i_prime.contains(a))
}

fn condition_o_with(
    reduct: &[&Arc<CRule>],
    i: &Interpretation,
    member: &dyn Fn(&Atom) -> bool,
) -> bool {
    reduct.iter().all(|r| {
        !r.body_holds_with(member)
            || r.head.iter().any(|a| {
                a.holds_with(member) && a.domain().iter().all(|d| member(d) == i.contains(d))
            })
    })
}

/// Whether `r` is an external support for `x` with respect to `i`.
pub fn external_support(r: &CRule, x: &AtomSet, i: &Interpretation) -> bool {
    if !r.active(i) {
        return false;
    }
    if !r.body_holds_with(&|a| i.contains(a) && !x.contains(a)) {
        return false;
    }
    let meets = |dom: &[Atom], inside: &dyn Fn(&Atom) -> bool| dom.iter().any(inside);
    let iii = r
        .head
        .iter()
        .any(|h| meets(h.domain(), &|a| x.contains(a)) && h.has_satisfier_above(i));
    iii && r
        .head
        .iter()
        .filter(|h| h.eval(i))
        .all(|h| meets(h.domain(), &|a| x.contains(a) && i.contains(a)))
}

/// `X` is unfounded in `rules` with respect to `i`.
pub fn is_unfounded<'a>(
    rules: impl IntoIterator<Item = &'a Arc<CRule>>,
    x: &AtomSet,
    i: &Interpretation,
) -> bool {
    !rules.into_iter().any(|r| external_support(r, x, i))
}

/// Support data of the rules active under `I`, with `I` indexed as bits.
struct SupportIndex<'a> {
    atoms: Vec<&'a Atom>,
    index: HashMap<&'a Atom, usize>,
    rules: Vec<PreparedRule<'a>>,
}

struct PreparedRule<'a> {
    rule: &'a CRule,
    /// `dom(A) ∩ I` per head c-atom, as a bit mask.
    head_masks: Vec<u64>,
    /// Condition (iii) apart from `X`: `I ∩ dom(A) ⊆ S` for some satisfier.
    above: Vec<bool>,
    /// `I ⊨ A`.
    sat: Vec<bool>,
}

impl<'a> SupportIndex<'a> {
    fn new(rules: &'a [Arc<CRule>], i: &'a Interpretation) -> Self {
        let atoms: Vec<&Atom> = i.iter().collect();
        let index: HashMap<&Atom, usize> = atoms.iter().enumerate().map(|(k, a)| (*a, k)).collect();
        let rules = rules
            .iter()
            .filter(|r| !r.is_constraint() && r.active(i))
            .map(|r| PreparedRule {
                rule: r,
                head_masks: r
                    .head
                    .iter()
                    .map(|h| {
                        h.domain()
                            .iter()
                            .filter_map(|a| index.get(a))
                            .fold(0u64, |m, k| m | (1 << k))
                    })
                    .collect(),
                above: r.head.iter().map(|h| h.has_satisfier_above(i)).collect(),
                sat: r.head.iter().map(|h| h.eval(i)).collect(),
            })
            .collect();
        SupportIndex {
            atoms,
            index,
            rules,
        }
    }

    fn supports(&self, r: &PreparedRule<'_>, x: u64) -> bool {
        let iii = r
            .head_masks
            .iter()
            .zip(&r.above)
            .any(|(m, above)| m & x != 0 && *above);
        iii && r
            .head_masks
            .iter()
            .zip(&r.sat)
            .all(|(m, sat)| !sat || m & x != 0)
            && r.rule.body_holds_with(&|a| {
                self.index
                    .get(a)
                    .is_some_and(|k| x & (1 << k) == 0)
            })
    }

    fn unfounded(&self, x: u64) -> bool {
        !self.rules.iter().any(|r| self.supports(r, x))
    }

    fn to_set(&self, x: u64) -> AtomSet {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(k, _)| x & (1 << k) != 0)
            .map(|(_, a)| (*a).clone())
            .collect()
    }
}

fn subset_cap(i: &Interpretation, limits: &Limits) -> Result<()> {
    let cap = limits.subsets.min(63);
    if i.len() > cap {
        return Err(Error::CapExceeded {
            what: "subset search",
            size: i.len(),
            cap,
        });
    }
    Ok(())
}

/// Sorts a family of atom sets by size, then lexicographically.
pub fn canonical_family(mut sets: Vec<AtomSet>) -> Vec<AtomSet> {
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    sets
}

/// All `X ⊆ I` unfounded in `P` with respect to `I`, including `∅`, in canonical order.
pub fn unfounded_sets(
    p: &GroundProgram,
    i: &Interpretation,
    limits: &Limits,
) -> Result<Vec<AtomSet>> {
    subset_cap(i, limits)?;
    let idx = SupportIndex::new(p.rules(), i);
    let masks = par::filter(limits.execution, 0..(1u64 << i.len()), |m| idx.unfounded(m));
    if masks.len() > limits.unfounded {
        return Err(Error::UnfoundedOverflow {
            cap: limits.unfounded,
        });
    }
    Ok(canonical_family(
        masks.into_iter().map(|m| idx.to_set(m)).collect(),
    ))
}

/// Some nonempty unfounded subset of `I`, by exhaustive search.
pub fn find_unfounded_subset(
    p: &GroundProgram,
    i: &Interpretation,
    limits: &Limits,
) -> Result<Option<AtomSet>> {
    // Atoms no active rule can derive are unfounded on their own.
    for a in i.iter() {
        let x: AtomSet = [a.clone()].into();
        if is_unfounded(p.rules(), &x, i) {
            return Ok(Some(x));
        }
    }
    subset_cap(i, limits)?;
    let idx = SupportIndex::new(p.rules(), i);
    // First hit in ascending mask order.
    let hit = par::find_first(limits.execution, 1..(1u64 << i.len()), |m| idx.unfounded(m));
    Ok(hit.map(|m| idx.to_set(m)))
}

/// Whether every rule has at most one head c-atom and every literal is convex.
pub fn is_normal_convex(p: &GroundProgram, limits: &Limits) -> bool {
    p.rules().iter().all(|r| rule_normal_convex(r, limits))
}

fn rule_normal_convex(r: &CRule, limits: &Limits) -> bool {
    r.head.len() <= 1
        && r.head_literals()
            .iter()
            .chain(&r.body_literals())
            .all(|l| matches!(l.classify(limits.enumeration), Ok(Monotonicity::Monotone | Monotonicity::Convex)))
}

/// The greatest unfounded subset of `I ∩ scope` for normal programs with
/// convex literals, or `None` when it is empty.
pub fn greatest_unfounded_check(
    p: &GroundProgram,
    i: &Interpretation,
    scope: &AtomSet,
    limits: &Limits,
) -> Result<Option<AtomSet>> {
    if let Some(r) = p.rules().iter().find(|r| !rule_normal_convex(r, limits)) {
        return Err(Error::NotApplicable(format!(
            "rule {} is not normal with convex literals",
            r.text()
        )));
    }
    Ok(greatest_unfounded(p, i, scope))
}

fn greatest_unfounded(p: &GroundProgram, i: &Interpretation, scope: &AtomSet) -> Option<AtomSet> {
    let active: Vec<&Arc<CRule>> = p
        .rules()
        .iter()
        .filter(|r| !r.is_constraint() && r.active(i))
        .filter(|r| r.head[0].has_satisfier_above(i))
        .collect();
    let mut u: AtomSet = scope.iter().filter(|a| i.contains(a)).cloned().collect();
    let mut changed = true;
    while changed && !u.is_empty() {
        changed = false;
        for r in &active {
            let head = &r.head[0];
            if !head.domain().iter().any(|a| u.contains(a)) {
                continue;
            }
            if r.body_holds_with(&|a| i.contains(a) && !u.contains(a)) {
                for a in head.domain() {
                    changed |= u.remove(a);
                }
            }
        }
    }
    (!u.is_empty()).then_some(u)
}

/// How stability is decided by [`is_answer_set`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Search `I' ⊂ I` satisfying Condition (O).
    ConditionO,
    /// Search nonempty unfounded subsets of `I`.
    Unfounded,
    /// Run both searches and require agreement.
    Both,
    /// Greatest-unfounded fixpoint when applicable, else unfounded search.
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    None,
    ViolatedRule(CRule),
    SmallerModel(Interpretation),
    UnfoundedSet(AtomSet),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerSetReport {
    pub is_answer_set: bool,
    pub witness: Witness,
}

impl AnswerSetReport {
    fn yes() -> Self {
        AnswerSetReport {
            is_answer_set: true,
            witness: Witness::None,
        }
    }

    fn no(witness: Witness) -> Self {
        AnswerSetReport {
            is_answer_set: false,
            witness,
        }
    }
}

impl fmt::Display for AnswerSetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.witness {
            Witness::None if self.is_answer_set => f.write_str("true"),
            Witness::None => f.write_str("false"),
            Witness::ViolatedRule(r) => write!(f, "false\nviolated rule: {}", r.text()),
            Witness::SmallerModel(i) => write!(f, "false\nsmaller interpretation satisfying (O): {i}"),
            Witness::UnfoundedSet(x) => {
                write!(f, "false\nunfounded set: {}", crate::model::format_atom_set(x))
            }
        }
    }
}

/// Decides whether `I` is an answer set of `P`.
pub fn is_answer_set(
    p: &GroundProgram,
    i: &Interpretation,
    strategy: Strategy,
    limits: &Limits,
) -> Result<AnswerSetReport> {
    if let Some(r) = p.rules().iter().find(|r| !r.satisfied(i)) {
        return Ok(AnswerSetReport::no(Witness::ViolatedRule((**r).clone())));
    }
    match strategy {
        Strategy::ConditionO => smaller_model(p, i, limits),
        Strategy::Unfounded => Ok(match find_unfounded_subset(p, i, limits)? {
            Some(x) => AnswerSetReport::no(Witness::UnfoundedSet(x)),
            None => AnswerSetReport::yes(),
        }),
        Strategy::Both => {
            let o = smaller_model(p, i, limits)?;
            let u = is_answer_set(p, i, Strategy::Unfounded, limits)?;
            if o.is_answer_set != u.is_answer_set {
                return Err(Error::InvalidState(format!(
                    "stability checks disagree on {i}"
                )));
            }
            Ok(u)
        }
        Strategy::Auto => {
            if is_normal_convex(p, limits) {
                Ok(match greatest_unfounded(p, i, i.atoms()) {
                    Some(x) => AnswerSetReport::no(Witness::UnfoundedSet(x)),
                    None => AnswerSetReport::yes(),
                })
            } else {
                is_answer_set(p, i, Strategy::Unfounded, limits)
            }
        }
    }
}

fn smaller_model(p: &GroundProgram, i: &Interpretation, limits: &Limits) -> Result<AnswerSetReport> {
    subset_cap(i, limits)?;
    let atoms: Vec<&Atom> = i.iter().collect();
    let index: HashMap<&Atom, usize> = atoms.iter().enumerate().map(|(k, a)| (*a, k)).collect();
    let reduct: Vec<&Arc<CRule>> = p.rules().iter().filter(|r| r.active(i)).collect();
    let full = (1u64 << atoms.len()) - 1;
    let hit = par::find_first(limits.execution, 0..full, |m| {
        condition_o_with(&reduct, i, &|a| index.get(a).is_some_and(|k| m & (1 << k) != 0))
    });
    Ok(match hit {
        Some(m) => AnswerSetReport::no(Witness::SmallerModel(
            atoms
                .iter()
                .enumerate()
                .filter(|(k, _)| m & (1 << k) != 0)
                .map(|(_, a)| (*a).clone())
                .collect(),
        )),
        None => AnswerSetReport::yes(),
    })
}

/// Stability of a model of `P`, decided the cheapest applicable way.
pub(crate) fn is_stable_model(
    p: &GroundProgram,
    i: &Interpretation,
    normal_convex: bool,
    limits: &Limits,
) -> Result<bool> {
    if normal_convex {
        Ok(greatest_unfounded(p, i, i.atoms()).is_none())
    } else {
        Ok(find_unfounded_subset(p, i, limits)?.is_none())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CAtom;

    fn a(s: &str) -> Atom {
        Atom::prop(s)
    }

    fn set(xs: &[&str]) -> AtomSet {
        xs.iter().map(|s| a(s)).collect()
    }

    fn interp(xs: &[&str]) -> Interpretation {
        set(xs).into()
    }

    fn ex31() -> GroundProgram {
        let ab = CAtom::explicit(set(&["a", "b"]), [set(&[]), set(&["a", "b"])]).unwrap();
        let c = CAtom::explicit(set(&["c"]), [set(&[]), set(&["c"])]).unwrap();
        GroundProgram::new([
            CRule::new(vec![CAtom::atom(a("a"))], vec![ab], vec![]),
            CRule::normal(a("b"), vec![a("a")], vec![]),
            CRule::normal(a("a"), vec![a("b")], vec![]),
            CRule::fact(c),
            CRule::new(vec![], vec![CAtom::atom(a("c"))], vec![]),
        ])
    }

    fn intro() -> GroundProgram {
        GroundProgram::new([
            CRule::normal(a("a"), vec![], vec![a("b")]),
            CRule::normal(a("b"), vec![], vec![a("a")]),
            CRule::normal(a("a"), vec![a("b")], vec![]),
        ])
    }

    #[test]
    fn reduct_of_intro_program() {
        let r = flp_reduct(&intro(), &interp(&["a"]));
        assert_eq!(r.len(), 1);
        assert_eq!(r.rules()[0].text(), "a :- not b.");
    }

    #[test]
    fn condition_o_examples() {
        let loop1 = GroundProgram::new([CRule::normal(a("a"), vec![a("a")], vec![])]);
        assert!(condition_o(&loop1, &interp(&["a"]), &interp(&[])));
        let fact = GroundProgram::new([CRule::normal(a("a"), vec![], vec![])]);
        assert!(!condition_o(&fact, &interp(&["a"]), &interp(&[])));
        assert!(!condition_o(&ex31(), &interp(&["a", "b"]), &interp(&["a"])));
    }

    #[test]
    fn answer_set_verdicts_agree_across_strategies() {
        let limits = Limits::default();
        for s in [Strategy::ConditionO, Strategy::Unfounded, Strategy::Both, Strategy::Auto] {
            assert!(is_answer_set(&ex31(), &interp(&["a", "b"]), s, &limits).unwrap().is_answer_set);
            assert!(is_answer_set(&intro(), &interp(&["a"]), s, &limits).unwrap().is_answer_set);
            let rep = is_answer_set(&intro(), &interp(&["b"]), s, &limits).unwrap();
            assert!(matches!(rep.witness, Witness::ViolatedRule(_)));
        }
    }

    #[test]
    fn external_support_example_3_2() {
        let r1 = CRule::normal(a("a"), vec![a("b")], vec![]);
        let r2 = CRule::new(
            vec![CAtom::atom(a("b"))],
            vec![CAtom::explicit(set(&["a"]), [set(&[]), set(&["a"])]).unwrap()],
            vec![],
        );
        let i = interp(&["a", "b"]);
        assert!(external_support(&r1, &set(&["a"]), &i));
        assert!(!external_support(&r2, &set(&["a"]), &i));
        assert!(!external_support(&r1, &AtomSet::new(), &i));
    }

    #[test]
    fn unfounded_sets_small_cases() {
        let limits = Limits::default();
        let p = GroundProgram::new([CRule::normal(a("b"), vec![a("a")], vec![])]);
        let u = unfounded_sets(&p, &interp(&["a", "b"]), &limits).unwrap();
        // {b} is supported by b :- a since {a} still satisfies the body.
        assert_eq!(u, vec![set(&[]), set(&["a"]), set(&["a", "b"])]);
        let empty = unfounded_sets(&GroundProgram::default(), &interp(&[]), &limits).unwrap();
        assert_eq!(empty, vec![AtomSet::new()]);
    }

    #[test]
    fn greatest_unfounded_examples() {
        let limits = Limits::default();
        let fact = GroundProgram::new([CRule::normal(a("a"), vec![], vec![])]);
        assert_eq!(
            greatest_unfounded_check(&fact, &interp(&["a"]), &set(&["a"]), &limits).unwrap(),
            None
        );
        let cyc = GroundProgram::new([
            CRule::normal(a("a"), vec![a("b")], vec![]),
            CRule::normal(a("b"), vec![a("a")], vec![]),
        ]);
        assert_eq!(
            greatest_unfounded_check(&cyc, &interp(&["a", "b"]), &set(&["a", "b"]), &limits).unwrap(),
            Some(set(&["a", "b"]))
        );
        let disj = GroundProgram::new([CRule::new(
            vec![CAtom::atom(a("a")), CAtom::atom(a("b"))],
            vec![],
            vec![],
        )]);
        assert!(matches!(
            greatest_unfounded_check(&disj, &interp(&["a"]), &set(&["a"]), &limits),
            Err(Error::NotApplicable(_))
        ));
    }
}
