use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::model::{Atom, AtomSet, CRule, GroundProgram, Interpretation, Truth};
use crate::par;

use super::{is_normal_convex, is_stable_model};

/// An answer-set search over `program` restricted by required truth values
/// and rules that must stay active.
#[derive(Clone, Debug, Default)]
pub struct ExtensionQuery {
    pub program: GroundProgram,
    pub required_true: AtomSet,
    pub required_false: AtomSet,
    /// Rules that must be active under every reported answer set.
    pub required_active: Vec<Arc<CRule>>,
    /// Atoms branched on before the rest of the domain.
    pub priority: AtomSet,
}

impl ExtensionQuery {
    pub fn new(program: GroundProgram) -> Self {
        ExtensionQuery {
            program,
            ..Default::default()
        }
    }

    /// Up to `max` answer sets satisfying the query, in the order found.
    pub fn solve(&self, max: Option<usize>, limits: &Limits) -> Result<Vec<Interpretation>> {
        let mut search = Search::new(self, limits);
        if self
            .required_true
            .iter()
            .any(|a| !search.index.contains_key(a))
        {
            // An atom outside dom(P) is never derived.
            return Ok(Vec::new());
        }
        let mut assign = vec![None; search.atoms.len()];
        for a in &self.required_true {
            assign[search.index[a]] = Some(true);
        }
        for a in &self.required_false {
            if let Some(&k) = search.index.get(a) {
                if assign[k] == Some(true) {
                    return Ok(Vec::new());
                }
                assign[k] = Some(false);
            }
        }
        search.max = max;
        search.run(assign)?;
        Ok(search.found)
    }
}

/// One answer set of `base ∪ extra` containing `required_true` and disjoint from
/// `required_false`; branches on `dom(extra)` first.
pub fn solve_extension(
    base: &GroundProgram,
    extra: &GroundProgram,
    required_true: &AtomSet,
    required_false: &AtomSet,
    limits: &Limits,
) -> Result<Option<Interpretation>> {
    let query = ExtensionQuery {
        program: base.union(extra),
        required_true: required_true.clone(),
        required_false: required_false.clone(),
        required_active: Vec::new(),
        priority: extra.universe().clone(),
    };
    Ok(query.solve(Some(1), limits)?.into_iter().next())
}

/// Answer sets of `P` by backtracking search, in canonical order.
///
/// Fails with a cap error when more than `limits.atoms` atoms remain open
/// after the initial propagation.
pub fn solve_all(
    p: &GroundProgram,
    max: Option<usize>,
    limits: &Limits,
) -> Result<Vec<Interpretation>> {
    let query = ExtensionQuery::new(p.clone());
    let mut search = Search::new(&query, limits);
    let mut assign = vec![None; search.atoms.len()];
    if search.propagate(&mut assign) {
        let open = assign.iter().filter(|v| v.is_none()).count();
        if open > limits.atoms {
            return Err(Error::CapExceeded {
                what: "open atoms in answer-set search",
                size: open,
                cap: limits.atoms,
            });
        }
    }
    search.max = max;
    search.run(vec![None; search.atoms.len()])?;
    let mut found = search.found;
    found.sort();
    Ok(found)
}

/// Brute-force answer sets over `2^dom(P)`, in canonical order.
pub fn enumerate_answer_sets(p: &GroundProgram, limits: &Limits) -> Result<Vec<Interpretation>> {
    let atoms: Vec<&Atom> = p.universe().iter().collect();
    if atoms.len() > limits.atoms.min(40) {
        return Err(Error::CapExceeded {
            what: "brute-force enumeration",
            size: atoms.len(),
            cap: limits.atoms,
        });
    }
    let normal_convex = is_normal_convex(p, limits);
    let build = |m: u64| -> Interpretation {
        atoms
            .iter()
            .enumerate()
            .filter(|(k, _)| m & (1 << k) != 0)
            .map(|(_, a)| (*a).clone())
            .collect()
    };
    let failure = std::sync::Mutex::new(None);
    let hits = par::filter(limits.execution, 0..(1u64 << atoms.len()), |m| {
        let i = build(m);
        if !p.satisfied_by(&i) {
            return false;
        }
        match is_stable_model(p, &i, normal_convex, limits) {
            Ok(stable) => stable,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                false
            }
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut out: Vec<Interpretation> = hits.into_iter().map(build).collect();
    out.sort();
    Ok(out)
}

struct Search<'q> {
    query: &'q ExtensionQuery,
    limits: &'q Limits,
    atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
    /// Rules whose head domain contains the atom.
    head_occ: Vec<Vec<usize>>,
    order: Vec<usize>,
    normal_convex: bool,
    nodes: u64,
    max: Option<usize>,
    found: Vec<Interpretation>,
}

type Assign = Vec<Option<bool>>;

enum Unit {
    Conflict,
    Set(usize, bool),
    Nothing,
}

impl<'q> Search<'q> {
    fn new(query: &'q ExtensionQuery, limits: &'q Limits) -> Self {
        let p = &query.program;
        let atoms: Vec<Atom> = p.universe().iter().cloned().collect();
        let index: HashMap<Atom, usize> =
            atoms.iter().enumerate().map(|(k, a)| (a.clone(), k)).collect();
        let mut head_occ = vec![Vec::new(); atoms.len()];
        for (ri, r) in p.rules().iter().enumerate() {
            for h in &r.head {
                for a in h.domain() {
                    let k = index[a];
                    if head_occ[k].last() != Some(&ri) {
                        head_occ[k].push(ri);
                    }
                }
            }
        }
        let rank = |a: &Atom| {
            if query.required_true.contains(a) || query.required_false.contains(a) {
                0
            } else if query.priority.contains(a) {
                1
            } else {
                2
            }
        };
        let mut order: Vec<usize> = (0..atoms.len()).collect();
        order.sort_by_key(|&k| (rank(&atoms[k]), k));
        Search {
            query,
            limits,
            atoms,
            index,
            head_occ,
            order,
            normal_convex: is_normal_convex(p, limits),
            nodes: 0,
            max: None,
            found: Vec::new(),
        }
    }

    fn value<'a>(&'a self, assign: &'a Assign) -> impl Fn(&Atom) -> Option<bool> + 'a {
        move |a| match self.index.get(a) {
            Some(&k) => assign[k],
            None => Some(false),
        }
    }

    fn body3(&self, r: &CRule, assign: &Assign) -> (Truth, Vec<(usize, bool)>) {
        let value = self.value(assign);
        let mut truth = Truth::True;
        let mut open = Vec::new();
        for (k, lit) in r.body().enumerate() {
            match lit.eval3(&value) {
                Truth::False => return (Truth::False, Vec::new()),
                Truth::Unknown => {
                    truth = Truth::Unknown;
                    open.push((k, lit.negated));
                }
                Truth::True => {}
            }
        }
        (truth, open)
    }

    fn rule_unit(&self, r: &CRule, assign: &Assign) -> Unit {
        let (body, open) = self.body3(r, assign);
        if body == Truth::False {
            return Unit::Nothing;
        }
        let value = self.value(assign);
        let heads: Vec<Truth> = r.head.iter().map(|h| h.eval3(&value)).collect();
        if heads.contains(&Truth::True) {
            return Unit::Nothing;
        }
        let unknown: Vec<usize> = (0..heads.len())
            .filter(|&k| heads[k] == Truth::Unknown)
            .collect();
        if body == Truth::True {
            return match unknown.as_slice() {
                [] => Unit::Conflict,
                [k] => match r.head[*k].as_elementary() {
                    Some(a) => Unit::Set(self.index[a], true),
                    None if !r.head[*k].satisfiable_with(&value) => Unit::Conflict,
                    None => Unit::Nothing,
                },
                _ => Unit::Nothing,
            };
        }
        if unknown.is_empty() && open.len() == 1 {
            // The rule can only be satisfied by falsifying its last open literal.
            let (k, negated) = open[0];
            let lit = if k < r.pos_body.len() {
                &r.pos_body[k]
            } else {
                &r.neg_body[k - r.pos_body.len()]
            };
            if let Some(a) = lit.as_elementary() {
                return Unit::Set(self.index[a], negated);
            }
        }
        Unit::Nothing
    }

    /// Unit propagation to a fixpoint; `false` on conflict.
    fn propagate(&self, assign: &mut Assign) -> bool {
        let rules = self.query.program.rules();
        loop {
            let mut changed = false;
            for r in rules {
                match self.rule_unit(r, assign) {
                    Unit::Conflict => return false,
                    Unit::Set(k, v) => {
                        assign[k] = Some(v);
                        changed = true;
                    }
                    Unit::Nothing => {}
                }
            }
            for r in &self.query.required_active {
                if self.body3(r, assign).0 == Truth::False {
                    return false;
                }
            }
            // An atom outside every possibly active head domain is false.
            for k in 0..self.atoms.len() {
                if assign[k] == Some(false) {
                    continue;
                }
                let supported = self.head_occ[k]
                    .iter()
                    .any(|&ri| self.body3(&rules[ri], assign).0 != Truth::False);
                if !supported {
                    if assign[k] == Some(true) {
                        return false;
                    }
                    assign[k] = Some(false);
                    changed = true;
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn done(&self) -> bool {
        self.max.is_some_and(|m| self.found.len() >= m)
    }

    fn run(&mut self, mut assign: Assign) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.limits.search_nodes {
            return Err(Error::SearchExhausted {
                nodes: self.limits.search_nodes,
            });
        }
        if !self.propagate(&mut assign) {
            return Ok(());
        }
        let next = self.order.iter().copied().find(|&k| assign[k].is_none());
        let Some(k) = next else {
            return self.leaf(&assign);
        };
        for v in [false, true] {
            let mut child = assign.clone();
            child[k] = Some(v);
            self.run(child)?;
            if self.done() {
                break;
            }
        }
        Ok(())
    }

    fn leaf(&mut self, assign: &Assign) -> Result<()> {
        let i: Interpretation = self
            .atoms
            .iter()
            .zip(assign)
            .filter(|(_, v)| **v == Some(true))
            .map(|(a, _)| a.clone())
            .collect();
        let p = &self.query.program;
        if !p.satisfied_by(&i) || !self.query.required_active.iter().all(|r| r.active(&i)) {
            return Ok(());
        }
        if is_stable_model(p, &i, self.normal_convex, self.limits)? {
            self.found.push(i);
        }
        Ok(())
    }
}
