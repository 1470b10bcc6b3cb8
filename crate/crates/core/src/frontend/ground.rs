//! Bottom-up grounder.
//!
//! Rules are instantiated against an over-approximation `Pos` of the derivable
//! atoms. `Pos` and an under-approximation `T` of the certainly true atoms are
//! refined by the alternating fixpoint; `T` and `Pos` decide the conditions of
//! choice and aggregate elements. Instances whose positive body atoms are not
//! in `Pos` are dropped; negative literals are always kept.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::model::{Atom, CAtom, CRule, ExtReal, GroundProgram, Term, Truth, Weight, WeightEntry};
use crate::par;

use super::ast::*;
use super::parser::binders;

pub type Subst = BTreeMap<String, Term>;

/// One source of a ground rule: the statement and the values of its global variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub statement: usize,
    pub subst: Subst,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.statement)?;
        if !self.subst.is_empty() {
            f.write_str(" {")?;
            for (i, (k, v)) in self.subst.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{k}\u{2192}{v}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct GroundingResult {
    pub program: GroundProgram,
    /// Provenance of each rule, aligned with `program.rules()`.
    pub provenance: Vec<Vec<Provenance>>,
    pub diagnostics: Vec<Diagnostic>,
    pub statement_count: usize,
}

impl GroundingResult {
    pub fn provenance_of(&self, r: &CRule) -> &[Provenance] {
        match self.program.index_of(r) {
            Some(i) => &self.provenance[i],
            None => &[],
        }
    }

    /// Source statements a ground rule stems from.
    pub fn sources_of(&self, r: &CRule) -> BTreeSet<usize> {
        self.provenance_of(r).iter().map(|p| p.statement).collect()
    }

    /// Ground instances of a statement in canonical order.
    pub fn instances_of(&self, statement: usize) -> Result<Vec<Arc<CRule>>> {
        Ok(self
            .instances_matching(statement, &Subst::new())?
            .into_iter()
            .map(|(r, _)| r)
            .collect())
    }

    /// Instances of a statement whose substitution agrees with `filter`,
    /// together with the matching substitutions.
    pub fn instances_matching(
        &self,
        statement: usize,
        filter: &Subst,
    ) -> Result<Vec<(Arc<CRule>, Vec<Subst>)>> {
        if statement >= self.statement_count {
            return Err(Error::UnknownRule(format!("r{statement}")));
        }
        let mut out = Vec::new();
        for (r, provs) in self.program.rules().iter().zip(&self.provenance) {
            let substs: Vec<Subst> = provs
                .iter()
                .filter(|p| p.statement == statement)
                .filter(|p| filter.iter().all(|(k, v)| p.subst.get(k) == Some(v)))
                .map(|p| p.subst.clone())
                .collect();
            if !substs.is_empty() {
                out.push((r.clone(), substs));
            }
        }
        Ok(out)
    }

    /// The canonical ground program with provenance comments, one rule per line.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (r, provs) in self.program.rules().iter().zip(&self.provenance) {
            out.push_str(&r.text());
            out.push_str(" % ");
            let tags: Vec<String> = provs.iter().map(ToString::to_string).collect();
            out.push_str(&tags.join("; "));
            out.push('\n');
        }
        out
    }
}

/// Parses an instance filter such as `X=1.Y=2` (dots or commas separate assignments).
pub fn parse_filter(text: &str) -> Result<Subst> {
    let mut out = Subst::new();
    for part in text.split(['.', ',']) {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let bad = || Error::Parse {
            line: 1,
            column: 1,
            message: format!("filter {part:?} is not of the form X=t"),
        };
        let (var, value) = part.split_once('=').ok_or_else(bad)?;
        let var = var.trim();
        let value = value.trim();
        if !var.starts_with(|c: char| c.is_ascii_uppercase() || c == '_') || value.is_empty() {
            return Err(bad());
        }
        let term = match value.parse::<i64>() {
            Ok(i) => Term::Int(i),
            Err(_) if value.starts_with(|c: char| c.is_ascii_lowercase()) => Term::sym(value),
            Err(_) => return Err(bad()),
        };
        out.insert(var.to_string(), term);
    }
    Ok(out)
}

/// Grounds a parsed program.
pub fn ground(sp: &SourceProgram, limits: &Limits) -> Result<GroundingResult> {
    let consts = eval_constants(sp)?;
    let prepared: Vec<Prepared> = sp.statements.iter().map(Prepared::new).collect();
    let g = Grounder {
        consts,
        prepared,
        limits,
    };

    // Over-approximation ignoring negation.
    let mut pos = Index::default();
    let skels = loop {
        let skels = g.instantiate_all(&pos)?;
        let mut next = pos.set.clone();
        for s in &skels {
            g.possible_heads(s, &HashSet::new(), &pos.set, &mut next);
        }
        if next.len() == pos.set.len() {
            break skels;
        }
        pos = Index::from_set(next);
    };

    let mut t: HashSet<Atom> = HashSet::new();
    let mut p: HashSet<Atom> = pos.set;
    loop {
        let t_next = certain_fixpoint(&skels, &p);
        let p_next = possible_fixpoint(&g, &skels, &t_next);
        if t_next == t && p_next == p {
            break;
        }
        t = t_next;
        p = p_next;
    }

    let mut diagnostics = sp.diagnostics.clone();
    let mut undetermined: BTreeSet<usize> = BTreeSet::new();
    let mut merged: BTreeMap<CRule, BTreeSet<Provenance>> = BTreeMap::new();
    for s in &skels {
        if !s.pos_atoms().all(|a| p.contains(a)) {
            continue;
        }
        let rule = s.build(&t, &p, &mut || {
            undetermined.insert(s.stmt);
        });
        merged.entry(rule).or_default().insert(Provenance {
            statement: s.stmt,
            subst: s.subst.clone(),
        });
    }
    for id in undetermined {
        diagnostics.push(Diagnostic {
            statement: Some(id),
            message: format!(
                "r{id}: some element conditions are not decided by grounding; those elements are kept"
            ),
        });
    }
    let rules: Vec<Arc<CRule>> = merged.keys().cloned().map(Arc::new).collect();
    let program = GroundProgram::from_shared(rules);
    let provenance = program
        .rules()
        .iter()
        .map(|r| merged[r.as_ref()].iter().cloned().collect())
        .collect();
    Ok(GroundingResult {
        program,
        provenance,
        diagnostics,
        statement_count: sp.statements.len(),
    })
}

fn eval_constants(sp: &SourceProgram) -> Result<HashMap<String, Term>> {
    let mut consts = HashMap::new();
    for (name, e) in &sp.constants {
        let vals = eval(e, &Subst::new(), &consts);
        match vals.as_deref() {
            Some([v]) => {
                consts.insert(name.clone(), v.clone());
            }
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    column: 1,
                    message: format!("constant {name} does not evaluate to a single term"),
                })
            }
        }
    }
    Ok(consts)
}

/// `T`: least fixpoint of the rules whose bodies are certainly true.
fn certain_fixpoint(skels: &[Skel], p: &HashSet<Atom>) -> HashSet<Atom> {
    let mut t: HashSet<Atom> = HashSet::new();
    loop {
        let before = t.len();
        for s in skels {
            let SkelHead::Disj(h) = &s.head else { continue };
            let [head] = h.as_slice() else { continue };
            let Some(head) = head.as_elementary() else {
                continue;
            };
            if t.contains(head) {
                continue;
            }
            if s.body_certain(&t, p) {
                t.insert(head.clone());
            }
        }
        if t.len() == before {
            return t;
        }
    }
}

/// `Pos`: least fixpoint of the rules whose bodies are not certainly false given `T`.
fn possible_fixpoint(g: &Grounder, skels: &[Skel], t: &HashSet<Atom>) -> HashSet<Atom> {
    let mut p: HashSet<Atom> = HashSet::new();
    loop {
        let mut next = p.clone();
        for s in skels {
            if s.pos_atoms().all(|a| p.contains(a)) && s.neg_atoms().all(|a| !t.contains(a)) {
                g.possible_heads(s, t, &p, &mut next);
            }
        }
        if next.len() == p.len() {
            return p;
        }
        p = next;
    }
}

/// A ground condition literal of an element.
#[derive(Clone, Debug)]
struct GCond {
    atom: Atom,
    negated: bool,
}

fn cond_value(c: &GCond, t: &HashSet<Atom>, p: &HashSet<Atom>) -> Truth {
    let v = if t.contains(&c.atom) {
        Truth::True
    } else if !p.contains(&c.atom) {
        Truth::False
    } else {
        Truth::Unknown
    };
    if c.negated {
        v.negate()
    } else {
        v
    }
}

fn conds_value(cs: &[GCond], t: &HashSet<Atom>, p: &HashSet<Atom>) -> Truth {
    let mut out = Truth::True;
    for c in cs {
        match cond_value(c, t, p) {
            Truth::False => return Truth::False,
            Truth::Unknown => out = Truth::Unknown,
            Truth::True => {}
        }
    }
    out
}

#[derive(Clone, Debug)]
struct AggSkel {
    kind: AggKind,
    lower: Option<i64>,
    upper: Option<i64>,
    elems: Vec<(WeightEntry, Vec<GCond>)>,
}

impl AggSkel {
    fn catom(&self, include: impl Fn(&[GCond]) -> bool) -> CAtom {
        let mut entries: Vec<WeightEntry> = self
            .elems
            .iter()
            .filter(|(_, cs)| include(cs))
            .map(|(e, _)| e.clone())
            .collect();
        entries.sort();
        if self.kind == AggKind::Count {
            entries.dedup_by(|a, b| a.atom == b.atom && a.positive == b.positive);
            if entries.iter().all(|e| e.positive) {
                return CAtom::choice(entries.into_iter().map(|e| e.atom), self.lower, self.upper);
            }
        }
        let bound = |b: Option<i64>, inf| b.map_or(inf, |v| ExtReal::Real(Weight::int(v)));
        CAtom::weight(
            bound(self.lower, ExtReal::NegInf),
            bound(self.upper, ExtReal::PosInf),
            entries,
        )
    }
}

#[derive(Clone, Debug)]
enum SkelLit {
    Atom(Atom),
    CAtom(CAtom),
    Agg(AggSkel),
}

#[derive(Clone, Debug)]
enum SkelHead {
    Disj(Vec<CAtom>),
    Choice {
        lower: Option<i64>,
        upper: Option<i64>,
        elems: Vec<(Atom, Vec<GCond>)>,
    },
}

/// A rule instance whose element conditions are not yet decided.
#[derive(Clone, Debug)]
struct Skel {
    stmt: usize,
    subst: Subst,
    head: SkelHead,
    pos: Vec<SkelLit>,
    neg: Vec<SkelLit>,
}

impl Skel {
    fn pos_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.pos.iter().filter_map(|l| match l {
            SkelLit::Atom(a) => Some(a),
            _ => None,
        })
    }

    fn neg_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.neg.iter().filter_map(|l| match l {
            SkelLit::Atom(a) => Some(a),
            _ => None,
        })
    }

    fn body_certain(&self, t: &HashSet<Atom>, p: &HashSet<Atom>) -> bool {
        let value = |a: &Atom| {
            if t.contains(a) {
                Some(true)
            } else if !p.contains(a) {
                Some(false)
            } else {
                None
            }
        };
        let lit_truth = |l: &SkelLit| match l {
            SkelLit::Atom(a) => match value(a) {
                Some(true) => Truth::True,
                Some(false) => Truth::False,
                None => Truth::Unknown,
            },
            SkelLit::CAtom(c) => c.eval3(&value),
            SkelLit::Agg(agg) => {
                if agg
                    .elems
                    .iter()
                    .any(|(_, cs)| conds_value(cs, t, p) == Truth::Unknown)
                {
                    Truth::Unknown
                } else {
                    agg.catom(|cs| conds_value(cs, t, p) == Truth::True)
                        .eval3(&value)
                }
            }
        };
        self.pos.iter().all(|l| lit_truth(l) == Truth::True)
            && self.neg.iter().all(|l| lit_truth(l) == Truth::False)
    }

    fn build(&self, t: &HashSet<Atom>, p: &HashSet<Atom>, undetermined: &mut dyn FnMut()) -> CRule {
        let mut keep = |cs: &[GCond]| match conds_value(cs, t, p) {
            Truth::True => true,
            Truth::False => false,
            Truth::Unknown => {
                undetermined();
                true
            }
        };
        let mut lit = |l: &SkelLit| match l {
            SkelLit::Atom(a) => CAtom::atom(a.clone()),
            SkelLit::CAtom(c) => c.clone(),
            SkelLit::Agg(agg) => {
                let elems = agg.elems.iter().filter(|(_, cs)| keep(cs)).cloned().collect();
                AggSkel {
                    elems,
                    ..agg.clone()
                }
                .catom(|_| true)
            }
        };
        let pos: Vec<CAtom> = self.pos.iter().map(&mut lit).collect();
        let neg: Vec<CAtom> = self.neg.iter().map(&mut lit).collect();
        let head = match &self.head {
            SkelHead::Disj(h) => h.clone(),
            SkelHead::Choice {
                lower,
                upper,
                elems,
            } => {
                let atoms: Vec<Atom> = elems
                    .iter()
                    .filter(|(_, cs)| keep(cs))
                    .map(|(a, _)| a.clone())
                    .collect();
                vec![CAtom::choice(atoms, *lower, *upper)]
            }
        };
        CRule::new(head, pos, neg)
    }
}

#[derive(Default)]
struct Index {
    set: HashSet<Atom>,
    by_pred: HashMap<String, HashMap<usize, Vec<Atom>>>,
}

impl Index {
    fn from_set(set: HashSet<Atom>) -> Self {
        let mut by_pred: HashMap<String, HashMap<usize, Vec<Atom>>> = HashMap::new();
        for a in &set {
            by_pred
                .entry(a.predicate().to_string())
                .or_default()
                .entry(a.args().len())
                .or_default()
                .push(a.clone());
        }
        for m in by_pred.values_mut() {
            for v in m.values_mut() {
                v.sort();
            }
        }
        Index { set, by_pred }
    }

    fn candidates(&self, pred: &str, arity: usize) -> &[Atom] {
        self.by_pred
            .get(pred)
            .and_then(|m| m.get(&arity))
            .map_or(&[], Vec::as_slice)
    }
}

#[derive(Clone, Debug)]
enum Step {
    Match(SAtom),
    Bind(String, Expr),
    Filter(CmpOp, Expr, Expr),
}

/// Orders positive atoms and comparisons so that each step only needs
/// variables bound by earlier steps.
fn plan(lits: &[Literal], bound0: &BTreeSet<String>) -> Vec<Step> {
    let mut bound = bound0.clone();
    let mut remaining: Vec<&Literal> = lits
        .iter()
        .filter(|l| matches!(l, Literal::Atom { negated: false, .. } | Literal::Cmp { .. }))
        .collect();
    let mut steps = Vec::new();
    while !remaining.is_empty() {
        let filter = remaining.iter().position(|l| match l {
            Literal::Cmp { lhs, rhs, .. } => {
                lhs.vars().is_subset(&bound) && rhs.vars().is_subset(&bound)
            }
            _ => false,
        });
        let bind = || {
            remaining.iter().position(|l| match l {
                Literal::Cmp {
                    op: CmpOp::Eq,
                    lhs,
                    rhs,
                    ..
                } => [(lhs, rhs), (rhs, lhs)].iter().any(|(v, e)| {
                    matches!(v, Expr::Var(x) if !bound.contains(x)) && e.vars().is_subset(&bound)
                }),
                _ => false,
            })
        };
        let matcher = || {
            remaining.iter().position(|l| match l {
                Literal::Atom { atom, .. } => atom
                    .args
                    .iter()
                    .filter(|a| !matches!(a, Expr::Var(_)))
                    .all(|a| a.vars().is_subset(&bound)),
                _ => false,
            })
        };
        let Some(i) = filter.or_else(bind).or_else(matcher) else {
            break;
        };
        match remaining.remove(i) {
            Literal::Cmp { op, lhs, rhs, .. } => {
                if lhs.vars().is_subset(&bound) && rhs.vars().is_subset(&bound) {
                    steps.push(Step::Filter(*op, lhs.clone(), rhs.clone()));
                } else {
                    let (v, e) = match lhs {
                        Expr::Var(x) if !bound.contains(x) => (x.clone(), rhs.clone()),
                        _ => match rhs {
                            Expr::Var(x) => (x.clone(), lhs.clone()),
                            _ => unreachable!(),
                        },
                    };
                    bound.insert(v.clone());
                    steps.push(Step::Bind(v, e));
                }
            }
            Literal::Atom { atom, .. } => {
                bound.extend(atom.direct_vars());
                steps.push(Step::Match(atom.clone()));
            }
            _ => unreachable!(),
        }
    }
    steps
}

/// Expands pools in atom literals into conjunctions.
fn split_pools(lits: &[Literal]) -> Vec<Literal> {
    lits.iter()
        .flat_map(|l| match l {
            Literal::Atom { atom, negated } if atom.has_pool() => atom
                .expand_pools()
                .into_iter()
                .map(|a| Literal::Atom {
                    atom: a,
                    negated: *negated,
                })
                .collect(),
            other => vec![other.clone()],
        })
        .collect()
}

struct PreparedAgg {
    /// Per element (pools expanded): the element, its conditions and a join plan.
    elems: Vec<(AggElement, Vec<Literal>, Vec<Step>)>,
}

impl PreparedAgg {
    fn new(agg: &Aggregate, global: &BTreeSet<String>) -> Self {
        let mut elems = Vec::new();
        for e in &agg.elements {
            let conds = split_pools(&e.conditions);
            let steps = plan(&conds, global);
            for atom in e.atom.expand_pools() {
                elems.push((
                    AggElement {
                        atom,
                        ..e.clone()
                    },
                    conds.clone(),
                    steps.clone(),
                ));
            }
        }
        PreparedAgg { elems }
    }
}

struct Prepared {
    id: usize,
    head: Head,
    choice: Option<PreparedAgg>,
    body: Vec<Literal>,
    body_aggs: Vec<Option<PreparedAgg>>,
    steps: Vec<Step>,
}

impl Prepared {
    fn new(stmt: &Statement) -> Self {
        let body = split_pools(&stmt.body);
        let global = binders(&body, BTreeSet::new());
        let steps = plan(&body, &BTreeSet::new());
        let choice = match &stmt.head {
            Head::Choice(agg) => Some(PreparedAgg::new(agg, &global)),
            _ => None,
        };
        let body_aggs = body
            .iter()
            .map(|l| match l {
                Literal::Aggregate { agg, .. } => Some(PreparedAgg::new(agg, &global)),
                _ => None,
            })
            .collect();
        Prepared {
            id: stmt.id,
            head: stmt.head.clone(),
            choice,
            body,
            body_aggs,
            steps,
        }
    }
}

struct Grounder<'a> {
    consts: HashMap<String, Term>,
    prepared: Vec<Prepared>,
    limits: &'a Limits,
}

impl Grounder<'_> {
    fn instantiate_all(&self, pos: &Index) -> Result<Vec<Skel>> {
        let per_rule = par::map(self.limits.execution, &self.prepared, |p| {
            self.instantiate(p, pos)
        });
        let mut out = Vec::new();
        for r in per_rule {
            out.extend(r?);
            if out.len() > self.limits.grounding {
                return Err(Error::GroundingBlowup {
                    cap: self.limits.grounding,
                });
            }
        }
        Ok(out)
    }

    fn instantiate(&self, p: &Prepared, pos: &Index) -> Result<Vec<Skel>> {
        let mut out = Vec::new();
        let mut subst = Subst::new();
        let cap = self.limits.grounding;
        let mut err = None;
        self.join(&p.steps, 0, &mut subst, pos, &mut |s| {
            if err.is_some() {
                return;
            }
            match self.skeletons(p, s, pos) {
                Ok(sk) => {
                    out.extend(sk);
                    if out.len() > cap {
                        err = Some(Error::GroundingBlowup { cap });
                    }
                }
                Err(e) => err = Some(e),
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    fn join(
        &self,
        steps: &[Step],
        k: usize,
        s: &mut Subst,
        pos: &Index,
        out: &mut dyn FnMut(&Subst),
    ) {
        let Some(step) = steps.get(k) else {
            out(s);
            return;
        };
        match step {
            Step::Filter(op, l, r) => {
                let (Some(lv), Some(rv)) = (eval(l, s, &self.consts), eval(r, s, &self.consts))
                else {
                    return;
                };
                if lv.iter().any(|a| rv.iter().any(|b| op.holds(a.cmp(b)))) {
                    self.join(steps, k + 1, s, pos, out);
                }
            }
            Step::Bind(v, e) => {
                let Some(vals) = eval(e, s, &self.consts) else {
                    return;
                };
                for val in vals {
                    s.insert(v.clone(), val);
                    self.join(steps, k + 1, s, pos, out);
                }
                s.remove(v);
            }
            Step::Match(atom) => {
                let mut free: Vec<(usize, &str)> = Vec::new();
                let mut fixed: Vec<Vec<Term>> = Vec::with_capacity(atom.args.len());
                for (i, a) in atom.args.iter().enumerate() {
                    match a {
                        Expr::Var(v) if !s.contains_key(v) => {
                            free.push((i, v));
                            fixed.push(Vec::new());
                        }
                        other => match eval(other, s, &self.consts) {
                            Some(vals) => fixed.push(vals),
                            None => return,
                        },
                    }
                }
                if free.is_empty() {
                    let all_present = product(&fixed)
                        .into_iter()
                        .all(|args| pos.set.contains(&Atom::new(&atom.predicate, args)));
                    if all_present {
                        self.join(steps, k + 1, s, pos, out);
                    }
                    return;
                }
                for cand in pos.candidates(&atom.predicate, atom.args.len()) {
                    let mut added: Vec<&str> = Vec::new();
                    let mut ok = true;
                    for (i, t) in cand.args().iter().enumerate() {
                        if let Some((_, v)) = free.iter().find(|(j, _)| *j == i) {
                            match s.get(*v) {
                                Some(existing) if existing != t => {
                                    ok = false;
                                    break;
                                }
                                Some(_) => {}
                                None => {
                                    s.insert(v.to_string(), t.clone());
                                    added.push(v);
                                }
                            }
                        } else if !fixed[i].contains(t) {
                            ok = false;
                            break;
                        }
                    }
                    // Remaining range expansions must be present as well.
                    if ok && fixed.iter().any(|f| f.len() > 1) {
                        let full: Vec<Vec<Term>> = atom
                            .args
                            .iter()
                            .zip(&fixed)
                            .map(|(a, f)| match a {
                                Expr::Var(v) if f.is_empty() => vec![s[v].clone()],
                                _ => f.clone(),
                            })
                            .collect();
                        ok = product(&full)
                            .into_iter()
                            .all(|args| pos.set.contains(&Atom::new(&atom.predicate, args)));
                    }
                    if ok {
                        self.join(steps, k + 1, s, pos, out);
                    }
                    for v in added {
                        s.remove(v);
                    }
                }
            }
        }
    }

    fn eval_atom(&self, a: &SAtom, s: &Subst) -> Option<Vec<Atom>> {
        let mut vals = Vec::with_capacity(a.args.len());
        for e in &a.args {
            vals.push(eval(e, s, &self.consts)?);
        }
        Some(
            product(&vals)
                .into_iter()
                .map(|args| Atom::new(&a.predicate, args))
                .collect(),
        )
    }

    fn eval_int(&self, e: &Option<Expr>, s: &Subst, id: usize) -> Result<Option<i64>> {
        let Some(e) = e else { return Ok(None) };
        match eval(e, s, &self.consts).as_deref() {
            Some([Term::Int(i)]) => Ok(Some(*i)),
            _ => Err(Error::NotApplicable(format!(
                "r{id}: bound {e} does not evaluate to an integer"
            ))),
        }
    }

    fn explicit(&self, c: &ExplicitCAtom, s: &Subst) -> Result<Option<CAtom>> {
        let mut domain = Vec::new();
        for a in &c.domain {
            let Some(atoms) = self.eval_atom(a, s) else {
                return Ok(None);
            };
            domain.extend(atoms);
        }
        let mut sats = Vec::new();
        for sat in &c.satisfiers {
            let mut set = BTreeSet::new();
            for a in sat {
                let Some(atoms) = self.eval_atom(a, s) else {
                    return Ok(None);
                };
                set.extend(atoms);
            }
            sats.push(set);
        }
        CAtom::explicit(domain, sats).map(Some)
    }

    /// Ground elements of an aggregate under the global substitution `s`.
    fn elements(
        &self,
        pa: &PreparedAgg,
        s: &Subst,
        pos: &Index,
    ) -> Vec<(AggElement, Atom, Option<Term>, Vec<GCond>, Subst)> {
        let mut out = Vec::new();
        for (elem, conds, steps) in &pa.elems {
            let mut local = s.clone();
            self.join(steps, 0, &mut local, pos, &mut |ls| {
                let mut gconds = Vec::new();
                for c in conds {
                    if let Literal::Atom { atom, negated } = c {
                        match self.eval_atom(atom, ls) {
                            Some(atoms) => gconds.extend(atoms.into_iter().map(|a| GCond {
                                atom: a,
                                negated: *negated,
                            })),
                            None => return,
                        }
                    }
                }
                let weight = match &elem.weight {
                    Some(w) => match eval(w, ls, &self.consts).as_deref() {
                        Some([t]) => Some(t.clone()),
                        _ => return,
                    },
                    None => None,
                };
                if let Some(atoms) = self.eval_atom(&elem.atom, ls) {
                    for a in atoms {
                        out.push((elem.clone(), a, weight.clone(), gconds.clone(), ls.clone()));
                    }
                }
            });
        }
        out
    }

    fn skeletons(&self, p: &Prepared, s: &Subst, pos: &Index) -> Result<Vec<Skel>> {
        let mut pos_lits = Vec::new();
        let mut neg_lits = Vec::new();
        for (lit, pa) in p.body.iter().zip(&p.body_aggs) {
            let (target, item): (&mut Vec<SkelLit>, Vec<SkelLit>) = match lit {
                Literal::Atom { atom, negated } => {
                    let Some(atoms) = self.eval_atom(atom, s) else {
                        return Ok(Vec::new());
                    };
                    let items = atoms.into_iter().map(SkelLit::Atom).collect();
                    (if *negated { &mut neg_lits } else { &mut pos_lits }, items)
                }
                Literal::Cmp { .. } => continue,
                Literal::Explicit { catom, negated } => {
                    let Some(c) = self.explicit(catom, s)? else {
                        return Ok(Vec::new());
                    };
                    (
                        if *negated { &mut neg_lits } else { &mut pos_lits },
                        vec![SkelLit::CAtom(c)],
                    )
                }
                Literal::Aggregate { agg, negated } => {
                    let pa = pa.as_ref().expect("prepared aggregate");
                    let mut elems = Vec::new();
                    for (e, atom, w, conds, _) in self.elements(pa, s, pos) {
                        let weight = match w {
                            None => Weight::int(1),
                            Some(Term::Int(i)) => Weight::int(i),
                            Some(t) => {
                                return Err(Error::NotApplicable(format!(
                                    "r{}: weight {t} is not an integer",
                                    p.id
                                )))
                            }
                        };
                        elems.push((
                            WeightEntry {
                                atom,
                                positive: !e.negated,
                                weight,
                            },
                            conds,
                        ));
                    }
                    let skel = AggSkel {
                        kind: agg.kind,
                        lower: self.eval_int(&agg.lower, s, p.id)?,
                        upper: self.eval_int(&agg.upper, s, p.id)?,
                        elems,
                    };
                    (
                        if *negated { &mut neg_lits } else { &mut pos_lits },
                        vec![SkelLit::Agg(skel)],
                    )
                }
            };
            target.extend(item);
        }

        let heads: Vec<SkelHead> = match &p.head {
            Head::Disjunction(hs) if hs.len() == 1 => match &hs[0] {
                HeadAtom::Atom(a) => match self.eval_atom(a, s) {
                    Some(atoms) => atoms
                        .into_iter()
                        .map(|a| SkelHead::Disj(vec![CAtom::atom(a)]))
                        .collect(),
                    None => Vec::new(),
                },
                HeadAtom::Explicit(c) => match self.explicit(c, s)? {
                    Some(c) => vec![SkelHead::Disj(vec![c])],
                    None => Vec::new(),
                },
            },
            Head::Disjunction(hs) => {
                let mut out = Vec::new();
                for h in hs {
                    match h {
                        HeadAtom::Atom(a) => match self.eval_atom(a, s).as_deref() {
                            Some([one]) => out.push(CAtom::atom(one.clone())),
                            Some(_) => {
                                return Err(Error::NotApplicable(format!(
                                    "r{}: disjunctive head atom {a} expands to several atoms",
                                    p.id
                                )))
                            }
                            None => return Ok(Vec::new()),
                        },
                        HeadAtom::Explicit(c) => match self.explicit(c, s)? {
                            Some(c) => out.push(c),
                            None => return Ok(Vec::new()),
                        },
                    }
                }
                vec![SkelHead::Disj(out)]
            }
            Head::Choice(agg) => {
                let pa = p.choice.as_ref().expect("prepared choice");
                let elems = self
                    .elements(pa, s, pos)
                    .into_iter()
                    .map(|(_, a, _, conds, _)| (a, conds))
                    .collect();
                vec![SkelHead::Choice {
                    lower: self.eval_int(&agg.lower, s, p.id)?,
                    upper: self.eval_int(&agg.upper, s, p.id)?,
                    elems,
                }]
            }
        };
        Ok(heads
            .into_iter()
            .map(|head| Skel {
                stmt: p.id,
                subst: s.clone(),
                head,
                pos: pos_lits.clone(),
                neg: neg_lits.clone(),
            })
            .collect())
    }

    /// Adds the head atoms an instance may derive once its body is possible.
    fn possible_heads(
        &self,
        s: &Skel,
        t: &HashSet<Atom>,
        p: &HashSet<Atom>,
        out: &mut HashSet<Atom>,
    ) {
        match &s.head {
            SkelHead::Disj(h) => {
                for c in h {
                    match c.as_elementary() {
                        Some(a) => {
                            out.insert(a.clone());
                        }
                        None => out.extend(c.positive_occurrences(self.limits.enumeration)),
                    }
                }
            }
            SkelHead::Choice { elems, .. } => {
                for (a, cs) in elems {
                    let possible = cs.iter().all(|c| {
                        if c.negated {
                            !t.contains(&c.atom)
                        } else {
                            p.contains(&c.atom)
                        }
                    });
                    if possible {
                        out.insert(a.clone());
                    }
                }
            }
        }
    }
}

fn product(vals: &[Vec<Term>]) -> Vec<Vec<Term>> {
    let mut out: Vec<Vec<Term>> = vec![Vec::new()];
    for vs in vals {
        let mut next = Vec::with_capacity(out.len() * vs.len());
        for prefix in &out {
            for v in vs {
                let mut row = prefix.clone();
                row.push(v.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}

/// All values of a term under a substitution; `None` when undefined.
fn eval(e: &Expr, s: &Subst, consts: &HashMap<String, Term>) -> Option<Vec<Term>> {
    match e {
        Expr::Int(i) => Some(vec![Term::Int(*i)]),
        Expr::Sym(name) => Some(vec![consts
            .get(name)
            .cloned()
            .unwrap_or_else(|| Term::sym(name))]),
        Expr::Var(v) => s.get(v).map(|t| vec![t.clone()]),
        Expr::Neg(inner) => eval(inner, s, consts)?
            .into_iter()
            .map(|t| t.as_int().and_then(i64::checked_neg).map(Term::Int))
            .collect(),
        Expr::Bin(op, a, b) => {
            let av = eval(a, s, consts)?;
            let bv = eval(b, s, consts)?;
            let mut out = Vec::new();
            for x in &av {
                for y in &bv {
                    let (x, y) = (x.as_int()?, y.as_int()?);
                    let r = match op {
                        BinOp::Add => x.checked_add(y),
                        BinOp::Sub => x.checked_sub(y),
                        BinOp::Mul => x.checked_mul(y),
                        BinOp::Div => x.checked_div(y),
                        BinOp::Mod => x.checked_rem(y),
                    }?;
                    out.push(Term::Int(r));
                }
            }
            Some(out)
        }
        Expr::Range(lo, hi) => {
            let lo = eval(lo, s, consts)?;
            let hi = eval(hi, s, consts)?;
            let (&[Term::Int(l)], &[Term::Int(h)]) = (lo.as_slice(), hi.as_slice()) else {
                return None;
            };
            Some((l..=h).map(Term::Int).collect())
        }
        Expr::Pool(alts) => {
            let mut out = Vec::new();
            for a in alts {
                out.extend(eval(a, s, consts)?);
            }
            Some(out)
        }
    }
}
