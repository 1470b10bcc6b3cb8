//! Ground data model: atoms, interpretations, abstract-constraint atoms, rules
//! and programs, together with the satisfaction relation over them.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A ground term: an integer or a symbolic constant.
///
/// Integers order before symbols, as in gringo's term order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Int(i64),
    Sym(Arc<str>),
}

impl Term {
    pub fn sym(s: &str) -> Self {
        Term::Sym(Arc::from(s))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(i) => Some(*i),
            Term::Sym(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(i) => write!(f, "{i}"),
            Term::Sym(s) => f.write_str(s),
        }
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Term::Int(i) => s.serialize_i64(*i),
            Term::Sym(v) => s.serialize_str(v),
        }
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Term;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a constant")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> std::result::Result<Term, E> {
                Ok(Term::Int(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> std::result::Result<Term, E> {
                i64::try_from(v).map(Term::Int).map_err(E::custom)
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Term, E> {
                Ok(Term::sym(v))
            }
        }
        d.deserialize_any(V)
    }
}

/// A ground atom `p(t1,...,tn)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    predicate: Arc<str>,
    args: Arc<[Term]>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom {
            predicate: Arc::from(predicate),
            args: Arc::from(args),
        }
    }

    /// A propositional atom without arguments.
    pub fn prop(name: &str) -> Self {
        Atom::new(name, Vec::new())
    }

    pub fn predicate(&self) -> &str {
        &self.predicate
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }

    /// Parses the canonical textual form, e.g. `wall(3,3)` or `a`.
    pub fn parse(text: &str) -> Result<Atom> {
        let mut p = AtomParser {
            src: text.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        let atom = p.atom()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input after atom"));
        }
        Ok(atom)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, t) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{t}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Atom::parse(&text).map_err(serde::de::Error::custom)
    }
}

struct AtomParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> AtomParser<'a> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            line: 1,
            column: self.pos + 1,
            message: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        let start = self.pos;
        if self.pos < self.src.len() && self.src[self.pos].is_ascii_lowercase() {
            self.pos += 1;
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            std::str::from_utf8(&self.src[start..self.pos]).ok()
        } else {
            None
        }
    }

    fn term(&mut self) -> Result<Term> {
        self.skip_ws();
        let start = self.pos;
        if self.pos < self.src.len() && self.src[self.pos] == b'-' {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos > digits {
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("0");
            return text
                .parse()
                .map(Term::Int)
                .map_err(|_| self.error("integer out of range"));
        }
        self.pos = start;
        match self.ident() {
            Some(s) => Ok(Term::sym(s)),
            None => Err(self.error("expected integer or constant")),
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        let name = self
            .ident()
            .ok_or_else(|| self.error("expected predicate name"))?
            .to_string();
        let mut args = Vec::new();
        self.skip_ws();
        if self.pos < self.src.len() && self.src[self.pos] == b'(' {
            self.pos += 1;
            loop {
                args.push(self.term()?);
                self.skip_ws();
                match self.src.get(self.pos) {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error("expected ',' or ')'")),
                }
            }
        }
        Ok(Atom::new(&name, args))
    }
}

/// A finite set of atoms, used for domains, unfounded sets and deltas.
pub type AtomSet = BTreeSet<Atom>;

/// An interpretation: the set of atoms considered true.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Interpretation(AtomSet);

impl Interpretation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.0.contains(a)
    }

    pub fn insert(&mut self, a: Atom) -> bool {
        self.0.insert(a)
    }

    pub fn remove(&mut self, a: &Atom) -> bool {
        self.0.remove(a)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.0.iter()
    }

    pub fn atoms(&self) -> &AtomSet {
        &self.0
    }

    pub fn into_atoms(self) -> AtomSet {
        self.0
    }

    /// `I ∩ X`.
    pub fn project<'a>(&self, x: impl IntoIterator<Item = &'a Atom>) -> Interpretation {
        x.into_iter().filter(|a| self.contains(a)).cloned().collect()
    }

    pub fn is_subset(&self, other: &Interpretation) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &AtomSet) -> Interpretation {
        Interpretation(self.0.union(other).cloned().collect())
    }

    pub fn difference(&self, other: &AtomSet) -> Interpretation {
        Interpretation(self.0.difference(other).cloned().collect())
    }

    /// Parses a comma-separated atom list such as `a,b(1)`; braces are optional.
    pub fn parse_list(text: &str) -> Result<Interpretation> {
        let trimmed = text.trim();
        let inner = trimmed
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .unwrap_or(trimmed);
        let mut out = Interpretation::new();
        for piece in split_top_level(inner) {
            let piece = piece.trim();
            if !piece.is_empty() {
                out.insert(Atom::parse(piece)?);
            }
        }
        Ok(out)
    }
}

/// Splits on commas that are not nested inside parentheses.
fn split_top_level(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

impl FromIterator<Atom> for Interpretation {
    fn from_iter<T: IntoIterator<Item = Atom>>(iter: T) -> Self {
        Interpretation(iter.into_iter().collect())
    }
}

impl From<AtomSet> for Interpretation {
    fn from(s: AtomSet) -> Self {
        Interpretation(s)
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom_set(f, &self.0)
    }
}

impl fmt::Debug for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) fn write_atom_set<'a>(
    f: &mut fmt::Formatter<'_>,
    atoms: impl IntoIterator<Item = &'a Atom>,
) -> fmt::Result {
    f.write_str("{")?;
    for (i, a) in atoms.into_iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str("}")
}

/// Renders an atom set as `{a, b}`.
pub fn format_atom_set<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> String {
    struct Show<'b>(Vec<&'b Atom>);
    impl fmt::Display for Show<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write_atom_set(f, self.0.iter().copied())
        }
    }
    Show(atoms.into_iter().collect()).to_string()
}

/// A finite real weight with a total order.
#[derive(Clone, Copy, Debug)]
pub struct Weight(f64);

impl Weight {
    pub fn new(v: f64) -> Option<Self> {
        // -0.0 and 0.0 must compare and hash equal.
        v.is_finite().then_some(Weight(if v == 0.0 { 0.0 } else { v }))
    }

    pub fn int(v: i64) -> Self {
        Weight(v as f64)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl PartialEq for Weight {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for Weight {}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::hash::Hash for Weight {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.fract() == 0.0 && self.0.abs() < 1e15 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Weight::new(v).ok_or_else(|| serde::de::Error::custom("weight must be finite"))
    }
}

/// A bound of a weight constraint: a real number or one of the infinities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtReal {
    NegInf,
    Real(Weight),
    PosInf,
}

impl ExtReal {
    fn le_value(self, v: f64) -> bool {
        match self {
            ExtReal::NegInf => true,
            ExtReal::Real(w) => w.0 <= v,
            ExtReal::PosInf => false,
        }
    }

    fn ge_value(self, v: f64) -> bool {
        match self {
            ExtReal::NegInf => false,
            ExtReal::Real(w) => v <= w.0,
            ExtReal::PosInf => true,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Real(w) => write!(f, "{w}"),
            ExtReal::PosInf => f.write_str("inf"),
        }
    }
}

/// One entry `a=w` or `not a=w` of a weight constraint.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WeightEntry {
    pub atom: Atom,
    pub positive: bool,
    pub weight: Weight,
}

/// How the satisfiers of a c-atom are given.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CSpec {
    /// `⟨{a},{{a}}⟩`.
    Elementary,
    /// Satisfiers listed explicitly; each is sorted, the list is sorted and duplicate-free.
    Explicit(Vec<Vec<Atom>>),
    Weight {
        lower: ExtReal,
        upper: ExtReal,
        entries: Vec<WeightEntry>,
    },
    /// Cardinality bounds over the whole domain; `None` is unbounded.
    Choice {
        lower: Option<i64>,
        upper: Option<i64>,
    },
    /// `2^D \ sat(inner)`.
    Complement(Box<CSpec>),
}

/// Three-valued truth under a partial assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn negate(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }
}

/// Monotonicity class of a c-literal; the strongest applicable label is reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Monotone,
    Convex,
    Neither,
}

/// An abstract-constraint atom `⟨D, C⟩`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CAtom {
    domain: Vec<Atom>,
    spec: CSpec,
}

impl CAtom {
    /// The elementary c-atom identified with `a`.
    pub fn atom(a: Atom) -> Self {
        CAtom {
            domain: vec![a],
            spec: CSpec::Elementary,
        }
    }

    /// `⟨D, C⟩` with explicitly listed satisfiers; every satisfier must be a subset of `D`.
    pub fn explicit(
        domain: impl IntoIterator<Item = Atom>,
        satisfiers: impl IntoIterator<Item = AtomSet>,
    ) -> Result<Self> {
        let domain: AtomSet = domain.into_iter().collect();
        let mut sats: Vec<Vec<Atom>> = Vec::new();
        for s in satisfiers {
            if let Some(stray) = s.iter().find(|a| !domain.contains(a)) {
                return Err(Error::InvalidCAtom(format!(
                    "satisfier atom {stray} is not in the domain"
                )));
            }
            sats.push(s.into_iter().collect());
        }
        sats.sort();
        sats.dedup();
        Ok(CAtom {
            domain: domain.into_iter().collect(),
            spec: CSpec::Explicit(sats),
        })
    }

    /// The c-atom of the weight constraint `l [entries] u`.
    pub fn weight(lower: ExtReal, upper: ExtReal, entries: Vec<WeightEntry>) -> Self {
        let domain: AtomSet = entries.iter().map(|e| e.atom.clone()).collect();
        CAtom {
            domain: domain.into_iter().collect(),
            spec: CSpec::Weight {
                lower,
                upper,
                entries,
            },
        }
    }

    /// `l {D} u`: satisfied when the number of true atoms of `D` lies within the bounds.
    pub fn choice(
        domain: impl IntoIterator<Item = Atom>,
        lower: Option<i64>,
        upper: Option<i64>,
    ) -> Self {
        let domain: AtomSet = domain.into_iter().collect();
        CAtom {
            domain: domain.into_iter().collect(),
            spec: CSpec::Choice { lower, upper },
        }
    }

    pub fn domain(&self) -> &[Atom] {
        &self.domain
    }

    pub fn spec(&self) -> &CSpec {
        &self.spec
    }

    pub fn is_elementary(&self) -> bool {
        matches!(self.spec, CSpec::Elementary)
    }

    /// The atom of an elementary c-atom.
    pub fn as_elementary(&self) -> Option<&Atom> {
        self.is_elementary().then(|| &self.domain[0])
    }

    /// Membership of `X ∩ D` in the satisfiers, with `X` given by its indicator.
    pub fn holds_with(&self, member: &dyn Fn(&Atom) -> bool) -> bool {
        spec_holds(&self.spec, &self.domain, member)
    }

    /// `I ⊨ A`.
    pub fn eval(&self, i: &Interpretation) -> bool {
        self.holds_with(&|a| i.contains(a))
    }

    /// `X ∈ sat(A)` for `X ⊆ D` (atoms of `X` outside `D` are ignored).
    pub fn satisfied_by_set(&self, x: &AtomSet) -> bool {
        self.holds_with(&|a| x.contains(a))
    }

    /// Three-valued evaluation under a partial assignment of the domain.
    pub fn eval3(&self, value: &dyn Fn(&Atom) -> Option<bool>) -> Truth {
        spec_eval3(&self.spec, &self.domain, value)
    }

    /// Whether some completion of a partial assignment of the domain satisfies the c-atom.
    pub fn satisfiable_with(&self, value: &dyn Fn(&Atom) -> Option<bool>) -> bool {
        let open: Vec<&Atom> = self.domain.iter().filter(|a| value(a).is_none()).collect();
        let mut fixed: Vec<Option<bool>> = vec![None; open.len()];
        self.complete(value, &open, &mut fixed, 0)
    }

    fn complete(
        &self,
        value: &dyn Fn(&Atom) -> Option<bool>,
        open: &[&Atom],
        fixed: &mut Vec<Option<bool>>,
        depth: usize,
    ) -> bool {
        let lookup = |a: &Atom| match open.iter().position(|o| *o == a) {
            Some(i) => fixed[i],
            None => value(a),
        };
        match self.eval3(&lookup) {
            Truth::True => return true,
            Truth::False => return false,
            Truth::Unknown => {}
        }
        if depth == open.len() {
            return false;
        }
        for v in [true, false] {
            fixed[depth] = Some(v);
            if self.complete(value, open, fixed, depth + 1) {
                fixed[depth] = None;
                return true;
            }
        }
        fixed[depth] = None;
        false
    }

    /// `I ∩ D ⊆ S` for some satisfier `S`.
    pub fn has_satisfier_above(&self, i: &Interpretation) -> bool {
        match &self.spec {
            CSpec::Elementary => true,
            CSpec::Explicit(sats) => {
                let below: Vec<&Atom> = self.domain.iter().filter(|a| i.contains(a)).collect();
                sats.iter()
                    .any(|s| below.iter().all(|a| s.binary_search(a).is_ok()))
            }
            _ => self.satisfiable_with(&|a| if i.contains(a) { Some(true) } else { None }),
        }
    }

    /// All satisfiers, enumerated explicitly when the domain is within `cap`.
    pub fn satisfiers(&self, cap: usize) -> Result<Vec<AtomSet>> {
        if let CSpec::Explicit(sats) = &self.spec {
            return Ok(sats
                .iter()
                .map(|s| s.iter().cloned().collect())
                .collect());
        }
        if self.is_elementary() {
            return Ok(vec![self.domain.iter().cloned().collect()]);
        }
        if self.domain.len() > cap {
            return Err(Error::CapExceeded {
                what: "c-atom domain enumeration",
                size: self.domain.len(),
                cap,
            });
        }
        let n = self.domain.len();
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << n) {
            if self.holds_with(&|a| self.mask_contains(mask, a)) {
                out.push(self.mask_to_set(mask));
            }
        }
        Ok(out)
    }

    fn mask_contains(&self, mask: u64, a: &Atom) -> bool {
        match self.domain.binary_search(a) {
            Ok(idx) => mask & (1 << idx) != 0,
            Err(_) => false,
        }
    }

    fn mask_to_set(&self, mask: u64) -> AtomSet {
        self.domain
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, a)| a.clone())
            .collect()
    }

    /// The complement `⟨D, 2^D \ sat(A)⟩`.
    pub fn complement(&self) -> CAtom {
        let spec = match &self.spec {
            CSpec::Elementary => CSpec::Explicit(vec![Vec::new()]),
            CSpec::Explicit(sats) if self.domain.len() < 20 => {
                let present: BTreeSet<&Vec<Atom>> = sats.iter().collect();
                let n = self.domain.len();
                let mut out = Vec::new();
                for mask in 0u64..(1u64 << n) {
                    let set: Vec<Atom> = self.mask_to_set(mask).into_iter().collect();
                    if !present.contains(&set) {
                        out.push(set);
                    }
                }
                out.sort();
                CSpec::Explicit(out)
            }
            CSpec::Complement(inner) => (**inner).clone(),
            other => CSpec::Complement(Box::new(other.clone())),
        };
        CAtom {
            domain: self.domain.clone(),
            spec,
        }
    }

    /// Union of all satisfiers. Falls back to the whole domain when the
    /// satisfiers cannot be enumerated within `cap` and no closed form applies.
    pub fn positive_occurrences(&self, cap: usize) -> AtomSet {
        match &self.spec {
            CSpec::Elementary => self.domain.iter().cloned().collect(),
            CSpec::Explicit(sats) => sats.iter().flatten().cloned().collect(),
            CSpec::Choice { lower, upper } => {
                if choice_count_range(self.domain.len(), *lower, *upper, false)
                    .is_some_and(|(_, hi)| hi >= 1)
                {
                    self.domain.iter().cloned().collect()
                } else {
                    AtomSet::new()
                }
            }
            CSpec::Complement(inner) if matches!(**inner, CSpec::Choice { .. }) => {
                let CSpec::Choice { lower, upper } = **inner else {
                    unreachable!()
                };
                if choice_count_range(self.domain.len(), lower, upper, true)
                    .is_some_and(|(_, hi)| hi >= 1)
                {
                    self.domain.iter().cloned().collect()
                } else {
                    AtomSet::new()
                }
            }
            _ => match self.satisfiers(cap) {
                Ok(sats) => sats.into_iter().flatten().collect(),
                Err(_) => self.domain.iter().cloned().collect(),
            },
        }
    }

    /// Monotone / convex / neither, by exhaustive check over `2^D` or a closed form.
    pub fn classify(&self, cap: usize) -> Result<Monotonicity> {
        if let Some(m) = analytic_class(&self.spec) {
            return Ok(m);
        }
        if self.domain.len() > cap.min(24) {
            return Err(Error::CapExceeded {
                what: "c-atom classification",
                size: self.domain.len(),
                cap,
            });
        }
        let n = self.domain.len();
        let size = 1usize << n;
        let sat: Vec<bool> = (0..size as u64)
            .map(|m| self.holds_with(&|a| self.mask_contains(m, a)))
            .collect();
        Ok(classify_table(n, &sat))
    }
}

/// Classification of a satisfier indicator table over `2^n`.
fn classify_table(n: usize, sat: &[bool]) -> Monotonicity {
    let size = sat.len();
    let monotone = (0..size).all(|m| !sat[m] || (0..n).all(|b| sat[m | (1 << b)]));
    if monotone {
        return Monotonicity::Monotone;
    }
    // up[Y]: some satisfier below Y; down[Y]: some satisfier above Y.
    let mut up = sat.to_vec();
    let mut down = sat.to_vec();
    for b in 0..n {
        for m in 0..size {
            if m & (1 << b) != 0 {
                up[m] |= up[m ^ (1 << b)];
            } else {
                down[m] |= down[m | (1 << b)];
            }
        }
    }
    if (0..size).all(|m| !(up[m] && down[m]) || sat[m]) {
        Monotonicity::Convex
    } else {
        Monotonicity::Neither
    }
}

fn analytic_class(spec: &CSpec) -> Option<Monotonicity> {
    match spec {
        CSpec::Elementary => Some(Monotonicity::Monotone),
        CSpec::Choice { upper, .. } => Some(if upper.is_none() {
            Monotonicity::Monotone
        } else {
            Monotonicity::Convex
        }),
        CSpec::Weight { upper, entries, .. } => {
            let nonneg = entries.iter().all(|e| e.weight.0 >= 0.0);
            if nonneg && entries.iter().all(|e| e.positive) {
                Some(if *upper == ExtReal::PosInf {
                    Monotonicity::Monotone
                } else {
                    Monotonicity::Convex
                })
            } else if nonneg && entries.iter().all(|e| !e.positive) {
                Some(Monotonicity::Convex)
            } else {
                None
            }
        }
        CSpec::Complement(inner) => match analytic_class(inner) {
            // The complement of an upward-closed family is downward closed.
            Some(Monotonicity::Monotone) => Some(Monotonicity::Convex),
            _ => None,
        },
        CSpec::Explicit(_) => None,
    }
}

/// Feasible count interval of a choice over `n` atoms, or of its complement.
fn choice_count_range(
    n: usize,
    lower: Option<i64>,
    upper: Option<i64>,
    complement: bool,
) -> Option<(usize, usize)> {
    let inside = |k: usize| {
        let k = k as i64;
        lower.is_none_or(|l| l <= k) && upper.is_none_or(|u| k <= u)
    };
    let ks: Vec<usize> = (0..=n).filter(|&k| inside(k) != complement).collect();
    Some((*ks.first()?, *ks.last()?))
}

fn spec_holds(spec: &CSpec, domain: &[Atom], member: &dyn Fn(&Atom) -> bool) -> bool {
    match spec {
        CSpec::Elementary => member(&domain[0]),
        CSpec::Explicit(sats) => {
            let projected: Vec<Atom> = domain.iter().filter(|a| member(a)).cloned().collect();
            sats.binary_search(&projected).is_ok()
        }
        CSpec::Weight {
            lower,
            upper,
            entries,
        } => {
            let sum: f64 = entries
                .iter()
                .filter(|e| member(&e.atom) == e.positive)
                .map(|e| e.weight.0)
                .sum();
            lower.le_value(sum) && upper.ge_value(sum)
        }
        CSpec::Choice { lower, upper } => {
            let count = domain.iter().filter(|a| member(a)).count() as i64;
            lower.is_none_or(|l| l <= count) && upper.is_none_or(|u| count <= u)
        }
        CSpec::Complement(inner) => !spec_holds(inner, domain, member),
    }
}

fn spec_eval3(spec: &CSpec, domain: &[Atom], value: &dyn Fn(&Atom) -> Option<bool>) -> Truth {
    match spec {
        CSpec::Elementary => match value(&domain[0]) {
            Some(true) => Truth::True,
            Some(false) => Truth::False,
            None => Truth::Unknown,
        },
        CSpec::Explicit(sats) => {
            let vals: Vec<Option<bool>> = domain.iter().map(value).collect();
            let undecided = vals.iter().filter(|v| v.is_none()).count();
            let consistent = sats
                .iter()
                .filter(|s| {
                    domain.iter().zip(&vals).all(|(a, v)| match v {
                        Some(b) => s.binary_search(a).is_ok() == *b,
                        None => true,
                    })
                })
                .count();
            if consistent == 0 {
                Truth::False
            } else if undecided < 63 && consistent as u64 == 1u64 << undecided {
                Truth::True
            } else {
                Truth::Unknown
            }
        }
        CSpec::Weight {
            lower,
            upper,
            entries,
        } => {
            // Per atom: contribution when true / when false.
            let mut fixed = 0.0;
            let mut lo = 0.0;
            let mut hi = 0.0;
            let mut per_atom: std::collections::BTreeMap<&Atom, (f64, f64)> = Default::default();
            for e in entries {
                let slot = per_atom.entry(&e.atom).or_insert((0.0, 0.0));
                if e.positive {
                    slot.0 += e.weight.0;
                } else {
                    slot.1 += e.weight.0;
                }
            }
            for (a, (if_true, if_false)) in per_atom {
                match value(a) {
                    Some(true) => fixed += if_true,
                    Some(false) => fixed += if_false,
                    None => {
                        lo += if_true.min(if_false);
                        hi += if_true.max(if_false);
                    }
                }
            }
            let (min, max) = (fixed + lo, fixed + hi);
            if lower.le_value(min) && upper.ge_value(max) {
                Truth::True
            } else if !lower.le_value(max) || !upper.ge_value(min) {
                Truth::False
            } else {
                Truth::Unknown
            }
        }
        CSpec::Choice { lower, upper } => {
            let mut t = 0i64;
            let mut u = 0i64;
            for a in domain {
                match value(a) {
                    Some(true) => t += 1,
                    Some(false) => {}
                    None => u += 1,
                }
            }
            let within = |k: i64| lower.is_none_or(|l| l <= k) && upper.is_none_or(|h| k <= h);
            if within(t) && within(t + u) {
                Truth::True
            } else if (t..=t + u).any(within) {
                Truth::Unknown
            } else {
                Truth::False
            }
        }
        CSpec::Complement(inner) => spec_eval3(inner, domain, value).negate(),
    }
}

impl fmt::Display for CAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_spec(f, &self.spec, &self.domain)
    }
}

impl fmt::Debug for CAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn fmt_spec(f: &mut fmt::Formatter<'_>, spec: &CSpec, domain: &[Atom]) -> fmt::Result {
    match spec {
        CSpec::Elementary => write!(f, "{}", domain[0]),
        CSpec::Explicit(sats) => {
            f.write_str("<")?;
            write_atom_set(f, domain)?;
            f.write_str(", {")?;
            for (i, s) in sats.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_atom_set(f, s)?;
            }
            f.write_str("}>")
        }
        CSpec::Weight {
            lower,
            upper,
            entries,
        } => {
            if *lower != ExtReal::NegInf {
                write!(f, "{lower} ")?;
            }
            f.write_str("[")?;
            for (i, e) in entries.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                if !e.positive {
                    f.write_str("not ")?;
                }
                write!(f, "{}={}", e.atom, e.weight)?;
            }
            f.write_str("]")?;
            if *upper != ExtReal::PosInf {
                write!(f, " {upper}")?;
            }
            Ok(())
        }
        CSpec::Choice { lower, upper } => {
            if let Some(l) = lower {
                write!(f, "{l} ")?;
            }
            write_atom_set(f, domain)?;
            if let Some(u) = upper {
                write!(f, " {u}")?;
            }
            Ok(())
        }
        CSpec::Complement(inner) => {
            f.write_str("~(")?;
            fmt_spec(f, inner, domain)?;
            f.write_str(")")
        }
    }
}

/// A c-literal: a c-atom, possibly under default negation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CLiteral {
    pub atom: CAtom,
    pub negated: bool,
}

impl CLiteral {
    pub fn pos(atom: CAtom) -> Self {
        CLiteral {
            atom,
            negated: false,
        }
    }

    pub fn neg(atom: CAtom) -> Self {
        CLiteral {
            atom,
            negated: true,
        }
    }

    pub fn domain(&self) -> &[Atom] {
        self.atom.domain()
    }

    pub fn eval(&self, i: &Interpretation) -> bool {
        self.atom.eval(i) != self.negated
    }

    pub fn holds_with(&self, member: &dyn Fn(&Atom) -> bool) -> bool {
        self.atom.holds_with(member) != self.negated
    }

    pub fn eval3(&self, value: &dyn Fn(&Atom) -> Option<bool>) -> Truth {
        let t = self.atom.eval3(value);
        if self.negated {
            t.negate()
        } else {
            t
        }
    }

    /// The literal as a positive c-atom: itself, or the complement when negated.
    pub fn positive_form(&self) -> CAtom {
        if self.negated {
            self.atom.complement()
        } else {
            self.atom.clone()
        }
    }

    pub fn classify(&self, cap: usize) -> Result<Monotonicity> {
        self.positive_form().classify(cap)
    }
}

impl fmt::Display for CLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("not ")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// Union of the satisfiers of the positive normal form of a literal set.
pub fn pos_occurrences<'a>(lits: impl IntoIterator<Item = &'a CLiteral>, cap: usize) -> AtomSet {
    lits.into_iter()
        .flat_map(|l| l.positive_form().positive_occurrences(cap))
        .collect()
}

/// A disjunctive c-rule `A1 | ... | Ak :- B1, ..., Bm, not C1, ..., not Cn.`
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CRule {
    pub head: Vec<CAtom>,
    pub pos_body: Vec<CAtom>,
    pub neg_body: Vec<CAtom>,
}

impl CRule {
    pub fn new(head: Vec<CAtom>, pos_body: Vec<CAtom>, neg_body: Vec<CAtom>) -> Self {
        CRule {
            head,
            pos_body,
            neg_body,
        }
    }

    /// Normal elementary rule from atoms.
    pub fn normal(head: Atom, pos: Vec<Atom>, neg: Vec<Atom>) -> Self {
        CRule::new(
            vec![CAtom::atom(head)],
            pos.into_iter().map(CAtom::atom).collect(),
            neg.into_iter().map(CAtom::atom).collect(),
        )
    }

    pub fn fact(head: CAtom) -> Self {
        CRule::new(vec![head], Vec::new(), Vec::new())
    }

    /// Body literals: positive part followed by the negated part.
    pub fn body(&self) -> impl Iterator<Item = CLiteral> + '_ {
        self.pos_body
            .iter()
            .cloned()
            .map(CLiteral::pos)
            .chain(self.neg_body.iter().cloned().map(CLiteral::neg))
    }

    pub fn head_literals(&self) -> Vec<CLiteral> {
        self.head.iter().cloned().map(CLiteral::pos).collect()
    }

    pub fn body_literals(&self) -> Vec<CLiteral> {
        self.body().collect()
    }

    /// `dom(r)`.
    pub fn domain(&self) -> AtomSet {
        self.head
            .iter()
            .chain(&self.pos_body)
            .chain(&self.neg_body)
            .flat_map(|a| a.domain().iter().cloned())
            .collect()
    }

    pub fn is_normal(&self) -> bool {
        self.head.len() == 1
    }

    pub fn is_fact(&self) -> bool {
        !self.head.is_empty() && self.pos_body.is_empty() && self.neg_body.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.neg_body.is_empty()
    }

    pub fn is_constraint(&self) -> bool {
        self.head.is_empty()
    }

    pub fn is_elementary(&self) -> bool {
        self.head
            .iter()
            .chain(&self.pos_body)
            .chain(&self.neg_body)
            .all(CAtom::is_elementary)
    }

    pub fn body_holds_with(&self, member: &dyn Fn(&Atom) -> bool) -> bool {
        self.pos_body.iter().all(|a| a.holds_with(member))
            && self.neg_body.iter().all(|a| !a.holds_with(member))
    }

    /// `I ⊨ body(r)`.
    pub fn active(&self, i: &Interpretation) -> bool {
        self.body_holds_with(&|a| i.contains(a))
    }

    /// `I ⊨∨ head(r)`.
    pub fn head_satisfied(&self, i: &Interpretation) -> bool {
        self.head.iter().any(|a| a.eval(i))
    }

    /// `I ⊨ r`.
    pub fn satisfied(&self, i: &Interpretation) -> bool {
        !self.active(i) || self.head_satisfied(i)
    }
}

impl fmt::Display for CRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, h) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{h}")?;
        }
        let mut first = true;
        for b in &self.pos_body {
            f.write_str(if first { " :- " } else { ", " })?;
            first = false;
            write!(f, "{b}")?;
        }
        for b in &self.neg_body {
            f.write_str(if first { " :- " } else { ", " })?;
            first = false;
            write!(f, "not {b}")?;
        }
        if self.head.is_empty() && first {
            f.write_str(":-")?;
        }
        f.write_str(".")
    }
}

impl fmt::Debug for CRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl CRule {
    /// Canonical text; constraints start with `:-`.
    pub fn text(&self) -> String {
        let s = self.to_string();
        s.strip_prefix(' ').map(str::to_string).unwrap_or(s)
    }
}

/// Compares rule texts ignoring whitespace.
pub fn same_rule_text(a: &str, b: &str) -> bool {
    let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
    strip(a) == strip(b)
}

/// A ground c-program: a duplicate-free set of rules in canonical order.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct GroundProgram {
    rules: Vec<Arc<CRule>>,
    universe: AtomSet,
}

impl GroundProgram {
    pub fn new(rules: impl IntoIterator<Item = CRule>) -> Self {
        Self::from_shared(rules.into_iter().map(Arc::new))
    }

    pub fn from_shared(rules: impl IntoIterator<Item = Arc<CRule>>) -> Self {
        let mut rules: Vec<Arc<CRule>> = rules.into_iter().collect();
        rules.sort();
        rules.dedup();
        let universe = rules.iter().flat_map(|r| r.domain()).collect();
        GroundProgram { rules, universe }
    }

    pub fn rules(&self) -> &[Arc<CRule>] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// `dom(P)`.
    pub fn universe(&self) -> &AtomSet {
        &self.universe
    }

    /// Index of a rule in canonical order.
    pub fn index_of(&self, r: &CRule) -> Option<usize> {
        self.rules.binary_search_by(|x| x.as_ref().cmp(r)).ok()
    }

    pub fn contains(&self, r: &CRule) -> bool {
        self.index_of(r).is_some()
    }

    pub fn get(&self, idx: usize) -> Option<&Arc<CRule>> {
        self.rules.get(idx)
    }

    pub fn union(&self, other: &GroundProgram) -> GroundProgram {
        GroundProgram::from_shared(self.rules.iter().chain(other.rules.iter()).cloned())
    }

    /// `I ⊨ P`.
    pub fn satisfied_by(&self, i: &Interpretation) -> bool {
        self.rules.iter().all(|r| r.satisfied(i))
    }

    pub fn is_normal(&self) -> bool {
        self.rules.iter().all(|r| r.is_normal())
    }

    pub fn is_elementary(&self) -> bool {
        self.rules.iter().all(|r| r.is_elementary())
    }

    /// Finds a rule by canonical text, ignoring whitespace.
    pub fn find_by_text(&self, text: &str) -> Option<usize> {
        self.rules
            .iter()
            .position(|r| same_rule_text(&r.text(), text))
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{}", r.text())?;
        }
        Ok(())
    }
}

impl fmt::Debug for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rules.iter()).finish()
    }
}

impl FromIterator<CRule> for GroundProgram {
    fn from_iter<T: IntoIterator<Item = CRule>>(iter: T) -> Self {
        GroundProgram::new(iter)
    }
}
