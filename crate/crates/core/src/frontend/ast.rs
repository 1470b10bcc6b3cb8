use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Sym(String),
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Range(Box<Expr>, Box<Expr>),
    /// `t1;...;tn` inside an argument position.
    Pool(Vec<Expr>),
}

impl Expr {
    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Int(_) | Expr::Sym(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) | Expr::Range(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Pool(alts) => alts.iter().for_each(|e| e.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn has_pool(&self) -> bool {
        match self {
            Expr::Pool(_) => true,
            Expr::Neg(e) => e.has_pool(),
            Expr::Bin(_, a, b) | Expr::Range(a, b) => a.has_pool() || b.has_pool(),
            _ => false,
        }
    }

    pub fn has_range(&self) -> bool {
        match self {
            Expr::Range(..) => true,
            Expr::Neg(e) => e.has_range(),
            Expr::Bin(_, a, b) => a.has_range() || b.has_range(),
            Expr::Pool(alts) => alts.iter().any(Expr::has_range),
            _ => false,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Sym(s) | Expr::Var(s) => f.write_str(s),
            Expr::Neg(e) => write!(f, "-{e}"),
            Expr::Bin(op, a, b) => {
                let op = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Mod => "\\",
                };
                write!(f, "({a}{op}{b})")
            }
            Expr::Range(a, b) => write!(f, "{a}..{b}"),
            Expr::Pool(alts) => {
                for (i, e) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{e}")?;
                }
                Ok(())
            }
        }
    }
}

/// A non-ground atom `p(t1,...,tn)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SAtom {
    pub predicate: String,
    pub args: Vec<Expr>,
    pub span: Span,
}

impl SAtom {
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.args.iter().for_each(|a| a.collect_vars(&mut out));
        out
    }

    /// Variables occurring as a whole argument; these are bound by matching.
    pub fn direct_vars(&self) -> BTreeSet<String> {
        self.args
            .iter()
            .filter_map(|a| match a {
                Expr::Var(v) => Some(v.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn has_pool(&self) -> bool {
        self.args.iter().any(Expr::has_pool)
    }

    pub fn has_range(&self) -> bool {
        self.args.iter().any(Expr::has_range)
    }

    /// Expands argument pools into the cartesian product of alternatives.
    pub fn expand_pools(&self) -> Vec<SAtom> {
        let mut out = vec![Vec::new()];
        for arg in &self.args {
            let alts: Vec<&Expr> = match arg {
                Expr::Pool(alts) => alts.iter().collect(),
                other => vec![other],
            };
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<Expr>| {
                    alts.iter().map(move |alt| {
                        let mut next = prefix.clone();
                        next.push((*alt).clone());
                        next
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|args| SAtom {
                predicate: self.predicate.clone(),
                args,
                span: self.span,
            })
            .collect()
    }
}

impl fmt::Display for SAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggKind {
    /// `l { ... } u`: every element weighs 1.
    Count,
    /// `l [ a=w, ... ] u`.
    Weight,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggElement {
    pub atom: SAtom,
    pub negated: bool,
    pub weight: Option<Expr>,
    /// Atom and comparison literals after `:`.
    pub conditions: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Aggregate {
    pub kind: AggKind,
    pub lower: Option<Expr>,
    pub upper: Option<Expr>,
    pub elements: Vec<AggElement>,
    pub span: Span,
}

/// `<{a, b}, {{}, {a, b}}>`: a c-atom with explicitly listed satisfiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitCAtom {
    pub domain: Vec<SAtom>,
    pub satisfiers: Vec<Vec<SAtom>>,
    pub span: Span,
}

impl ExplicitCAtom {
    pub fn vars(&self) -> BTreeSet<String> {
        self.domain
            .iter()
            .chain(self.satisfiers.iter().flatten())
            .flat_map(SAtom::vars)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    Atom {
        atom: SAtom,
        negated: bool,
    },
    Cmp {
        op: CmpOp,
        lhs: Expr,
        rhs: Expr,
        span: Span,
    },
    Aggregate {
        agg: Aggregate,
        negated: bool,
    },
    Explicit {
        catom: ExplicitCAtom,
        negated: bool,
    },
}

impl Literal {
    pub fn span(&self) -> Span {
        match self {
            Literal::Atom { atom, .. } => atom.span,
            Literal::Cmp { span, .. } => *span,
            Literal::Aggregate { agg, .. } => agg.span,
            Literal::Explicit { catom, .. } => catom.span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HeadAtom {
    Atom(SAtom),
    Explicit(ExplicitCAtom),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Head {
    /// `A1 | ... | Ak`; empty for constraints.
    Disjunction(Vec<HeadAtom>),
    Choice(Aggregate),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub id: usize,
    pub head: Head,
    pub body: Vec<Literal>,
    pub span: Span,
    /// Source text of the statement.
    pub text: String,
}

impl Statement {
    pub fn is_constraint(&self) -> bool {
        matches!(&self.head, Head::Disjunction(h) if h.is_empty())
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty() && !self.is_constraint()
    }

    /// Variables occurring anywhere in the statement.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let lit_vars = |l: &Literal, out: &mut BTreeSet<String>| match l {
            Literal::Atom { atom, .. } => out.extend(atom.vars()),
            Literal::Cmp { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            Literal::Aggregate { agg, .. } => out.extend(agg_vars(agg)),
            Literal::Explicit { catom, .. } => out.extend(catom.vars()),
        };
        for l in &self.body {
            lit_vars(l, &mut out);
        }
        match &self.head {
            Head::Disjunction(hs) => {
                for h in hs {
                    match h {
                        HeadAtom::Atom(a) => out.extend(a.vars()),
                        HeadAtom::Explicit(c) => out.extend(c.vars()),
                    }
                }
            }
            Head::Choice(agg) => out.extend(agg_vars(agg)),
        }
        out
    }
}

pub(crate) fn agg_vars(agg: &Aggregate) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for b in agg.lower.iter().chain(&agg.upper) {
        b.collect_vars(&mut out);
    }
    for e in &agg.elements {
        out.extend(e.atom.vars());
        if let Some(w) = &e.weight {
            w.collect_vars(&mut out);
        }
        for c in &e.conditions {
            match c {
                Literal::Atom { atom, .. } => out.extend(atom.vars()),
                Literal::Cmp { lhs, rhs, .. } => {
                    lhs.collect_vars(&mut out);
                    rhs.collect_vars(&mut out);
                }
                _ => {}
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub statement: Option<usize>,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SourceProgram {
    pub statements: Vec<Statement>,
    /// `#const name = value.` definitions in order.
    pub constants: Vec<(String, Expr)>,
    pub diagnostics: Vec<Diagnostic>,
}

impl SourceProgram {
    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn statement(&self, id: usize) -> Option<&Statement> {
        self.statements.get(id)
    }
}
