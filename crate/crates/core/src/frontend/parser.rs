//! Recursive-descent parser for the source language and its safety check.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};

/// Parses a program; every rule must be safe.
pub fn parse(text: &str) -> Result<SourceProgram> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        src: text,
        toks: tokens,
        i: 0,
        anon: 0,
    };
    let mut prog = SourceProgram::default();
    while p.peek() != &Tok::Eof {
        if let Tok::Directive(name) = p.peek().clone() {
            p.directive(&name, &mut prog)?;
            continue;
        }
        let id = prog.statements.len();
        let stmt = p.statement(id)?;
        check_safety(&stmt)?;
        prog.statements.push(stmt);
    }
    Ok(prog)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    i: usize,
    anon: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.i + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn cur(&self) -> &Token {
        &self.toks[self.i]
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn prev_end(&self) -> Pos {
        self.toks[self.i.saturating_sub(1)].end
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        let t = self.cur();
        Err(Error::Parse {
            line: t.start.line,
            column: t.start.column,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Token> {
        if *self.peek() == tok {
            Ok(self.advance())
        } else {
            self.err(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn directive(&mut self, name: &str, prog: &mut SourceProgram) -> Result<()> {
        let start = self.cur().start;
        self.advance();
        match name {
            "const" => {
                let Tok::Ident(c) = self.peek().clone() else {
                    return self.err("expected constant name after #const");
                };
                self.advance();
                self.expect(Tok::Eq, "'='")?;
                let value = self.term()?;
                self.expect(Tok::Dot, "'.'")?;
                prog.constants.push((c, value));
            }
            "show" | "hide" => {
                while !matches!(self.peek(), Tok::Dot | Tok::Eof) {
                    self.advance();
                }
                self.expect(Tok::Dot, "'.'")?;
                prog.diagnostics.push(Diagnostic {
                    statement: None,
                    message: format!("line {}: #{name} is ignored", start.line),
                });
            }
            other => {
                self.i -= 1;
                return self.err(format!("unsupported directive #{other}"));
            }
        }
        Ok(())
    }

    fn statement(&mut self, id: usize) -> Result<Statement> {
        self.anon = 0;
        let start = self.cur().start;
        let head = if *self.peek() == Tok::If {
            Head::Disjunction(Vec::new())
        } else {
            self.head()?
        };
        let mut body = Vec::new();
        if *self.peek() == Tok::If {
            self.advance();
            if *self.peek() != Tok::Dot {
                loop {
                    body.push(self.literal()?);
                    if *self.peek() == Tok::Comma {
                        self.advance();
                    } else {
                        break;
                    }
                }
            }
        }
        self.expect(Tok::Dot, "'.' at end of rule")?;
        let end = self.prev_end();
        if let Head::Disjunction(h) = &head {
            if h.is_empty() && body.is_empty() {
                return Err(Error::Parse {
                    line: start.line,
                    column: start.column,
                    message: "empty rule".into(),
                });
            }
            if h.len() > 1 {
                let pooled = h.iter().any(|a| match a {
                    HeadAtom::Atom(a) => a.has_pool() || a.has_range(),
                    HeadAtom::Explicit(_) => false,
                });
                if pooled {
                    return Err(Error::Parse {
                        line: start.line,
                        column: start.column,
                        message: "pools and ranges are not supported in disjunctive heads".into(),
                    });
                }
            }
        }
        Ok(Statement {
            id,
            head,
            body,
            span: Span { start, end },
            text: self.src[start.offset..end.offset].to_string(),
        })
    }

    fn head(&mut self) -> Result<Head> {
        match self.peek() {
            Tok::Ident(_) | Tok::Lt => {
                let mut atoms = vec![self.head_atom()?];
                while *self.peek() == Tok::Bar {
                    self.advance();
                    atoms.push(self.head_atom()?);
                }
                Ok(Head::Disjunction(atoms))
            }
            Tok::LBrace => Ok(Head::Choice(self.aggregate(None, true)?)),
            Tok::Int(_) | Tok::Var(_) | Tok::Minus | Tok::LParen => {
                let lower = self.arith()?;
                if *self.peek() != Tok::LBrace {
                    return self.err("expected '{' after choice lower bound");
                }
                Ok(Head::Choice(self.aggregate(Some(lower), true)?))
            }
            other => self.err(format!("expected rule head, found {}", describe(other))),
        }
    }

    fn head_atom(&mut self) -> Result<HeadAtom> {
        if *self.peek() == Tok::Lt {
            Ok(HeadAtom::Explicit(self.explicit_catom()?))
        } else {
            Ok(HeadAtom::Atom(self.atom()?))
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        let mut negated = false;
        if matches!(self.peek(), Tok::Ident(s) if s == "not") {
            self.advance();
            negated = true;
        }
        match self.peek().clone() {
            Tok::Lt if *self.peek_at(1) == Tok::LBrace => Ok(Literal::Explicit {
                catom: self.explicit_catom()?,
                negated,
            }),
            Tok::LBrace | Tok::LBracket => Ok(Literal::Aggregate {
                agg: self.aggregate(None, false)?,
                negated,
            }),
            Tok::Directive(d) if d == "count" || d == "sum" => Ok(Literal::Aggregate {
                agg: self.aggregate(None, false)?,
                negated,
            }),
            Tok::Ident(_) if !is_cmp(self.peek_at(1)) && !is_arith_op(self.peek_at(1)) => {
                Ok(Literal::Atom {
                    atom: self.atom()?,
                    negated,
                })
            }
            _ => {
                let start = self.cur().start;
                let lhs = self.term()?;
                match self.peek() {
                    Tok::LBrace | Tok::LBracket => Ok(Literal::Aggregate {
                        agg: self.aggregate(Some(lhs), false)?,
                        negated,
                    }),
                    Tok::Directive(d) if d == "count" || d == "sum" => Ok(Literal::Aggregate {
                        agg: self.aggregate(Some(lhs), false)?,
                        negated,
                    }),
                    t if is_cmp(t) => {
                        if negated {
                            return self.err("negated comparisons are not supported");
                        }
                        let op = cmp_op(&self.advance().tok);
                        let rhs = self.term()?;
                        Ok(Literal::Cmp {
                            op,
                            lhs,
                            rhs,
                            span: Span {
                                start,
                                end: self.prev_end(),
                            },
                        })
                    }
                    other => self.err(format!(
                        "expected comparison or aggregate, found {}",
                        describe(other)
                    )),
                }
            }
        }
    }

    /// `[l] { elems } [u]` or `[l] [ elems ] [u]`, optionally prefixed by `#count`/`#sum`.
    fn aggregate(&mut self, lower: Option<Expr>, choice: bool) -> Result<Aggregate> {
        let start = self.cur().start;
        let mut forced = None;
        if let Tok::Directive(d) = self.peek().clone() {
            forced = Some(if d == "sum" {
                AggKind::Weight
            } else {
                AggKind::Count
            });
            self.advance();
        }
        let (kind, close) = match self.peek() {
            Tok::LBrace => (forced.unwrap_or(AggKind::Count), Tok::RBrace),
            Tok::LBracket if !choice => (AggKind::Weight, Tok::RBracket),
            other => return self.err(format!("expected '{{', found {}", describe(other))),
        };
        self.advance();
        let mut elements = Vec::new();
        if *self.peek() != close {
            loop {
                let (elem, has_cond) = self.agg_element(kind, choice)?;
                elements.push(elem);
                match self.peek() {
                    Tok::Semi => {
                        self.advance();
                    }
                    Tok::Comma if !has_cond => {
                        self.advance();
                    }
                    _ => break,
                }
            }
        }
        self.expect(close, "end of aggregate")?;
        let upper = match self.peek() {
            Tok::Int(_) | Tok::Var(_) | Tok::Minus | Tok::LParen => Some(self.arith()?),
            Tok::Ident(s) if s != "not" => Some(self.arith()?),
            _ => None,
        };
        Ok(Aggregate {
            kind,
            lower,
            upper,
            elements,
            span: Span {
                start,
                end: self.prev_end(),
            },
        })
    }

    fn agg_element(&mut self, kind: AggKind, choice: bool) -> Result<(AggElement, bool)> {
        let mut negated = false;
        if matches!(self.peek(), Tok::Ident(s) if s == "not") {
            if choice {
                return self.err("negated elements are not allowed in choice heads");
            }
            self.advance();
            negated = true;
        }
        let atom = self.atom()?;
        let mut weight = None;
        if kind == AggKind::Weight && *self.peek() == Tok::Eq {
            self.advance();
            weight = Some(self.arith()?);
        }
        let mut conditions = Vec::new();
        let has_cond = *self.peek() == Tok::Colon;
        if has_cond {
            self.advance();
            loop {
                let lit = self.literal()?;
                match &lit {
                    Literal::Atom { .. } | Literal::Cmp { .. } => conditions.push(lit),
                    _ => return self.err("conditions may only contain atoms and comparisons"),
                }
                if *self.peek() == Tok::Comma && !self.comma_ends_element(kind) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        Ok((
            AggElement {
                atom,
                negated,
                weight,
                conditions,
            },
            has_cond,
        ))
    }

    /// In weight aggregates a comma after a condition starts a new weighted element
    /// when what follows looks like `atom=w`.
    fn comma_ends_element(&self, kind: AggKind) -> bool {
        if kind != AggKind::Weight {
            return false;
        }
        let mut k = 1;
        if matches!(self.peek_at(k), Tok::Ident(s) if s == "not") {
            k += 1;
        }
        if !matches!(self.peek_at(k), Tok::Ident(_)) {
            return false;
        }
        k += 1;
        if *self.peek_at(k) == Tok::LParen {
            let mut depth = 0;
            loop {
                match self.peek_at(k) {
                    Tok::LParen => depth += 1,
                    Tok::RParen => {
                        depth -= 1;
                        if depth == 0 {
                            k += 1;
                            break;
                        }
                    }
                    Tok::Eof => return false,
                    _ => {}
                }
                k += 1;
            }
        }
        *self.peek_at(k) == Tok::Eq
    }

    fn explicit_catom(&mut self) -> Result<ExplicitCAtom> {
        let start = self.cur().start;
        self.expect(Tok::Lt, "'<'")?;
        let domain = self.atom_set()?;
        self.expect(Tok::Comma, "','")?;
        self.expect(Tok::LBrace, "'{'")?;
        let mut satisfiers = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                satisfiers.push(self.atom_set()?);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "'}'")?;
        self.expect(Tok::Gt, "'>'")?;
        Ok(ExplicitCAtom {
            domain,
            satisfiers,
            span: Span {
                start,
                end: self.prev_end(),
            },
        })
    }

    fn atom_set(&mut self) -> Result<Vec<SAtom>> {
        self.expect(Tok::LBrace, "'{'")?;
        let mut out = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                out.push(self.atom()?);
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace, "'}'")?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<SAtom> {
        let start = self.cur().start;
        let predicate = match self.peek().clone() {
            Tok::Ident(s) if s != "not" => {
                self.advance();
                s
            }
            other => return self.err(format!("expected atom, found {}", describe(&other))),
        };
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.advance();
            loop {
                args.push(self.argument()?);
                match self.peek() {
                    Tok::Comma => {
                        self.advance();
                    }
                    Tok::RParen => {
                        self.advance();
                        break;
                    }
                    other => {
                        return self.err(format!("expected ',' or ')', found {}", describe(other)))
                    }
                }
            }
        }
        Ok(SAtom {
            predicate,
            args,
            span: Span {
                start,
                end: self.prev_end(),
            },
        })
    }

    fn argument(&mut self) -> Result<Expr> {
        let first = self.term()?;
        if *self.peek() != Tok::Semi {
            return Ok(first);
        }
        let mut alts = vec![first];
        while *self.peek() == Tok::Semi {
            self.advance();
            alts.push(self.term()?);
        }
        Ok(Expr::Pool(alts))
    }

    fn term(&mut self) -> Result<Expr> {
        let lo = self.arith()?;
        if *self.peek() == Tok::DotDot {
            self.advance();
            let hi = self.arith()?;
            return Ok(Expr::Range(Box::new(lo), Box::new(hi)));
        }
        Ok(lo)
    }

    fn arith(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Backslash => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.advance();
            return Ok(match self.unary()? {
                Expr::Int(i) => Expr::Int(-i),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::Int(i))
            }
            Tok::Var(v) => {
                self.advance();
                if v == "_" {
                    self.anon += 1;
                    Ok(Expr::Var(format!("_{}", self.anon)))
                } else {
                    Ok(Expr::Var(v))
                }
            }
            Tok::Ident(s) => {
                self.advance();
                if *self.peek() == Tok::LParen {
                    return self.err("function terms are not supported");
                }
                Ok(Expr::Sym(s))
            }
            Tok::LParen => {
                self.advance();
                let e = self.term()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            other => self.err(format!("expected term, found {}", describe(&other))),
        }
    }
}

fn is_cmp(t: &Tok) -> bool {
    matches!(t, Tok::Eq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge)
}

fn is_arith_op(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash | Tok::Backslash | Tok::DotDot
    )
}

fn cmp_op(t: &Tok) -> CmpOp {
    match t {
        Tok::Eq => CmpOp::Eq,
        Tok::Ne => CmpOp::Ne,
        Tok::Lt => CmpOp::Lt,
        Tok::Le => CmpOp::Le,
        Tok::Gt => CmpOp::Gt,
        _ => CmpOp::Ge,
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Var(s) => format!("variable {s}"),
        Tok::Int(i) => format!("integer {i}"),
        Tok::Directive(d) => format!("#{d}"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

/// Variables bound by the positive atoms and equalities among `lits`, starting from `bound`.
pub(crate) fn binders(lits: &[Literal], mut bound: BTreeSet<String>) -> BTreeSet<String> {
    loop {
        let before = bound.len();
        for l in lits {
            match l {
                Literal::Atom {
                    atom,
                    negated: false,
                } => {
                    for a in atom.expand_pools() {
                        bound.extend(a.direct_vars());
                    }
                }
                Literal::Cmp {
                    op: CmpOp::Eq,
                    lhs,
                    rhs,
                    ..
                } => {
                    for (var, other) in [(lhs, rhs), (rhs, lhs)] {
                        if let Expr::Var(v) = var {
                            if other.vars().is_subset(&bound) {
                                bound.insert(v.clone());
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        if bound.len() == before {
            return bound;
        }
    }
}

/// Every variable must be bound by a positive atom or an equality, with
/// aggregate-local variables bound inside their element.
pub fn check_safety(stmt: &Statement) -> Result<()> {
    let bound = binders(&stmt.body, BTreeSet::new());
    let unsafe_var = |v: &String| Error::Unsafe {
        variable: v.clone(),
        line: stmt.span.start.line,
        column: stmt.span.start.column,
    };
    let require = |vars: BTreeSet<String>, bound: &BTreeSet<String>| -> Result<()> {
        match vars.iter().find(|v| !bound.contains(*v)) {
            Some(v) => Err(unsafe_var(v)),
            None => Ok(()),
        }
    };
    let check_agg = |agg: &Aggregate| -> Result<()> {
        for b in agg.lower.iter().chain(&agg.upper) {
            require(b.vars(), &bound)?;
        }
        for e in &agg.elements {
            let local = binders(&e.conditions, bound.clone());
            let mut vars = e.atom.vars();
            if let Some(w) = &e.weight {
                vars.extend(w.vars());
            }
            for c in &e.conditions {
                match c {
                    Literal::Atom { atom, .. } => vars.extend(atom.vars()),
                    Literal::Cmp { lhs, rhs, .. } => {
                        vars.extend(lhs.vars());
                        vars.extend(rhs.vars());
                    }
                    _ => {}
                }
            }
            require(vars, &local)?;
        }
        Ok(())
    };
    for l in &stmt.body {
        match l {
            Literal::Atom { atom, .. } => require(atom.vars(), &bound)?,
            Literal::Cmp { lhs, rhs, .. } => {
                require(lhs.vars(), &bound)?;
                require(rhs.vars(), &bound)?;
            }
            Literal::Aggregate { agg, .. } => check_agg(agg)?,
            Literal::Explicit { catom, .. } => require(catom.vars(), &bound)?,
        }
    }
    match &stmt.head {
        Head::Disjunction(hs) => {
            for h in hs {
                match h {
                    HeadAtom::Atom(a) => require(a.vars(), &bound)?,
                    HeadAtom::Explicit(c) => require(c.vars(), &bound)?,
                }
            }
        }
        Head::Choice(agg) => check_agg(agg)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maze_instance_has_two_statements_per_line() {
        let p = parse("col(1..5). row(1..5).").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.statements[0].text, "col(1..5).");
    }

    #[test]
    fn empty_source() {
        assert!(parse("").unwrap().is_empty());
        assert!(parse("  % only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn intro_program() {
        let p = parse("a :- not b.\nb :- not a.\na :- b.\n").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.statements[2].span.start.line, 3);
        assert_eq!(p.statements[1].span.end.column, 12);
    }

    #[test]
    fn choice_with_conditions() {
        let p = parse("{ wall(X,Y) : col(X), row(Y), not border(X,Y) }.").unwrap();
        let Head::Choice(agg) = &p.statements[0].head else {
            panic!("expected choice")
        };
        assert_eq!(agg.elements.len(), 1);
        assert_eq!(agg.elements[0].conditions.len(), 3);
    }

    #[test]
    fn bounded_choice_with_pool() {
        let p = parse("1{color(X,red;green;blue)}1 :- node(X).").unwrap();
        let Head::Choice(agg) = &p.statements[0].head else {
            panic!("expected choice")
        };
        assert_eq!(agg.lower, Some(Expr::Int(1)));
        assert_eq!(agg.upper, Some(Expr::Int(1)));
        assert!(agg.elements[0].atom.has_pool());
    }

    #[test]
    fn explicit_catoms() {
        let p = parse("a :- <{a,b},{{},{a,b}}>.\n<{c},{{},{c}}>.").unwrap();
        assert!(matches!(p.statements[0].body[0], Literal::Explicit { .. }));
        assert!(matches!(
            &p.statements[1].head,
            Head::Disjunction(h) if matches!(h[0], HeadAtom::Explicit(_))
        ));
    }

    #[test]
    fn weight_and_count_bodies() {
        let p = parse("p :- 1 [a=1, not b=2] 2, 1 {c, d}.").unwrap();
        let Literal::Aggregate { agg, .. } = &p.statements[0].body[0] else {
            panic!()
        };
        assert_eq!(agg.kind, AggKind::Weight);
        assert_eq!(agg.elements.len(), 2);
        assert!(agg.elements[1].negated);
        let Literal::Aggregate { agg, .. } = &p.statements[0].body[1] else {
            panic!()
        };
        assert_eq!(agg.kind, AggKind::Count);
        assert_eq!(agg.upper, None);
    }

    #[test]
    fn comparisons_and_arithmetic() {
        let p = parse("q(X+1) :- p(X), X < 3, Y = X*2, r(Y).").unwrap();
        assert_eq!(p.statements[0].body.len(), 4);
    }

    #[test]
    fn unsafe_variable_is_named() {
        match parse("p(X) :- not q(X).") {
            Err(Error::Unsafe { variable, line, .. }) => {
                assert_eq!(variable, "X");
                assert_eq!(line, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("p :- q(X+1)."),
            Err(Error::Unsafe { .. })
        ));
        assert!(matches!(
            parse("{ p(X) }."),
            Err(Error::Unsafe { .. })
        ));
    }

    #[test]
    fn syntax_error_position() {
        match parse("a :- b\nc.") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn disjunctive_pool_rejected() {
        assert!(parse("a(1;2) | b.").is_err());
        assert!(parse("a | b :- c.").is_ok());
    }
}
