//! Freeze LTL over quasi-ordered attributes: syntax, semantics, normal forms
//! and a bounded satisfiability search.

mod eval;
mod normal;
mod parse;
mod sat;

pub use eval::{evaluate, models, EvalError, Evaluator};
pub use normal::{freeze_normal_form, is_freeze_normal};
pub use parse::{parse, ParseError};
pub use sat::{bounded_sat, brute_force_sat, SatResult, SearchLimits};

use crate::order::{Attr, QuasiOrder};
use crate::sym::Sym;
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub enum Formula {
    True,
    False,
    Letter(Sym),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    WeakNext(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Globally(Box<Formula>),
    Finally(Box<Formula>),
    Freeze(Attr, Box<Formula>),
    Check(Attr),
}

use Formula::*;

impl Formula {
    pub fn letter(name: &str) -> Formula {
        Letter(Sym::new(name))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Or(Box::new(Formula::not(a)), Box::new(b))
    }

    pub fn next(f: Formula) -> Formula {
        Next(Box::new(f))
    }

    pub fn weak_next(f: Formula) -> Formula {
        WeakNext(Box::new(f))
    }

    pub fn next_n(n: usize, f: Formula) -> Formula {
        (0..n).fold(f, |acc, _| Formula::next(acc))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Formula {
        Release(Box::new(a), Box::new(b))
    }

    pub fn globally(f: Formula) -> Formula {
        Globally(Box::new(f))
    }

    pub fn finally(f: Formula) -> Formula {
        Finally(Box::new(f))
    }

    pub fn freeze(x: Attr, f: Formula) -> Formula {
        Freeze(x, Box::new(f))
    }

    /// Conjunction dropping `true` operands; empty conjunction is `true`.
    pub fn and_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut acc: Option<Formula> = None;
        for f in items {
            match f {
                True => {}
                False => return False,
                f => {
                    acc = Some(match acc {
                        None => f,
                        Some(a) => Formula::and(a, f),
                    })
                }
            }
        }
        acc.unwrap_or(True)
    }

    /// Disjunction dropping `false` operands; empty disjunction is `false`.
    pub fn or_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut acc: Option<Formula> = None;
        for f in items {
            match f {
                False => {}
                True => return True,
                f => {
                    acc = Some(match acc {
                        None => f,
                        Some(a) => Formula::or(a, f),
                    })
                }
            }
        }
        acc.unwrap_or(False)
    }

    pub fn size(&self) -> usize {
        match self {
            True | False | Letter(_) | Check(_) => 1,
            Not(a) | Next(a) | WeakNext(a) | Globally(a) | Finally(a) | Freeze(_, a) => 1 + a.size(),
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            True | False | Letter(_) | Check(_) => vec![],
            Not(a) | Next(a) | WeakNext(a) | Globally(a) | Finally(a) | Freeze(_, a) => vec![a],
            And(a, b) | Or(a, b) | Until(a, b) | Release(a, b) => vec![a, b],
        }
    }

    /// Every ↑ lies under some ↓.
    pub fn is_closed(&self) -> bool {
        match self {
            Check(_) => false,
            Freeze(_, _) => true,
            f => f.children().into_iter().all(|c| c.is_closed()),
        }
    }

    pub fn letters(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        self.collect_letters(&mut out);
        out
    }

    fn collect_letters(&self, out: &mut BTreeSet<Sym>) {
        if let Letter(a) = self {
            out.insert(*a);
        }
        for c in self.children() {
            c.collect_letters(out);
        }
    }

    pub fn attrs(&self) -> BTreeSet<Attr> {
        let mut out = BTreeSet::new();
        self.collect_attrs(&mut out);
        out
    }

    fn collect_attrs(&self, out: &mut BTreeSet<Attr>) {
        match self {
            Check(x) => {
                out.insert(*x);
            }
            Freeze(x, _) => {
                out.insert(*x);
            }
            _ => {}
        }
        for c in self.children() {
            c.collect_attrs(out);
        }
    }

    /// Rebuild with attributes renamed by `f`.
    pub fn map_attrs(&self, f: &impl Fn(Attr) -> Attr) -> Formula {
        self.map_nodes(
            &|node| match node {
                Check(x) => Some(Check(f(*x))),
                _ => None,
            },
            f,
        )
    }

    fn map_nodes(&self, leaf: &impl Fn(&Formula) -> Option<Formula>, attr: &impl Fn(Attr) -> Attr) -> Formula {
        if let Some(g) = leaf(self) {
            return g;
        }
        let m = |a: &Formula| Box::new(a.map_nodes(leaf, attr));
        match self {
            True | False | Letter(_) | Check(_) => self.clone(),
            Not(a) => Not(m(a)),
            And(a, b) => And(m(a), m(b)),
            Or(a, b) => Or(m(a), m(b)),
            Next(a) => Next(m(a)),
            WeakNext(a) => WeakNext(m(a)),
            Until(a, b) => Until(m(a), m(b)),
            Release(a, b) => Release(m(a), m(b)),
            Globally(a) => Globally(m(a)),
            Finally(a) => Finally(m(a)),
            Freeze(x, a) => Freeze(attr(*x), m(a)),
        }
    }

    /// Rebuild with letters replaced by arbitrary formulas.
    pub fn map_letters(&self, f: &impl Fn(Sym) -> Formula) -> Formula {
        self.map_nodes(
            &|node| match node {
                Letter(a) => Some(f(*a)),
                _ => None,
            },
            &|x| x,
        )
    }

    /// Negation normal form: `¬` only in front of letters and checks.
    /// `G`/`F` are kept; `¬G` and `¬F` become `F¬` and `G¬`.
    pub fn nnf(&self) -> Formula {
        self.nnf_pol(true)
    }

    fn nnf_pol(&self, pos: bool) -> Formula {
        let b = |f: &Formula, p: bool| Box::new(f.nnf_pol(p));
        match (self, pos) {
            (True, true) | (False, false) => True,
            (True, false) | (False, true) => False,
            (Letter(_), true) | (Check(_), true) => self.clone(),
            (Letter(_), false) | (Check(_), false) => Formula::not(self.clone()),
            (Not(a), p) => a.nnf_pol(!p),
            (And(a, c), true) => And(b(a, true), b(c, true)),
            (And(a, c), false) => Or(b(a, false), b(c, false)),
            (Or(a, c), true) => Or(b(a, true), b(c, true)),
            (Or(a, c), false) => And(b(a, false), b(c, false)),
            (Next(a), true) => Next(b(a, true)),
            (Next(a), false) => WeakNext(b(a, false)),
            (WeakNext(a), true) => WeakNext(b(a, true)),
            (WeakNext(a), false) => Next(b(a, false)),
            (Until(a, c), true) => Until(b(a, true), b(c, true)),
            (Until(a, c), false) => Release(b(a, false), b(c, false)),
            (Release(a, c), true) => Release(b(a, true), b(c, true)),
            (Release(a, c), false) => Until(b(a, false), b(c, false)),
            (Globally(a), true) => Globally(b(a, true)),
            (Globally(a), false) => Finally(b(a, false)),
            (Finally(a), true) => Finally(b(a, true)),
            (Finally(a), false) => Globally(b(a, false)),
            (Freeze(x, a), p) => Freeze(*x, b(a, p)),
        }
    }

    /// Replace `G φ` by `false R φ` and `F φ` by `true U φ`.
    pub fn desugar(&self) -> Formula {
        let d = |f: &Formula| Box::new(f.desugar());
        match self {
            True | False | Letter(_) | Check(_) => self.clone(),
            Not(a) => Not(d(a)),
            And(a, b) => And(d(a), d(b)),
            Or(a, b) => Or(d(a), d(b)),
            Next(a) => Next(d(a)),
            WeakNext(a) => WeakNext(d(a)),
            Until(a, b) => Until(d(a), d(b)),
            Release(a, b) => Release(d(a), d(b)),
            Globally(a) => Release(Box::new(False), d(a)),
            Finally(a) => Until(Box::new(True), d(a)),
            Freeze(x, a) => Freeze(*x, d(a)),
        }
    }

    pub fn is_nnf(&self) -> bool {
        match self {
            Not(a) => matches!(**a, Letter(_) | Check(_)),
            f => f.children().into_iter().all(|c| c.is_nnf()),
        }
    }

    pub fn display<'a>(&'a self, q: &'a QuasiOrder) -> FormulaDisplay<'a> {
        FormulaDisplay { f: self, q }
    }

    fn prec(&self) -> u8 {
        match self {
            Or(..) => 1,
            And(..) => 2,
            Until(..) | Release(..) | Freeze(..) => 3,
            Not(_) | Next(_) | WeakNext(_) | Globally(_) | Finally(_) => 4,
            True | False | Letter(_) | Check(_) => 5,
        }
    }
}

pub struct FormulaDisplay<'a> {
    f: &'a Formula,
    q: &'a QuasiOrder,
}

impl FormulaDisplay<'_> {
    fn write(&self, f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let paren = f.prec() < min;
        if paren {
            out.write_str("(")?;
        }
        match f {
            True => out.write_str("true")?,
            False => out.write_str("false")?,
            Letter(a) => out.write_str(a.as_str())?,
            Check(x) => write!(out, "chk{{{}}}", self.q.name(*x))?,
            Not(a) => {
                out.write_str("!")?;
                self.write(a, 4, out)?;
            }
            Next(a) => {
                out.write_str("X ")?;
                self.write(a, 4, out)?;
            }
            WeakNext(a) => {
                out.write_str("WX ")?;
                self.write(a, 4, out)?;
            }
            Globally(a) => {
                out.write_str("G ")?;
                self.write(a, 4, out)?;
            }
            Finally(a) => {
                out.write_str("F ")?;
                self.write(a, 4, out)?;
            }
            Freeze(x, a) => {
                write!(out, "store{{{}}} ", self.q.name(*x))?;
                self.write(a, 3, out)?;
            }
            And(a, b) => {
                self.write(a, 2, out)?;
                out.write_str(" & ")?;
                self.write(b, 3, out)?;
            }
            Or(a, b) => {
                self.write(a, 1, out)?;
                out.write_str(" | ")?;
                self.write(b, 2, out)?;
            }
            Until(a, b) => {
                self.write(a, 4, out)?;
                out.write_str(" U ")?;
                self.write(b, 3, out)?;
            }
            Release(a, b) => {
                self.write(a, 4, out)?;
                out.write_str(" R ")?;
                self.write(b, 3, out)?;
            }
        }
        if paren {
            out.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.f, 0, out)
    }
}
