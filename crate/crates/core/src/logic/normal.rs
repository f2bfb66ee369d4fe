//! Freeze normal form: every ↓^x is directly followed by X, X̄ or ↑^y, and
//! every surviving ↓^x↑^y has sb(x) ≤ sb(y).

use super::Formula;
use crate::linearize::Branches;
use crate::order::{Attr, QuasiOrder};

/// Rewrite φ into freeze normal form over a tree partial order whose
/// maximal chains all have the same length.
pub fn freeze_normal_form(f: &Formula, q: &QuasiOrder) -> Formula {
    let br = Branches::of(q);
    Normalizer { q, br: &br }.norm(f)
}

/// Check the shape produced by [`freeze_normal_form`].
pub fn is_freeze_normal(f: &Formula, q: &QuasiOrder) -> bool {
    let br = Branches::of(q);
    fn go(f: &Formula, br: &Branches) -> bool {
        match f {
            Formula::Freeze(x, g) => match &**g {
                Formula::Next(h) | Formula::WeakNext(h) => go(h, br),
                Formula::Check(y) => br.sb[*x] <= br.sb[*y],
                _ => false,
            },
            f => f.children().into_iter().all(|c| go(c, br)),
        }
    }
    go(f, &br)
}

struct Normalizer<'a> {
    q: &'a QuasiOrder,
    br: &'a Branches,
}

impl Normalizer<'_> {
    fn norm(&self, f: &Formula) -> Formula {
        use Formula::*;
        let n = |g: &Formula| Box::new(self.norm(g));
        match f {
            True | False | Letter(_) | Check(_) => f.clone(),
            Not(a) => Not(n(a)),
            And(a, b) => And(n(a), n(b)),
            Or(a, b) => Or(n(a), n(b)),
            Next(a) => Next(n(a)),
            WeakNext(a) => WeakNext(n(a)),
            Until(a, b) => Until(n(a), n(b)),
            Release(a, b) => Release(n(a), n(b)),
            Globally(a) => Globally(n(a)),
            Finally(a) => Finally(n(a)),
            Freeze(x, a) => self.push(*x, a),
        }
    }

    /// Normal form of ↓^x ψ.
    fn push(&self, x: Attr, f: &Formula) -> Formula {
        use Formula::*;
        match f {
            True | False | Letter(_) => f.clone(),
            Freeze(..) => self.norm(f),
            Not(a) => Formula::not(self.push(x, a)),
            And(a, b) => Formula::and(self.push(x, a), self.push(x, b)),
            Or(a, b) => Formula::or(self.push(x, a), self.push(x, b)),
            Next(a) => Formula::freeze(x, Formula::next(self.norm(a))),
            WeakNext(a) => Formula::freeze(x, Formula::weak_next(self.norm(a))),
            Finally(a) => Formula::or(self.push(x, a), Formula::freeze(x, Formula::next(self.norm(f)))),
            Globally(a) => Formula::and(self.push(x, a), Formula::freeze(x, Formula::weak_next(self.norm(f)))),
            Until(a, b) => Formula::or(
                self.push(x, b),
                Formula::and(self.push(x, a), Formula::freeze(x, Formula::next(self.norm(f)))),
            ),
            Release(a, b) => Formula::and(
                self.push(x, b),
                Formula::or(self.push(x, a), Formula::freeze(x, Formula::weak_next(self.norm(f)))),
            ),
            Check(y) => self.freeze_check(x, *y),
        }
    }

    /// ↓^x ↑^y.
    fn freeze_check(&self, x: Attr, y: Attr) -> Formula {
        let q = self.q;
        if q.leq(y, x) {
            return Formula::True;
        }
        if q.leq(x, y) {
            return Formula::False;
        }
        let (lx, ly) = (q.level(x), q.level(y));
        if lx < ly {
            return Formula::False;
        }
        let mut p = x;
        while q.level(p) > ly {
            p = q.parent(p).expect("levels above one have a parent");
        }
        let (a, b) = if self.br.sb[p] <= self.br.sb[y] { (p, y) } else { (y, p) };
        Formula::freeze(a, Formula::Check(b))
    }
}
