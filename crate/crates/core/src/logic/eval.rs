//! The inductive satisfaction relation `(w, i, 𝐝) ⊧ φ`, memoised per
//! (subformula, position, stored valuation).

use super::Formula;
use crate::dataword::{equiv, restrict, restrict_partial, DataWord, PartialValuation};
use crate::order::QuasiOrder;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("check operator evaluated without a stored valuation")]
    NoStoredValuation,
    #[error("formula is not closed: some check lies outside every freeze quantifier")]
    NotClosed,
    #[error("position {0} is outside the word")]
    OutOfRange(usize),
}

/// ↑^x under stored 𝐝 at current valuation 𝐝_i.
pub fn check_holds(q: &QuasiOrder, stored: &PartialValuation, current: &[u64], x: usize) -> bool {
    let cur = restrict(q, current, x);
    stored.domain().any(|y| {
        let s = restrict_partial(q, stored, y).expect("y is in the domain");
        equiv(q, &s, &cur)
    })
}

pub struct Evaluator<'a> {
    q: &'a QuasiOrder,
    w: &'a DataWord,
    memo: HashMap<(*const Formula, usize, u32), bool>,
    stores: Vec<PartialValuation>,
    store_ids: HashMap<PartialValuation, u32>,
}

impl<'a> Evaluator<'a> {
    pub fn new(q: &'a QuasiOrder, w: &'a DataWord) -> Self {
        Evaluator {
            q,
            w,
            memo: HashMap::new(),
            stores: Vec::new(),
            store_ids: HashMap::new(),
        }
    }

    fn store_id(&mut self, s: PartialValuation) -> u32 {
        if let Some(&id) = self.store_ids.get(&s) {
            return id;
        }
        self.stores.push(s.clone());
        let id = self.stores.len() as u32;
        self.store_ids.insert(s, id);
        id
    }

    /// Evaluate at 1-based position `i`.
    pub fn eval(&mut self, f: &Formula, i: usize, stored: Option<&PartialValuation>) -> Result<bool, EvalError> {
        if i == 0 || i > self.w.len() {
            return Err(EvalError::OutOfRange(i));
        }
        let sid = match stored {
            None => 0,
            Some(s) => self.store_id(s.clone()),
        };
        self.at(f, i - 1, sid)
    }

    fn at(&mut self, f: &Formula, i: usize, s: u32) -> Result<bool, EvalError> {
        use Formula::*;
        let n = self.w.len();
        match f {
            True => return Ok(true),
            False => return Ok(false),
            Letter(a) => return Ok(self.w.positions[i].letter.has(*a)),
            Not(a) => return Ok(!self.at(a, i, s)?),
            And(a, b) => return Ok(self.at(a, i, s)? && self.at(b, i, s)?),
            Or(a, b) => return Ok(self.at(a, i, s)? || self.at(b, i, s)?),
            Next(a) => return Ok(i + 1 < n && self.at(a, i + 1, s)?),
            WeakNext(a) => return Ok(i + 1 >= n || self.at(a, i + 1, s)?),
            _ => {}
        }
        let key = (f as *const Formula, i, s);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let v = match f {
            Until(a, b) => {
                let mut v = false;
                for k in i..n {
                    if self.at(b, k, s)? {
                        v = true;
                        break;
                    }
                    if !self.at(a, k, s)? {
                        break;
                    }
                }
                v
            }
            Release(a, b) => {
                let mut v = true;
                for k in i..n {
                    if !self.at(b, k, s)? {
                        v = false;
                        break;
                    }
                    if self.at(a, k, s)? {
                        break;
                    }
                }
                v
            }
            Globally(a) => {
                let mut v = true;
                for k in i..n {
                    if !self.at(a, k, s)? {
                        v = false;
                        break;
                    }
                }
                v
            }
            Finally(a) => {
                let mut v = false;
                for k in i..n {
                    if self.at(a, k, s)? {
                        v = true;
                        break;
                    }
                }
                v
            }
            Freeze(x, a) => {
                let st = restrict(self.q, &self.w.positions[i].val, *x);
                let id = self.store_id(st);
                self.at(a, i, id)?
            }
            Check(x) => {
                if s == 0 {
                    return Err(EvalError::NoStoredValuation);
                }
                let st = &self.stores[s as usize - 1];
                check_holds(self.q, st, &self.w.positions[i].val, *x)
            }
            _ => unreachable!(),
        };
        self.memo.insert(key, v);
        Ok(v)
    }
}

/// `(w, i, stored) ⊧ φ` with 1-based `i`.
pub fn evaluate(
    q: &QuasiOrder,
    w: &DataWord,
    i: usize,
    stored: Option<&PartialValuation>,
    f: &Formula,
) -> Result<bool, EvalError> {
    Evaluator::new(q, w).eval(f, i, stored)
}

/// `w ⊧ φ` for closed φ.
pub fn models(q: &QuasiOrder, w: &DataWord, f: &Formula) -> Result<bool, EvalError> {
    if !f.is_closed() {
        return Err(EvalError::NotClosed);
    }
    evaluate(q, w, 1, None, f)
}
