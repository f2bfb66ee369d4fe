//! Data words over a quasi-ordered attribute set, partial valuations and ≃.

use crate::order::{Attr, QuasiOrder};
use crate::sym::Sym;
use itertools::Itertools;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Opaque data value; only equality is meaningful.
pub type DataValue = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("attribute `{0}` is not in the domain of the valuation")]
    AttrNotInDomain(String),
    #[error("a data word needs at least one position")]
    EmptyWord,
    #[error("position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

/// A letter is a set of propositions. Plain alphabets use singletons.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Letter(Vec<Sym>);

impl Letter {
    pub fn single(s: Sym) -> Letter {
        Letter(vec![s])
    }

    pub fn named(s: &str) -> Letter {
        Letter(vec![Sym::new(s)])
    }

    pub fn set<I: IntoIterator<Item = Sym>>(props: I) -> Letter {
        let mut v: Vec<Sym> = props.into_iter().collect();
        v.sort();
        v.dedup();
        Letter(v)
    }

    pub fn props(&self) -> &[Sym] {
        &self.0
    }

    pub fn has(&self, p: Sym) -> bool {
        self.0.contains(&p)
    }

    pub fn with(&self, p: Sym) -> Letter {
        Letter::set(self.0.iter().copied().chain(std::iter::once(p)))
    }

    pub fn without(&self, p: Sym) -> Letter {
        Letter(self.0.iter().copied().filter(|&q| q != p).collect())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "[{}]", self.0.iter().join(","))
        }
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A total valuation, indexed by attribute.
pub type Valuation = Vec<DataValue>;

/// A valuation restricted to cl(root).
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct PartialValuation {
    pub root: Attr,
    /// Sorted by attribute; the keys are exactly cl(root).
    pub values: Vec<(Attr, DataValue)>,
}

impl PartialValuation {
    pub fn domain(&self) -> impl Iterator<Item = Attr> + '_ {
        self.values.iter().map(|&(a, _)| a)
    }

    pub fn get(&self, a: Attr) -> Option<DataValue> {
        self.values.iter().find(|&&(b, _)| b == a).map(|&(_, v)| v)
    }
}

/// 𝐝|_x for a total valuation.
pub fn restrict(q: &QuasiOrder, v: &[DataValue], x: Attr) -> PartialValuation {
    PartialValuation {
        root: x,
        values: q.downward_closure(x).into_iter().map(|a| (a, v[a])).collect(),
    }
}

/// 𝐝|_x for a partial valuation; `x` must lie in its domain.
pub fn restrict_partial(q: &QuasiOrder, d: &PartialValuation, x: Attr) -> Result<PartialValuation, DataError> {
    if d.get(x).is_none() {
        return Err(DataError::AttrNotInDomain(q.name(x).to_string()));
    }
    Ok(PartialValuation {
        root: x,
        values: d.values.iter().copied().filter(|&(a, _)| q.leq(a, x)).collect(),
    })
}

/// 𝐝 ≃ 𝐞: an order isomorphism between the domains preserving values.
pub fn equiv(q: &QuasiOrder, d: &PartialValuation, e: &PartialValuation) -> bool {
    if d.values.len() != e.values.len() {
        return false;
    }
    if d == e {
        return true;
    }
    let mut dv: Vec<DataValue> = d.values.iter().map(|p| p.1).collect();
    let mut ev: Vec<DataValue> = e.values.iter().map(|p| p.1).collect();
    dv.sort_unstable();
    ev.sort_unstable();
    if dv != ev {
        return false;
    }
    let mut image = vec![usize::MAX; d.values.len()];
    let mut used = vec![false; e.values.len()];
    extend_iso(q, d, e, 0, &mut image, &mut used)
}

fn extend_iso(
    q: &QuasiOrder,
    d: &PartialValuation,
    e: &PartialValuation,
    i: usize,
    image: &mut [usize],
    used: &mut [bool],
) -> bool {
    if i == d.values.len() {
        return true;
    }
    let (x, xv) = d.values[i];
    for j in 0..e.values.len() {
        if used[j] {
            continue;
        }
        let (hx, hv) = e.values[j];
        if hv != xv {
            continue;
        }
        let consistent = (0..i).all(|p| {
            let (y, _) = d.values[p];
            let (hy, _) = e.values[image[p]];
            q.leq(x, y) == q.leq(hx, hy) && q.leq(y, x) == q.leq(hy, hx)
        }) && q.leq(x, x) == q.leq(hx, hx);
        if !consistent {
            continue;
        }
        image[i] = j;
        used[j] = true;
        if extend_iso(q, d, e, i + 1, image, used) {
            return true;
        }
        used[j] = false;
    }
    false
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Position {
    pub letter: Letter,
    pub val: Valuation,
}

/// A finite data word. Non-emptiness is checked by [`DataWord::new`];
/// intermediate prefixes built during search may be empty.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Default)]
pub struct DataWord {
    pub positions: Vec<Position>,
}

impl DataWord {
    pub fn new(positions: Vec<Position>) -> Result<DataWord, DataError> {
        if positions.is_empty() {
            return Err(DataError::EmptyWord);
        }
        Ok(DataWord { positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn prefix(&self, n: usize) -> DataWord {
        DataWord {
            positions: self.positions[..n].to_vec(),
        }
    }

    /// Rename values to first-occurrence order (positions left to right,
    /// attributes in index order).
    pub fn canonicalize(&self) -> DataWord {
        self.rename_with(&mut first_occurrence())
    }

    pub fn rename_with(&self, f: &mut impl FnMut(DataValue) -> DataValue) -> DataWord {
        DataWord {
            positions: self
                .positions
                .iter()
                .map(|p| Position {
                    letter: p.letter.clone(),
                    val: p.val.iter().map(|&v| f(v)).collect(),
                })
                .collect(),
        }
    }

    /// Parse whitespace-separated `letter{attr=int,...}` positions.
    pub fn parse(text: &str, q: &QuasiOrder) -> Result<DataWord, DataError> {
        let mut positions = Vec::new();
        let mut rest = text.trim_start();
        while !rest.is_empty() {
            let pos = positions.len() + 1;
            let err = |msg: String| DataError::Syntax { pos, msg };
            let open = rest.find('{').ok_or_else(|| err("missing `{`".to_string()))?;
            let close = rest[open..].find('}').ok_or_else(|| err("missing `}`".to_string()))? + open;
            let letter = parse_letter(rest[..open].trim()).map_err(err)?;
            let mut val: Vec<Option<DataValue>> = vec![None; q.len()];
            for item in rest[open + 1..close].split(',') {
                let item = item.trim();
                if item.is_empty() {
                    continue;
                }
                let (a, v) = item
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected attr=value, got `{item}`")))?;
                let a = q
                    .attr(a.trim())
                    .map_err(|_| err(format!("unknown attribute `{}`", a.trim())))?;
                let v: DataValue = v.trim().parse().map_err(|_| err(format!("bad value `{}`", v.trim())))?;
                if val[a].replace(v).is_some() {
                    return Err(err(format!("attribute `{}` given twice", q.name(a))));
                }
            }
            let val = val
                .into_iter()
                .enumerate()
                .map(|(a, v)| v.ok_or_else(|| err(format!("missing attribute `{}`", q.name(a)))))
                .collect::<Result<Vec<_>, _>>()?;
            positions.push(Position { letter, val });
            rest = rest[close + 1..].trim_start();
        }
        DataWord::new(positions)
    }

    pub fn display<'a>(&'a self, q: &'a QuasiOrder) -> WordDisplay<'a> {
        WordDisplay { w: self, q }
    }
}

fn parse_letter(s: &str) -> Result<Letter, String> {
    if let Some(inner) = s.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| format!("unterminated letter set `{s}`"))?;
        let props = inner
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| {
                if is_ident(p) {
                    Ok(Sym::new(p))
                } else {
                    Err(format!("bad proposition `{p}`"))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Letter::set(props));
    }
    if is_ident(s) {
        Ok(Letter::named(s))
    } else {
        Err(format!("bad letter `{s}`"))
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_')
        && cs.all(|c| c.is_alphanumeric() || matches!(c, '_' | '\'' | '.' | '#'))
}

/// Renaming to 0, 1, 2, … in order of first use.
pub fn first_occurrence() -> impl FnMut(DataValue) -> DataValue {
    let mut map: HashMap<DataValue, DataValue> = HashMap::new();
    move |v| {
        let n = map.len() as DataValue;
        *map.entry(v).or_insert(n)
    }
}

pub struct WordDisplay<'a> {
    w: &'a DataWord,
    q: &'a QuasiOrder,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.w.positions.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}{{", p.letter)?;
            for (a, v) in p.val.iter().enumerate() {
                if a > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}={}", self.q.name(a), v)?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}
