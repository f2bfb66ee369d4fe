//! Bounded satisfiability by breadth-first search over formula progressions.
//!
//! A search state is a conjunction of pending obligations `(ψ, stored)` for
//! the next position, each either strong (`X`, a successor is required) or
//! weak (`X̄`). Data values inside a state are renamed to first-occurrence
//! order, so states that differ only by a value permutation coincide, and
//! values no longer referenced by any obligation disappear. Each position
//! draws its values from those still referenced plus fresh ones; that covers
//! every canonical word up to the renamings the semantics cannot observe.
//! States are deduplicated, so the search is exact for the length bound and
//! returns a shortest witness, the first one in enumeration order.

use super::{models, EvalError, Formula};
use crate::dataword::{restrict, DataValue, DataWord, Letter, PartialValuation, Position};
use crate::logic::eval::check_holds;
use crate::order::{Attr, QuasiOrder};
use crate::sym::Sym;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeSet, HashMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchLimits {
    /// Maximum number of distinct search states.
    pub max_nodes: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_nodes: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SatResult {
    Witness(DataWord),
    NoWitnessUpTo(usize),
    LimitExhausted,
}

impl SatResult {
    pub fn is_sat(&self) -> Option<bool> {
        match self {
            SatResult::Witness(_) => Some(true),
            SatResult::NoWitnessUpTo(_) => Some(false),
            SatResult::LimitExhausted => None,
        }
    }
}

type Id = u32;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Letter(Sym),
    NotLetter(Sym),
    Check(Attr),
    NotCheck(Attr),
    And(Id, Id),
    Or(Id, Id),
    Next(Id),
    WeakNext(Id),
    Until(Id, Id),
    Release(Id, Id),
    Globally(Id),
    Finally(Id),
    Freeze(Attr, Id),
}

struct Arena {
    nodes: Vec<Node>,
    ids: HashMap<Node, Id>,
    /// Node has a check outside every freeze below it.
    open: Vec<bool>,
}

impl Arena {
    fn new() -> Self {
        Arena {
            nodes: Vec::new(),
            ids: HashMap::new(),
            open: Vec::new(),
        }
    }

    fn add(&mut self, n: Node) -> Id {
        if let Some(&id) = self.ids.get(&n) {
            return id;
        }
        let open = match n {
            Node::Check(_) | Node::NotCheck(_) => true,
            Node::True | Node::False | Node::Letter(_) | Node::NotLetter(_) | Node::Freeze(..) => false,
            Node::And(a, b) | Node::Or(a, b) | Node::Until(a, b) | Node::Release(a, b) => {
                self.open[a as usize] || self.open[b as usize]
            }
            Node::Next(a) | Node::WeakNext(a) | Node::Globally(a) | Node::Finally(a) => self.open[a as usize],
        };
        let id = self.nodes.len() as Id;
        self.nodes.push(n);
        self.open.push(open);
        self.ids.insert(n, id);
        id
    }

    /// Compile a formula already in negation normal form.
    fn compile(&mut self, f: &Formula) -> Id {
        use Formula as F;
        let n = match f {
            F::True => Node::True,
            F::False => Node::False,
            F::Letter(a) => Node::Letter(*a),
            F::Check(x) => Node::Check(*x),
            F::Not(a) => match **a {
                F::Letter(s) => Node::NotLetter(s),
                F::Check(x) => Node::NotCheck(x),
                _ => unreachable!("input is in negation normal form"),
            },
            F::And(a, b) => Node::And(self.compile(a), self.compile(b)),
            F::Or(a, b) => Node::Or(self.compile(a), self.compile(b)),
            F::Next(a) => Node::Next(self.compile(a)),
            F::WeakNext(a) => Node::WeakNext(self.compile(a)),
            F::Until(a, b) => Node::Until(self.compile(a), self.compile(b)),
            F::Release(a, b) => Node::Release(self.compile(a), self.compile(b)),
            F::Globally(a) => Node::Globally(self.compile(a)),
            F::Finally(a) => Node::Finally(self.compile(a)),
            F::Freeze(x, a) => Node::Freeze(*x, self.compile(a)),
        };
        self.add(n)
    }
}

/// A pending obligation for the next position.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
struct Item {
    weak: bool,
    node: Id,
    store: Option<Vec<(Attr, DataValue)>>,
    root: Attr,
}

/// Obligations for the rest of the word: a positive boolean combination of
/// pending items, kept flat, sorted and simplified.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum Res {
    False,
    True,
    Item(Item),
    And(Vec<Res>),
    Or(Vec<Res>),
}

fn mk_and(parts: Vec<Res>) -> Res {
    let mut out = Vec::new();
    for r in parts {
        match r {
            Res::False => return Res::False,
            Res::True => {}
            Res::And(v) => out.extend(v),
            r => out.push(r),
        }
    }
    out.sort();
    out.dedup();
    match out.len() {
        0 => Res::True,
        1 => out.pop().unwrap(),
        _ => Res::And(out),
    }
}

fn mk_or(parts: Vec<Res>) -> Res {
    let mut out = Vec::new();
    for r in parts {
        match r {
            Res::True => return Res::True,
            Res::False => {}
            Res::Or(v) => out.extend(v),
            r => out.push(r),
        }
    }
    out.sort();
    out.dedup();
    match out.len() {
        0 => Res::False,
        1 => out.pop().unwrap(),
        _ => Res::Or(out),
    }
}

fn const_res(v: bool) -> Res {
    if v {
        Res::True
    } else {
        Res::False
    }
}

struct Ctx<'a> {
    arena: &'a Arena,
    q: &'a QuasiOrder,
    letter: &'a Letter,
    val: &'a [DataValue],
    memo: HashMap<(Id, Option<PartialValuation>), Res>,
}

impl Ctx<'_> {
    fn item(&self, weak: bool, node: Id, store: &Option<PartialValuation>) -> Res {
        Res::Item(match store {
            Some(s) if self.arena.open[node as usize] => Item {
                weak,
                node,
                root: s.root,
                store: Some(s.values.clone()),
            },
            _ => Item {
                weak,
                node,
                root: 0,
                store: None,
            },
        })
    }

    fn prog(&mut self, id: Id, store: &Option<PartialValuation>) -> Result<Res, EvalError> {
        let key = (
            id,
            if self.arena.open[id as usize] {
                store.clone()
            } else {
                None
            },
        );
        if let Some(d) = self.memo.get(&key) {
            return Ok(d.clone());
        }
        let node = self.arena.nodes[id as usize];
        let d = match node {
            Node::True => Res::True,
            Node::False => Res::False,
            Node::Letter(p) => const_res(self.letter.has(p)),
            Node::NotLetter(p) => const_res(!self.letter.has(p)),
            Node::Check(x) | Node::NotCheck(x) => {
                let s = store.as_ref().ok_or(EvalError::NoStoredValuation)?;
                let v = check_holds(self.q, s, self.val, x);
                const_res(v == matches!(node, Node::Check(_)))
            }
            Node::And(x, y) => {
                let dx = self.prog(x, store)?;
                if dx == Res::False {
                    dx
                } else {
                    mk_and(vec![dx, self.prog(y, store)?])
                }
            }
            Node::Or(x, y) => {
                let dx = self.prog(x, store)?;
                if dx == Res::True {
                    dx
                } else {
                    mk_or(vec![dx, self.prog(y, store)?])
                }
            }
            Node::Next(x) => self.item(false, x, store),
            Node::WeakNext(x) => self.item(true, x, store),
            Node::Until(x, y) => {
                let now = self.prog(y, store)?;
                let hold = self.prog(x, store)?;
                mk_or(vec![now, mk_and(vec![hold, self.item(false, id, store)])])
            }
            Node::Release(x, y) => {
                let must = self.prog(y, store)?;
                if must == Res::False {
                    must
                } else {
                    let stop = self.prog(x, store)?;
                    mk_and(vec![must, mk_or(vec![stop, self.item(true, id, store)])])
                }
            }
            Node::Globally(x) => {
                let now = self.prog(x, store)?;
                mk_and(vec![now, self.item(true, id, store)])
            }
            Node::Finally(x) => {
                let now = self.prog(x, store)?;
                mk_or(vec![now, self.item(false, id, store)])
            }
            Node::Freeze(x, y) => {
                let s = Some(restrict(self.q, self.val, x));
                self.prog(y, &s)?
            }
        };
        self.memo.insert(key, d.clone());
        Ok(d)
    }

    /// Progress the obligations through the current position.
    fn step(&mut self, r: &Res) -> Result<Res, EvalError> {
        Ok(match r {
            Res::True => Res::True,
            Res::False => Res::False,
            Res::Item(it) => {
                let store = it.store.as_ref().map(|v| PartialValuation {
                    root: it.root,
                    values: v.clone(),
                });
                self.prog(it.node, &store)?
            }
            Res::And(v) => {
                let mut out = Vec::with_capacity(v.len());
                for x in v {
                    let y = self.step(x)?;
                    if y == Res::False {
                        return Ok(y);
                    }
                    out.push(y);
                }
                mk_and(out)
            }
            Res::Or(v) => {
                let mut out = Vec::with_capacity(v.len());
                for x in v {
                    let y = self.step(x)?;
                    if y == Res::True {
                        return Ok(y);
                    }
                    out.push(y);
                }
                mk_or(out)
            }
        })
    }
}

/// The obligations with every value replaced by 0.
fn erased(r: &Res) -> Res {
    match r {
        Res::Item(it) => {
            let mut it = it.clone();
            if let Some(s) = &mut it.store {
                s.iter_mut().for_each(|p| p.1 = 0);
            }
            Res::Item(it)
        }
        Res::And(v) => Res::And(v.iter().map(erased).collect()),
        Res::Or(v) => Res::Or(v.iter().map(erased).collect()),
        r => r.clone(),
    }
}

/// Rename the values to first-occurrence order, visiting subterms in an
/// order that does not depend on the old names. Returns the renamed
/// obligations and the old values indexed by new value.
fn canonical(r: &Res) -> (Res, Vec<DataValue>) {
    fn sort_erased(r: &Res) -> Res {
        match r {
            Res::And(v) | Res::Or(v) => {
                let mut kids: Vec<(Res, Res)> = v.iter().map(|x| (erased(x), sort_erased(x))).collect();
                kids.sort();
                let kids = kids.into_iter().map(|p| p.1).collect();
                if matches!(r, Res::And(_)) {
                    Res::And(kids)
                } else {
                    Res::Or(kids)
                }
            }
            r => r.clone(),
        }
    }
    fn collect(r: &Res, map: &mut HashMap<DataValue, DataValue>, order: &mut Vec<DataValue>) {
        match r {
            Res::Item(it) => {
                for &(_, v) in it.store.iter().flatten() {
                    if let std::collections::hash_map::Entry::Vacant(e) = map.entry(v) {
                        e.insert(order.len() as DataValue);
                        order.push(v);
                    }
                }
            }
            Res::And(v) | Res::Or(v) => v.iter().for_each(|x| collect(x, map, order)),
            _ => {}
        }
    }
    fn rename(r: &Res, map: &HashMap<DataValue, DataValue>) -> Res {
        match r {
            Res::Item(it) => {
                let mut it = it.clone();
                if let Some(s) = &mut it.store {
                    s.iter_mut().for_each(|p| p.1 = map[&p.1]);
                }
                Res::Item(it)
            }
            Res::And(v) => mk_and(v.iter().map(|x| rename(x, map)).collect()),
            Res::Or(v) => mk_or(v.iter().map(|x| rename(x, map)).collect()),
            r => r.clone(),
        }
    }
    let mut map = HashMap::new();
    let mut order = Vec::new();
    collect(&sort_erased(r), &mut map, &mut order);
    (rename(r, &map), order)
}

/// The word may end here: strong items fail, weak ones hold.
fn accepting(r: &Res) -> bool {
    match r {
        Res::True => true,
        Res::False => false,
        Res::Item(it) => it.weak,
        Res::And(v) => v.iter().all(accepting),
        Res::Or(v) => v.iter().any(accepting),
    }
}

struct Rec {
    parent: u32,
    pos: Option<Position>,
    /// canonical value -> concrete value
    concrete: Vec<DataValue>,
    next_fresh: DataValue,
    cube: Res,
}

/// All valuations of the relevant attributes over `m` existing values plus
/// fresh ones numbered from `m` in first-use order.
fn valuations(relevant: &[Attr], n_attrs: usize, m: DataValue) -> Vec<Vec<DataValue>> {
    let mut out = Vec::new();
    let mut cur = vec![DataValue::MAX; n_attrs];
    fn go(
        i: usize,
        fresh: DataValue,
        rel: &[Attr],
        m: DataValue,
        cur: &mut Vec<DataValue>,
        out: &mut Vec<Vec<DataValue>>,
    ) {
        if i == rel.len() {
            let mut v = cur.clone();
            let mut f = m + fresh;
            for x in v.iter_mut() {
                if *x == DataValue::MAX {
                    *x = f;
                    f += 1;
                }
            }
            out.push(v);
            return;
        }
        for val in 0..m + fresh + 1 {
            cur[rel[i]] = val;
            let nf = if val == m + fresh { fresh + 1 } else { fresh };
            go(i + 1, nf, rel, m, cur, out);
        }
        cur[rel[i]] = DataValue::MAX;
    }
    go(0, 0, relevant, m, &mut cur, &mut out);
    out
}

/// Search for a word of length at most `max_len` over `alphabet` satisfying
/// the closed formula `f`.
pub fn bounded_sat(
    f: &Formula,
    alphabet: &[Letter],
    q: &QuasiOrder,
    max_len: usize,
    limits: SearchLimits,
) -> Result<SatResult, EvalError> {
    if !f.is_closed() {
        return Err(EvalError::NotClosed);
    }
    let mut arena = Arena::new();
    let root = arena.compile(&f.nnf());
    let relevant: Vec<Attr> = {
        let mut s = BTreeSet::new();
        for x in f.attrs() {
            s.extend(q.downward_closure(x));
        }
        s.into_iter().collect()
    };
    // letters the formula cannot tell apart are explored once
    let props = f.letters();
    let mut seen_views = HashSet::new();
    let letters: Vec<&Letter> = alphabet
        .iter()
        .filter(|l| {
            let view: Vec<Sym> = l.props().iter().copied().filter(|p| props.contains(p)).collect();
            seen_views.insert(view)
        })
        .collect();

    let start = Res::Item(Item {
        weak: false,
        node: root,
        store: None,
        root: 0,
    });
    let mut recs = vec![Rec {
        parent: u32::MAX,
        pos: None,
        concrete: Vec::new(),
        next_fresh: 0,
        cube: start.clone(),
    }];
    let mut visited: HashSet<Res> = HashSet::new();
    visited.insert(start);
    let mut frontier: Vec<u32> = vec![0];
    let mut val_cache: HashMap<DataValue, Vec<Vec<DataValue>>> = HashMap::new();

    for _depth in 0..max_len {
        if frontier.is_empty() {
            break;
        }
        for &r in &frontier {
            let m = recs[r as usize].concrete.len() as DataValue;
            val_cache.entry(m).or_insert_with(|| valuations(&relevant, q.len(), m));
        }
        type Child = (usize, Letter, Vec<DataValue>, Res, bool);
        let expanded: Vec<Result<Vec<Child>, EvalError>> = frontier
            .par_iter()
            .map(|&r| {
                let rec = &recs[r as usize];
                let m = rec.concrete.len() as DataValue;
                let vals = &val_cache[&m];
                let mut out = Vec::new();
                for letter in &letters {
                    for val in vals {
                        let mut ctx = Ctx {
                            arena: &arena,
                            q,
                            letter,
                            val,
                            memo: HashMap::new(),
                        };
                        let res = ctx.step(&rec.cube)?;
                        if res != Res::False {
                            let acc = accepting(&res);
                            out.push((r as usize, (*letter).clone(), val.clone(), res, acc));
                        }
                    }
                }
                Ok(out)
            })
            .collect();
        let mut next = Vec::new();
        for batch in expanded {
            for (parent, letter, val, cube, acc) in batch? {
                let p = &recs[parent];
                let m = p.concrete.len() as DataValue;
                let to_concrete = |v: DataValue| {
                    if v < m {
                        p.concrete[v as usize]
                    } else {
                        p.next_fresh + (v - m)
                    }
                };
                let concrete_val: Vec<DataValue> = val.iter().map(|&v| to_concrete(v)).collect();
                let used = val.iter().filter(|&&v| v >= m).count() as DataValue;
                let pos = Position {
                    letter,
                    val: concrete_val,
                };
                if acc {
                    let mut positions = vec![pos];
                    let mut cur = parent;
                    while let Some(p) = &recs[cur].pos {
                        positions.push(p.clone());
                        cur = recs[cur].parent as usize;
                    }
                    positions.reverse();
                    let w = DataWord { positions }.canonicalize();
                    assert_eq!(
                        models(q, &w, f),
                        Ok(true),
                        "search produced a non-model: {}",
                        w.display(q)
                    );
                    return Ok(SatResult::Witness(w));
                }
                let (canon, old) = canonical(&cube);
                if visited.contains(&canon) {
                    continue;
                }
                if visited.len() >= limits.max_nodes {
                    return Ok(SatResult::LimitExhausted);
                }
                visited.insert(canon.clone());
                let concrete = old.iter().map(|&v| to_concrete(v)).collect();
                let next_fresh = p.next_fresh + used;
                recs.push(Rec {
                    parent: parent as u32,
                    pos: Some(pos),
                    concrete,
                    next_fresh,
                    cube: canon,
                });
                next.push((recs.len() - 1) as u32);
            }
        }
        frontier = next;
    }
    Ok(SatResult::NoWitnessUpTo(max_len))
}

/// Exhaustive reference search: every word up to `max_len` with values in
/// first-occurrence numbering, checked with the evaluator. Exponential; for
/// cross-checking on tiny instances.
pub fn brute_force_sat(
    f: &Formula,
    alphabet: &[Letter],
    q: &QuasiOrder,
    max_len: usize,
) -> Result<Option<DataWord>, EvalError> {
    if !f.is_closed() {
        return Err(EvalError::NotClosed);
    }
    for len in 1..=max_len {
        let cells = len * q.len();
        let mut vals = vec![0 as DataValue; cells];
        loop {
            let mut letters = vec![0usize; len];
            loop {
                let w = DataWord {
                    positions: (0..len)
                        .map(|i| Position {
                            letter: alphabet[letters[i]].clone(),
                            val: vals[i * q.len()..(i + 1) * q.len()].to_vec(),
                        })
                        .collect(),
                };
                if models(q, &w, f)? {
                    return Ok(Some(w));
                }
                if !bump(&mut letters, alphabet.len()) {
                    break;
                }
            }
            if !next_rgs(&mut vals) {
                break;
            }
        }
    }
    Ok(None)
}

fn bump(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Next restricted growth string (first-occurrence numbering).
fn next_rgs(v: &mut [DataValue]) -> bool {
    let n = v.len();
    for i in (1..n).rev() {
        let max_prefix = v[..i].iter().copied().max().unwrap_or(0);
        if v[i] <= max_prefix {
            v[i] += 1;
            for x in v[i + 1..].iter_mut() {
                *x = 0;
            }
            return true;
        }
    }
    false
}
