//! Satisfiability of freeze LTL over a linear order `[k]` as coverability
//! in a (k+1)-level NCS.
//!
//! The root carries the control state, level one the storage tags
//! (`stor`, `aux`), and the levels below hold a forest of cells. A cell on a
//! path `v1 … vi` stands for the valuation prefix of length `i` assigned to
//! those nodes and carries guarantees: formulas that hold at the current
//! position when that prefix is stored. The word is built backwards; each
//! position is constructed in the `(add, a)` phase and the storage is then
//! copied into `aux`, moving every guarantee one step into the past.
//!
//! Rules are never materialised. [`Ltl2Ncs`] evaluates the schemata on the
//! configuration at hand, and [`Saturating`] restricts it to one canonical
//! order of the monotone steps for search.

use crate::dataword::Letter;
use crate::logic::Formula;
use crate::ncs::{apply_at, cover_with, Config, CoverLimits, CoverResult, Rule, Step, SuccessorGen};
use crate::order::QuasiOrder;
use crate::sym::Sym;
use itertools::Itertools;
use serde::Serialize;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Ltl2NcsError {
    #[error("formula not in normal form: {0}")]
    NotNormalized(String),
    #[error("attribute order is not linear")]
    NotLinearOrder,
    #[error("closure has {0} formulas; at most 128 are supported")]
    TooLarge(usize),
    #[error("alphabet has {0} letters; at most 255 are supported")]
    AlphabetTooLarge(usize),
}

/// Formula-index set of a cell.
pub type Bits = u128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Ctrl {
    Setup,
    /// `(add, a)`, letter by alphabet index.
    Add(u8),
    /// `(add, a, ↓φ)`, the frozen formula by closure index.
    AddFreeze(u8, u8),
    Next1,
    Next2,
    Copy,
    CopyBt,
    /// `(copy, F)`
    CopyWith(Bits),
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Tag {
    Stor,
    StorChk,
    Aux,
    AuxChk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Cell {
    pub checked: bool,
    pub set: Bits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum NState {
    Ctrl(Ctrl),
    Tag(Tag),
    Cell(Cell),
}

fn fmt_bits(f: &mut fmt::Formatter<'_>, b: Bits) -> fmt::Result {
    write!(f, "{{{}}}", ones(b).join(","))
}

fn ones(b: Bits) -> impl Iterator<Item = usize> {
    (0..128).filter(move |i| b >> i & 1 == 1)
}

impl fmt::Display for NState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NState::Ctrl(c) => match c {
                Ctrl::Setup => write!(f, "setup"),
                Ctrl::Add(a) => write!(f, "add.{a}"),
                Ctrl::AddFreeze(a, p) => write!(f, "add.{a}.{p}"),
                Ctrl::Next1 => write!(f, "next1"),
                Ctrl::Next2 => write!(f, "next2"),
                Ctrl::Copy => write!(f, "copy"),
                Ctrl::CopyBt => write!(f, "copy_bt"),
                Ctrl::CopyWith(b) => {
                    write!(f, "copy")?;
                    fmt_bits(f, b)
                }
                Ctrl::Final => write!(f, "final"),
            },
            NState::Tag(t) => f.write_str(match t {
                Tag::Stor => "stor",
                Tag::StorChk => "stor✓",
                Tag::Aux => "aux",
                Tag::AuxChk => "aux✓",
            }),
            NState::Cell(c) => {
                f.write_str(if c.checked { "✓" } else { "✗" })?;
                fmt_bits(f, c.set)
            }
        }
    }
}

fn ctrl(c: Ctrl) -> NState {
    NState::Ctrl(c)
}

fn tag(t: Tag) -> NState {
    NState::Tag(t)
}

fn cell(checked: bool, set: Bits) -> NState {
    NState::Cell(Cell { checked, set })
}

/// Subformulas of Φ plus the one-step unfoldings of its `U` and `R`
/// subformulas, children before parents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubClosure {
    pub formulas: Vec<Formula>,
    index: HashMap<Formula, usize>,
}

impl SubClosure {
    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.index.get(f).copied()
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.index.contains_key(f)
    }

    fn insert(&mut self, f: &Formula) {
        if self.index.contains_key(f) {
            return;
        }
        for c in f.children() {
            self.insert(c);
        }
        self.index.insert(f.clone(), self.formulas.len());
        self.formulas.push(f.clone());
        if let Some(u) = unfolding(f) {
            self.insert(&u);
        }
    }
}

/// `ψ ∨ (φ ∧ X(φ U ψ))` for `φ U ψ`, `ψ ∧ (φ ∨ X̄(φ R ψ))` for `φ R ψ`.
pub fn unfolding(f: &Formula) -> Option<Formula> {
    match f {
        Formula::Until(a, b) => Some(Formula::or(
            (**b).clone(),
            Formula::and((**a).clone(), Formula::next(f.clone())),
        )),
        Formula::Release(a, b) => Some(Formula::and(
            (**b).clone(),
            Formula::or((**a).clone(), Formula::weak_next(f.clone())),
        )),
        _ => None,
    }
}

fn check_normal(f: &Formula, frozen: usize, q: &QuasiOrder) -> Result<(), Ltl2NcsError> {
    match f {
        Formula::Check(x) if q.level(*x) > frozen => Err(Ltl2NcsError::NotNormalized(format!(
            "check of level {} under a freeze of level {frozen}",
            q.level(*x)
        ))),
        Formula::Freeze(x, b) => check_normal(b, q.level(*x), q),
        _ => f.children().into_iter().try_for_each(|c| check_normal(c, frozen, q)),
    }
}

/// Closure of `Φ` after `G`/`F` are rewritten to `R`/`U`. `Φ` must be in
/// negation normal form.
pub fn sub_closure(phi: &Formula) -> Result<SubClosure, Ltl2NcsError> {
    if !phi.is_nnf() {
        return Err(Ltl2NcsError::NotNormalized(
            "negation above a non-atomic formula".into(),
        ));
    }
    let mut s = SubClosure {
        formulas: Vec::new(),
        index: HashMap::new(),
    };
    s.insert(&phi.desugar());
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    True,
    Other,
    Prop(Sym),
    NotProp(Sym),
    Check(usize),
    NotCheck(usize),
    And(usize, usize),
    Or(usize, usize),
    Until(usize),
    Release(usize),
    Freeze(usize, usize),
    WeakNext,
}

/// Rule schemata, one per family of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Schema {
    SetupBranch,
    SetupWeakNext,
    SetupDone,
    AddLetter,
    AddNotLetter,
    AddCheck,
    AddNotCheck,
    AddTrue,
    AddOr,
    AddAnd,
    FoldUntil,
    FoldRelease,
    FreezeMark,
    FreezeAdd,
    Advance,
    Next1,
    CopyEnterRoot,
    CopyAuxRoot,
    CopyDown,
    CopyAuxDown,
    CopyBackStor,
    CopyBackAux,
    CopyLeaveRoot,
    CopyAuxLeaveRoot,
    CopyDropStor,
    CopyFinish,
    Next2,
    Final,
}

impl Schema {
    /// Steps that only add a formula to one cell.
    fn is_add(self) -> bool {
        use Schema::*;
        matches!(
            self,
            AddLetter | AddNotLetter | AddCheck | AddNotCheck | AddTrue | AddOr | AddAnd | FoldUntil | FoldRelease
        )
    }
}

/// One applicable rule instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inst {
    pub schema: Schema,
    pub rule: Rule<NState>,
    pub path: Vec<usize>,
}

struct CellPath {
    idx: Vec<usize>,
    cells: Vec<Cell>,
}

impl CellPath {
    fn last(&self) -> Cell {
        *self.cells.last().expect("cell paths are non-empty")
    }

    /// Length of the checked prefix.
    fn checked_prefix(&self) -> usize {
        self.cells.iter().take_while(|c| c.checked).count()
    }

    fn lhs(&self, c: Ctrl, t: Tag) -> Vec<NState> {
        let mut v = vec![ctrl(c), tag(t)];
        v.extend(self.cells.iter().map(|&x| NState::Cell(x)));
        v
    }
}

/// Every path to a cell below the tag at root child `t`, parents first.
fn cell_paths(c: &Config<NState>, t: usize) -> Vec<CellPath> {
    fn go(n: &Config<NState>, idx: &mut Vec<usize>, cells: &mut Vec<Cell>, out: &mut Vec<CellPath>) {
        for (i, ch) in n.children.iter().enumerate() {
            if i > 0 && n.children[i - 1] == *ch {
                continue;
            }
            let NState::Cell(x) = ch.state else { continue };
            idx.push(i);
            cells.push(x);
            out.push(CellPath {
                idx: idx.clone(),
                cells: cells.clone(),
            });
            go(ch, idx, cells, out);
            idx.pop();
            cells.pop();
        }
    }
    let mut out = Vec::new();
    go(&c.children[t], &mut vec![t], &mut Vec::new(), &mut out);
    out
}

fn find_tag(c: &Config<NState>, want: &[Tag]) -> Option<(usize, Tag)> {
    c.children.iter().enumerate().find_map(|(i, ch)| match ch.state {
        NState::Tag(t) if want.contains(&t) => Some((i, t)),
        _ => None,
    })
}

/// The translation of one formula; also the faithful successor generator.
#[derive(Debug, Clone)]
pub struct Ltl2Ncs {
    pub k: usize,
    pub alphabet: Vec<Letter>,
    pub sub: SubClosure,
    kinds: Vec<Kind>,
    /// For each formula, the `X`/`X̄` formulas over it.
    nexts: Vec<Bits>,
    weak_nexts: Bits,
    phi: usize,
}

/// Singletons of the formula's letters and the empty letter.
pub fn default_alphabet(phi: &Formula) -> Vec<Letter> {
    let mut v: Vec<Letter> = phi.letters().into_iter().map(Letter::single).collect();
    v.push(Letter::set([]));
    v
}

/// Build the translation of the closed NNF formula `phi` over the linear
/// order `q`.
pub fn translate(phi: &Formula, q: &QuasiOrder, alphabet: &[Letter]) -> Result<Ltl2Ncs, Ltl2NcsError> {
    if !q.is_linear() {
        return Err(Ltl2NcsError::NotLinearOrder);
    }
    if !phi.is_closed() {
        return Err(Ltl2NcsError::NotNormalized("formula is not closed".into()));
    }
    check_normal(phi, 0, q)?;
    let sub = sub_closure(phi)?;
    if sub.len() > 128 {
        return Err(Ltl2NcsError::TooLarge(sub.len()));
    }
    if alphabet.len() > 255 {
        return Err(Ltl2NcsError::AlphabetTooLarge(alphabet.len()));
    }
    let id = |f: &Formula| sub.index_of(f).expect("closure is closed under subterms");
    let mut nexts = vec![0; sub.len()];
    let mut weak_nexts = 0;
    let kinds = sub
        .formulas
        .iter()
        .enumerate()
        .map(|(i, f)| match f {
            Formula::True => Kind::True,
            Formula::Letter(p) => Kind::Prop(*p),
            Formula::Not(a) => match **a {
                Formula::Letter(p) => Kind::NotProp(p),
                Formula::Check(x) => Kind::NotCheck(q.level(x)),
                _ => unreachable!("closure is in NNF"),
            },
            Formula::Check(x) => Kind::Check(q.level(*x)),
            Formula::And(a, b) => Kind::And(id(a), id(b)),
            Formula::Or(a, b) => Kind::Or(id(a), id(b)),
            Formula::Until(..) => Kind::Until(id(&unfolding(f).unwrap())),
            Formula::Release(..) => Kind::Release(id(&unfolding(f).unwrap())),
            Formula::Freeze(x, b) => Kind::Freeze(q.level(*x), id(b)),
            Formula::Next(a) => {
                nexts[id(a)] |= 1 << i;
                Kind::Other
            }
            Formula::WeakNext(a) => {
                nexts[id(a)] |= 1 << i;
                weak_nexts |= 1 << i;
                Kind::WeakNext
            }
            _ => Kind::Other,
        })
        .collect();
    Ok(Ltl2Ncs {
        k: q.len(),
        alphabet: alphabet.to_vec(),
        phi: id(&phi.desugar()),
        sub,
        kinds,
        nexts,
        weak_nexts,
    })
}

impl Ltl2Ncs {
    /// `setup(stor(✓∅(…(✓∅))))`, one checked branch of length k.
    pub fn initial(&self) -> Config<NState> {
        let mut c = Config::leaf(cell(true, 0));
        for _ in 1..self.k {
            c = Config::new(cell(true, 0), vec![c]);
        }
        Config::new(ctrl(Ctrl::Setup), vec![Config::new(tag(Tag::Stor), vec![c])])
    }

    /// The bare `final` configuration.
    pub fn target(&self) -> Config<NState> {
        Config::leaf(ctrl(Ctrl::Final))
    }

    pub fn is_final(c: &Config<NState>) -> bool {
        c.state == ctrl(Ctrl::Final)
    }

    /// Index of Φ in the closure.
    pub fn phi_index(&self) -> usize {
        self.phi
    }

    /// `F_X`
    pub fn next_set(&self, set: Bits) -> Bits {
        ones(set).fold(0, |acc, i| acc | self.nexts[i])
    }

    fn relabel(&self, schema: Schema, c0: Ctrl, c1: Ctrl, t: Tag, p: &CellPath, set: Bits) -> Inst {
        let lhs = p.lhs(c0, t);
        let mut rhs = lhs.clone();
        rhs[0] = ctrl(c1);
        *rhs.last_mut().unwrap() = cell(p.last().checked, set);
        Inst {
            schema,
            rule: Rule::new(lhs, rhs),
            path: p.idx.clone(),
        }
    }

    fn at_root(&self, schema: Schema, lhs: Vec<NState>, rhs: Vec<NState>) -> Inst {
        Inst {
            schema,
            rule: Rule::new(lhs, rhs),
            path: Vec::new(),
        }
    }

    /// Every schema instance applicable to `c`.
    pub fn instances(&self, c: &Config<NState>) -> Vec<Inst> {
        let NState::Ctrl(q) = c.state else { return Vec::new() };
        let mut out = Vec::new();
        let stor = find_tag(c, &[Tag::Stor, Tag::StorChk]);
        let aux = find_tag(c, &[Tag::Aux, Tag::AuxChk]);
        match q {
            Ctrl::Setup => {
                if let Some((s, Tag::Stor)) = stor {
                    // a fresh unchecked branch completed to depth k below
                    // any path of length i < k
                    out.push(Inst {
                        schema: Schema::SetupBranch,
                        rule: Rule::new(
                            vec![ctrl(q), tag(Tag::Stor)],
                            [ctrl(q), tag(Tag::Stor)]
                                .into_iter()
                                .chain((0..self.k).map(|_| cell(false, 0)))
                                .collect(),
                        ),
                        path: vec![s],
                    });
                    for p in cell_paths(c, s) {
                        if p.cells.len() < self.k {
                            let lhs = p.lhs(q, Tag::Stor);
                            let mut rhs = lhs.clone();
                            rhs.extend((p.cells.len()..self.k).map(|_| cell(false, 0)));
                            out.push(Inst {
                                schema: Schema::SetupBranch,
                                rule: Rule::new(lhs, rhs),
                                path: p.idx.clone(),
                            });
                        }
                        for i in ones(self.weak_nexts & !p.last().set) {
                            out.push(self.relabel(Schema::SetupWeakNext, q, q, Tag::Stor, &p, p.last().set | 1 << i));
                        }
                    }
                }
                for a in 0..self.alphabet.len() {
                    out.push(self.at_root(Schema::SetupDone, vec![ctrl(q)], vec![ctrl(Ctrl::Add(a as u8))]));
                }
            }
            Ctrl::Add(a) => {
                if let Some((s, Tag::Stor)) = stor {
                    let letter = &self.alphabet[a as usize];
                    for p in cell_paths(c, s) {
                        let cl = p.last();
                        let has = |i: usize| cl.set >> i & 1 == 1;
                        let level = p.cells.len();
                        let chk = p.checked_prefix();
                        if has(self.phi) {
                            out.push(Inst {
                                schema: Schema::Final,
                                rule: Rule::new(p.lhs(q, Tag::Stor), vec![ctrl(Ctrl::Final)]),
                                path: p.idx.clone(),
                            });
                        }
                        for (i, kind) in self.kinds.iter().enumerate() {
                            let schema = match *kind {
                                Kind::Prop(x) if letter.has(x) => Schema::AddLetter,
                                Kind::NotProp(x) if !letter.has(x) => Schema::AddNotLetter,
                                // ↑^l holds iff the first l cells of the path
                                // are the current valuation's
                                Kind::Check(l) if l <= chk => Schema::AddCheck,
                                Kind::NotCheck(l) if l > chk => Schema::AddNotCheck,
                                Kind::True => Schema::AddTrue,
                                Kind::Or(x, y) if has(x) || has(y) => Schema::AddOr,
                                Kind::And(x, y) if has(x) && has(y) => Schema::AddAnd,
                                Kind::Until(u) if has(u) => Schema::FoldUntil,
                                Kind::Release(u) if has(u) => Schema::FoldRelease,
                                Kind::Freeze(l, b) if cl.checked && l == level && has(b) => {
                                    out.push(self.relabel(
                                        Schema::FreezeMark,
                                        q,
                                        Ctrl::AddFreeze(a, i as u8),
                                        Tag::Stor,
                                        &p,
                                        cl.set,
                                    ));
                                    continue;
                                }
                                _ => continue,
                            };
                            if !has(i) {
                                out.push(self.relabel(schema, q, q, Tag::Stor, &p, cl.set | 1 << i));
                            }
                        }
                    }
                }
                out.push(self.at_root(
                    Schema::Advance,
                    vec![ctrl(q)],
                    vec![ctrl(Ctrl::Next1), tag(Tag::AuxChk)],
                ));
            }
            Ctrl::AddFreeze(a, f) => {
                if let Some((s, Tag::Stor)) = stor {
                    for p in cell_paths(c, s) {
                        out.push(self.relabel(
                            Schema::FreezeAdd,
                            q,
                            Ctrl::Add(a),
                            Tag::Stor,
                            &p,
                            p.last().set | 1 << f,
                        ));
                    }
                }
            }
            Ctrl::Next1 => {
                if let Some((s, Tag::Stor)) = stor {
                    for p in cell_paths(c, s) {
                        if p.cells.len() == self.k && p.checked_prefix() == self.k {
                            let lhs = p.lhs(q, Tag::Stor);
                            let rhs = [ctrl(Ctrl::Copy), tag(Tag::StorChk)]
                                .into_iter()
                                .chain(p.cells.iter().map(|x| cell(false, x.set)))
                                .collect();
                            out.push(Inst {
                                schema: Schema::Next1,
                                rule: Rule::new(lhs, rhs),
                                path: p.idx.clone(),
                            });
                        }
                    }
                }
            }
            Ctrl::Copy => match stor {
                Some((s, Tag::StorChk)) => {
                    for p in cell_paths(c, s) {
                        let x = p.last();
                        if p.cells.len() == 1 && !x.checked {
                            out.push(Inst {
                                schema: Schema::CopyEnterRoot,
                                rule: Rule::new(
                                    p.lhs(q, Tag::StorChk),
                                    vec![ctrl(Ctrl::CopyWith(x.set)), tag(Tag::Stor), cell(true, x.set)],
                                ),
                                path: p.idx.clone(),
                            });
                        }
                    }
                    out.push(Inst {
                        schema: Schema::CopyDropStor,
                        rule: Rule::new(vec![ctrl(q), tag(Tag::StorChk)], vec![ctrl(Ctrl::CopyBt)]),
                        path: vec![s],
                    });
                }
                Some((s, Tag::Stor)) => {
                    for p in cell_paths(c, s) {
                        let n = p.cells.len();
                        let x = p.last();
                        let lhs = p.lhs(q, Tag::Stor);
                        if n >= 2 && p.cells[n - 2].checked && !x.checked {
                            let mut rhs = lhs.clone();
                            rhs[0] = ctrl(Ctrl::CopyWith(x.set));
                            rhs[n] = cell(false, p.cells[n - 2].set);
                            rhs[n + 1] = cell(true, x.set);
                            out.push(Inst {
                                schema: Schema::CopyDown,
                                rule: Rule::new(lhs, rhs),
                                path: p.idx.clone(),
                            });
                        } else if n >= 2 && x.checked && !p.cells[n - 2].checked {
                            let mut rhs = lhs[..n + 1].to_vec();
                            rhs[0] = ctrl(Ctrl::CopyBt);
                            rhs[n] = cell(true, p.cells[n - 2].set);
                            out.push(Inst {
                                schema: Schema::CopyBackStor,
                                rule: Rule::new(lhs, rhs),
                                path: p.idx.clone(),
                            });
                        } else if n == 1 && x.checked {
                            out.push(Inst {
                                schema: Schema::CopyLeaveRoot,
                                rule: Rule::new(lhs, vec![ctrl(Ctrl::CopyBt), tag(Tag::StorChk)]),
                                path: p.idx.clone(),
                            });
                        }
                    }
                }
                _ => {}
            },
            Ctrl::CopyWith(f) => {
                let fx = self.next_set(f);
                match aux {
                    Some((t, Tag::AuxChk)) => out.push(Inst {
                        schema: Schema::CopyAuxRoot,
                        rule: Rule::new(
                            vec![ctrl(q), tag(Tag::AuxChk)],
                            vec![ctrl(Ctrl::Copy), tag(Tag::Aux), cell(true, fx)],
                        ),
                        path: vec![t],
                    }),
                    Some((t, Tag::Aux)) => {
                        for p in cell_paths(c, t) {
                            let x = p.last();
                            if x.checked && p.cells.len() < self.k {
                                let lhs = p.lhs(q, Tag::Aux);
                                let mut rhs = lhs.clone();
                                rhs[0] = ctrl(Ctrl::Copy);
                                *rhs.last_mut().unwrap() = cell(false, x.set);
                                rhs.push(cell(true, fx));
                                out.push(Inst {
                                    schema: Schema::CopyAuxDown,
                                    rule: Rule::new(lhs, rhs),
                                    path: p.idx.clone(),
                                });
                            }
                        }
                    }
                    _ => {}
                }
            }
            Ctrl::CopyBt => match aux {
                Some((t, Tag::Aux)) => {
                    for p in cell_paths(c, t) {
                        let n = p.cells.len();
                        let x = p.last();
                        let lhs = p.lhs(q, Tag::Aux);
                        if n >= 2 && x.checked && !p.cells[n - 2].checked {
                            let mut rhs = lhs.clone();
                            rhs[0] = ctrl(Ctrl::Copy);
                            rhs[n] = cell(true, p.cells[n - 2].set);
                            rhs[n + 1] = cell(false, x.set);
                            out.push(Inst {
                                schema: Schema::CopyBackAux,
                                rule: Rule::new(lhs, rhs),
                                path: p.idx.clone(),
                            });
                        } else if n == 1 && x.checked {
                            out.push(Inst {
                                schema: Schema::CopyAuxLeaveRoot,
                                rule: Rule::new(lhs, vec![ctrl(Ctrl::Copy), tag(Tag::AuxChk), cell(false, x.set)]),
                                path: p.idx.clone(),
                            });
                        }
                    }
                }
                Some((t, Tag::AuxChk)) => out.push(Inst {
                    schema: Schema::CopyFinish,
                    rule: Rule::new(vec![ctrl(q), tag(Tag::AuxChk)], vec![ctrl(Ctrl::Next2), tag(Tag::Stor)]),
                    path: vec![t],
                }),
                _ => {}
            },
            Ctrl::Next2 => {
                if let Some((s, Tag::Stor)) = stor {
                    let mut prefixes: Vec<(Vec<usize>, Vec<Cell>)> = vec![(vec![s], Vec::new())];
                    prefixes.extend(
                        cell_paths(c, s)
                            .into_iter()
                            .filter(|p| p.checked_prefix() == 0 && p.cells.iter().all(|x| !x.checked))
                            .map(|p| (p.idx, p.cells)),
                    );
                    for (idx, cells) in prefixes {
                        let mut lhs = vec![ctrl(q), tag(Tag::Stor)];
                        lhs.extend(cells.iter().map(|&x| NState::Cell(x)));
                        for a in 0..self.alphabet.len() {
                            let mut rhs = vec![ctrl(Ctrl::Add(a as u8)), tag(Tag::Stor)];
                            rhs.extend(cells.iter().map(|x| cell(true, x.set)));
                            rhs.extend((cells.len()..self.k).map(|_| cell(true, 0)));
                            out.push(Inst {
                                schema: Schema::Next2,
                                rule: Rule::new(lhs.clone(), rhs),
                                path: idx.clone(),
                            });
                        }
                    }
                }
            }
            Ctrl::Final => {}
        }
        out
    }

    fn apply(&self, c: &Config<NState>, inst: Inst) -> (Step<NState>, Config<NState>) {
        let d = apply_at(c, &inst.rule, &inst.path);
        (
            Step {
                rule: inst.rule,
                path: inst.path,
            },
            d,
        )
    }

    /// Schema of a rule, decided from its shape alone.
    pub fn schema_of(&self, r: &Rule<NState>) -> Option<Schema> {
        use NState as N;
        let (l, rr) = (&r.lhs, &r.rhs);
        let cells = |v: &[NState]| -> Option<Vec<Cell>> {
            v.iter()
                .map(|s| match s {
                    N::Cell(c) => Some(*c),
                    _ => None,
                })
                .collect()
        };
        let N::Ctrl(c0) = l[0] else { return None };
        let N::Ctrl(c1) = rr[0] else { return None };
        let t0 = l.get(1).copied();
        let t1 = rr.get(1).copied();
        let lc = cells(l.get(2..).unwrap_or(&[]))?;
        let rc = cells(rr.get(2..).unwrap_or(&[]))?;
        let n = lc.len();
        let same_prefix = |m: usize| n >= m && rc.len() >= m && lc[..m] == rc[..m];
        let nletters = self.alphabet.len() as u8;
        let stor = Some(tag(Tag::Stor));
        match (c0, c1) {
            (Ctrl::Setup, Ctrl::Setup) if t0 == stor && t1 == stor => {
                if rc.len() == self.k
                    && n < self.k
                    && same_prefix(n)
                    && rc[n..].iter().all(|x| !x.checked && x.set == 0)
                {
                    return Some(Schema::SetupBranch);
                }
                if n >= 1 && rc.len() == n && same_prefix(n - 1) && lc[n - 1].checked == rc[n - 1].checked {
                    let added = rc[n - 1].set & !lc[n - 1].set;
                    if added.count_ones() == 1
                        && rc[n - 1].set & lc[n - 1].set == lc[n - 1].set
                        && added & self.weak_nexts == added
                    {
                        return Some(Schema::SetupWeakNext);
                    }
                }
                None
            }
            (Ctrl::Setup, Ctrl::Add(a)) if l.len() == 1 && rr.len() == 1 && a < nletters => Some(Schema::SetupDone),
            (Ctrl::Add(a), Ctrl::Add(b)) if a == b && t0 == stor && t1 == stor => {
                if n == 0 || rc.len() != n || !same_prefix(n - 1) || lc[n - 1].checked != rc[n - 1].checked {
                    return None;
                }
                let (old, new) = (lc[n - 1].set, rc[n - 1].set);
                if old & new != old || (new & !old).count_ones() != 1 {
                    return None;
                }
                let i = (new & !old).trailing_zeros() as usize;
                let has = |j: usize| old >> j & 1 == 1;
                let chk = lc.iter().take_while(|x| x.checked).count();
                let letter = &self.alphabet[a as usize];
                match self.kinds[i] {
                    Kind::Prop(p) if letter.has(p) => Some(Schema::AddLetter),
                    Kind::NotProp(p) if !letter.has(p) => Some(Schema::AddNotLetter),
                    Kind::Check(x) if x <= chk => Some(Schema::AddCheck),
                    Kind::NotCheck(x) if x > chk => Some(Schema::AddNotCheck),
                    Kind::True => Some(Schema::AddTrue),
                    Kind::Or(x, y) if has(x) || has(y) => Some(Schema::AddOr),
                    Kind::And(x, y) if has(x) && has(y) => Some(Schema::AddAnd),
                    Kind::Until(u) if has(u) => Some(Schema::FoldUntil),
                    Kind::Release(u) if has(u) => Some(Schema::FoldRelease),
                    _ => None,
                }
            }
            (Ctrl::Add(a), Ctrl::AddFreeze(b, f)) if a == b && t0 == stor && lc == rc && n >= 1 => {
                let x = lc[n - 1];
                match self.kinds.get(f as usize) {
                    Some(&Kind::Freeze(lvl, body)) if x.checked && lvl == n && x.set >> body & 1 == 1 => {
                        Some(Schema::FreezeMark)
                    }
                    _ => None,
                }
            }
            (Ctrl::AddFreeze(a, f), Ctrl::Add(b)) if a == b && t0 == stor && t1 == stor => (n >= 1
                && rc.len() == n
                && same_prefix(n - 1)
                && lc[n - 1].checked == rc[n - 1].checked
                && rc[n - 1].set == lc[n - 1].set | 1 << f)
                .then_some(Schema::FreezeAdd),
            (Ctrl::Add(_), Ctrl::Next1) if l.len() == 1 && rr[1..] == [tag(Tag::AuxChk)] => Some(Schema::Advance),
            (Ctrl::Add(_), Ctrl::Final)
                if t0 == stor && rr.len() == 1 && n >= 1 && lc[n - 1].set >> self.phi & 1 == 1 =>
            {
                Some(Schema::Final)
            }
            (Ctrl::Next1, Ctrl::Copy)
                if t0 == stor
                    && t1 == Some(tag(Tag::StorChk))
                    && n == self.k
                    && rc.len() == n
                    && lc
                        .iter()
                        .zip(&rc)
                        .all(|(x, y)| x.checked && !y.checked && x.set == y.set) =>
            {
                Some(Schema::Next1)
            }
            (Ctrl::Copy, Ctrl::CopyWith(f)) if t0 == Some(tag(Tag::StorChk)) && t1 == stor => {
                (n == 1 && rc.len() == 1 && !lc[0].checked && rc[0].checked && lc[0].set == f && rc[0].set == f)
                    .then_some(Schema::CopyEnterRoot)
            }
            (Ctrl::CopyWith(f), Ctrl::Copy) if t0 == Some(tag(Tag::AuxChk)) && t1 == Some(tag(Tag::Aux)) => (n == 0
                && rc.len() == 1
                && rc[0]
                    == Cell {
                        checked: true,
                        set: self.next_set(f),
                    })
            .then_some(Schema::CopyAuxRoot),
            (Ctrl::Copy, Ctrl::CopyWith(f)) if t0 == stor && t1 == stor => (n >= 2
                && rc.len() == n
                && same_prefix(n - 2)
                && lc[n - 2].checked
                && !rc[n - 2].checked
                && lc[n - 2].set == rc[n - 2].set
                && !lc[n - 1].checked
                && rc[n - 1].checked
                && lc[n - 1].set == f
                && rc[n - 1].set == f)
                .then_some(Schema::CopyDown),
            (Ctrl::CopyWith(f), Ctrl::Copy) if t0 == Some(tag(Tag::Aux)) && t1 == Some(tag(Tag::Aux)) => (n >= 1
                && rc.len() == n + 1
                && same_prefix(n - 1)
                && lc[n - 1].checked
                && rc[n - 1]
                    == Cell {
                        checked: false,
                        set: lc[n - 1].set,
                    }
                && rc[n]
                    == Cell {
                        checked: true,
                        set: self.next_set(f),
                    })
            .then_some(Schema::CopyAuxDown),
            (Ctrl::Copy, Ctrl::CopyBt) if t0 == stor && t1 == stor => (n >= 2
                && rc.len() == n - 1
                && same_prefix(n - 2)
                && !lc[n - 2].checked
                && lc[n - 1].checked
                && rc[n - 2]
                    == Cell {
                        checked: true,
                        set: lc[n - 2].set,
                    })
            .then_some(Schema::CopyBackStor),
            (Ctrl::CopyBt, Ctrl::Copy) if t0 == Some(tag(Tag::Aux)) && t1 == Some(tag(Tag::Aux)) => (n >= 2
                && rc.len() == n
                && same_prefix(n - 2)
                && !lc[n - 2].checked
                && lc[n - 1].checked
                && rc[n - 2]
                    == Cell {
                        checked: true,
                        set: lc[n - 2].set,
                    }
                && rc[n - 1]
                    == Cell {
                        checked: false,
                        set: lc[n - 1].set,
                    })
            .then_some(Schema::CopyBackAux),
            (Ctrl::Copy, Ctrl::CopyBt) if t0 == stor && t1 == Some(tag(Tag::StorChk)) => {
                (n == 1 && rc.is_empty() && lc[0].checked).then_some(Schema::CopyLeaveRoot)
            }
            (Ctrl::CopyBt, Ctrl::Copy) if t0 == Some(tag(Tag::Aux)) && t1 == Some(tag(Tag::AuxChk)) => (n == 1
                && lc[0].checked
                && rc
                    == [Cell {
                        checked: false,
                        set: lc[0].set,
                    }])
            .then_some(Schema::CopyAuxLeaveRoot),
            (Ctrl::Copy, Ctrl::CopyBt) if l.len() == 2 && t0 == Some(tag(Tag::StorChk)) && rr.len() == 1 => {
                Some(Schema::CopyDropStor)
            }
            (Ctrl::CopyBt, Ctrl::Next2)
                if l.len() == 2 && t0 == Some(tag(Tag::AuxChk)) && rr.len() == 2 && t1 == stor =>
            {
                Some(Schema::CopyFinish)
            }
            (Ctrl::Next2, Ctrl::Add(a)) if a < nletters && t0 == stor && t1 == stor => (rc.len() == self.k
                && n <= self.k
                && lc
                    .iter()
                    .zip(&rc)
                    .all(|(x, y)| !x.checked && y.checked && x.set == y.set)
                && rc[n..].iter().all(|y| y.checked && y.set == 0))
            .then_some(Schema::Next2),
            _ => None,
        }
    }

    /// Breadth-first search for `final` with the [`Saturating`] strategy,
    /// once per setup budget of 0 to 2k cells, each round with
    /// `max_configs`. Cells carry formula sets, so ⪯-subsumption between
    /// configurations almost never fires and is switched off.
    pub fn search(&self, max_configs: usize) -> CoverResult<NState> {
        let limits = CoverLimits {
            max_configs,
            max_depth: usize::MAX,
            prune: false,
        };
        let mut last = CoverResult::Exhausted;
        for budget in 0..=2 * self.k {
            let gen = Saturating {
                t: self,
                setup_cells: budget,
            };
            last = cover_with(&gen, &self.initial(), &|c| Ltl2Ncs::is_final(c), limits);
            match last {
                CoverResult::Covered(_) => return last,
                // a bounded budget may exhaust; a larger one may not
                CoverResult::Exhausted => last = CoverResult::NotCoveredWithinBounds,
                CoverResult::NotCoveredWithinBounds => {}
            }
        }
        last
    }

    /// Distinct rule instances met while exploring at most `max_configs`
    /// configurations breadth-first from the initial one.
    pub fn sample_rules(&self, max_configs: usize) -> BTreeSet<(Schema, Rule<NState>)> {
        let mut out = BTreeSet::new();
        let mut seen = HashSet::new();
        let start = self.initial();
        seen.insert(start.clone());
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for inst in self.instances(&c) {
                let d = apply_at(&c, &inst.rule, &inst.path);
                out.insert((inst.schema, inst.rule));
                if seen.len() < max_configs && seen.insert(d.clone()) {
                    queue.push_back(d);
                }
            }
        }
        out
    }
}

impl SuccessorGen<NState> for Ltl2Ncs {
    fn successors(&self, c: &Config<NState>) -> Vec<(Step<NState>, Config<NState>)> {
        let mut seen = HashSet::new();
        self.instances(c)
            .into_iter()
            .map(|i| self.apply(c, i))
            .filter(|(_, d)| seen.insert(d.clone()))
            .collect()
    }
}

/// The translation restricted to one order of its monotone steps: every
/// addable formula is added before the position is left, setup branches are
/// created before any guarantee, and the storage is copied completely.
/// Every step is a step of [`Ltl2Ncs`]. Adding formulas and cells never
/// disables a rule, so a run of the full system reaching `final` can be
/// reordered and saturated into one of these, given enough setup cells.
pub struct Saturating<'a> {
    pub t: &'a Ltl2Ncs,
    /// Unchecked cells setup may create.
    pub setup_cells: usize,
}

impl Saturating<'_> {
    fn choose(&self, c: &Config<NState>) -> Vec<Inst> {
        let t = self.t;
        let all = t.instances(c);
        let NState::Ctrl(q) = c.state else { return Vec::new() };
        let pick = |s: &[Schema]| -> Vec<Inst> { all.iter().filter(|i| s.contains(&i.schema)).cloned().collect() };
        match q {
            Ctrl::Setup => {
                let pristine = c.children.iter().all(|s| all_cells(s, &|x| x.set == 0));
                let mut out = Vec::new();
                if pristine {
                    let used = count_cells(c, &|x| !x.checked);
                    out.extend(
                        pick(&[Schema::SetupBranch])
                            .into_iter()
                            .filter(|i| used + i.rule.rhs.len() - i.rule.lhs.len() <= self.setup_cells),
                    );
                }
                match all.iter().find(|i| i.schema == Schema::SetupWeakNext) {
                    Some(i) => out.push(i.clone()),
                    None => out.extend(pick(&[Schema::SetupDone])),
                }
                out
            }
            Ctrl::Add(_) => {
                if let Some(i) = all.iter().find(|i| i.schema == Schema::Final) {
                    return vec![i.clone()];
                }
                if let Some(i) = all.iter().find(|i| i.schema.is_add()) {
                    return vec![i.clone()];
                }
                // a freeze mark only if some cell still lacks the formula
                for i in all.iter().filter(|i| i.schema == Schema::FreezeMark) {
                    let NState::Ctrl(Ctrl::AddFreeze(_, f)) = i.rule.rhs[0] else {
                        unreachable!()
                    };
                    if !c.children.iter().all(|s| all_cells(s, &|x| x.set >> f & 1 == 1)) {
                        return vec![i.clone()];
                    }
                }
                pick(&[Schema::Advance])
            }
            Ctrl::AddFreeze(..) => all
                .iter()
                .find(|i| i.rule.lhs.last() != i.rule.rhs.last())
                .or(all.first())
                .cloned()
                .into_iter()
                .collect(),
            Ctrl::Copy => {
                // descend or enter while cells remain; leave only when empty
                let fwd = all
                    .iter()
                    .find(|i| matches!(i.schema, Schema::CopyDown | Schema::CopyEnterRoot));
                let back = all.iter().find(|i| {
                    matches!(
                        i.schema,
                        Schema::CopyBackStor | Schema::CopyLeaveRoot | Schema::CopyDropStor
                    )
                });
                fwd.or(back).cloned().into_iter().collect()
            }
            _ => all,
        }
    }
}

fn count_cells(c: &Config<NState>, p: &impl Fn(&Cell) -> bool) -> usize {
    let here = matches!(&c.state, NState::Cell(x) if p(x)) as usize;
    here + c.children.iter().map(|ch| count_cells(ch, p)).sum::<usize>()
}

fn all_cells(c: &Config<NState>, p: &impl Fn(&Cell) -> bool) -> bool {
    let here = match &c.state {
        NState::Cell(x) => p(x),
        _ => true,
    };
    here && c.children.iter().all(|ch| all_cells(ch, p))
}

impl SuccessorGen<NState> for Saturating<'_> {
    fn successors(&self, c: &Config<NState>) -> Vec<(Step<NState>, Config<NState>)> {
        let mut seen = HashSet::new();
        self.choose(c)
            .into_iter()
            .map(|i| self.t.apply(c, i))
            .filter(|(_, d)| seen.insert(d.clone()))
            .collect()
    }
}
