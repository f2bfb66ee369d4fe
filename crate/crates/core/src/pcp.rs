//! Modified PCP instances and their encoding into LTL with freeze over the
//! order `x ⊑ z ⊒ y`.
//!
//! A tile sequence `(u_1,v_1)(u_2,v_2)…` is written `v̄_1 u_1 v̄_2 u_2 …`.
//! Consecutive positions of the u-part share `x` (odd to even) or `y` (even
//! to odd); `z` ties each v-position to its u-partner.

use crate::dataword::{DataValue, DataWord, Letter, Position};
use crate::logic::Formula;
use crate::order::{Attr, QuasiOrder};
use crate::sym::Sym;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcpError {
    #[error("malformed instance: {0}")]
    MalformedInstance(String),
    #[error("not a solution: {0}")]
    NotASolution(String),
    #[error("attribute `{0}` missing from the target order")]
    MissingAttribute(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tile {
    pub u: Vec<char>,
    pub v: Vec<char>,
}

impl Tile {
    pub fn new(u: &str, v: &str) -> Tile {
        Tile {
            u: u.chars().collect(),
            v: v.chars().collect(),
        }
    }
}

/// Tiles over single-character letters; tile 0 is the initial tile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PcpInstance {
    pub tiles: Vec<Tile>,
}

impl PcpInstance {
    pub fn new(tiles: Vec<Tile>) -> Result<PcpInstance, PcpError> {
        let bad = |m: String| Err(PcpError::MalformedInstance(m));
        let Some(first) = tiles.first() else {
            return bad("no tiles".into());
        };
        if first.u.len() < 2 || first.v.len() < 3 {
            return bad("the initial tile needs |u| > 1 and |v| > 2".into());
        }
        for (i, t) in tiles.iter().enumerate() {
            if t.u.is_empty() && t.v.is_empty() {
                return bad(format!("tile {} is empty", i + 1));
            }
            if let Some(c) = t.u.iter().chain(&t.v).find(|c| !c.is_alphanumeric()) {
                return bad(format!("letter `{c}` in tile {}", i + 1));
            }
        }
        Ok(PcpInstance { tiles })
    }

    /// `tile <u> <v>` lines, `-` for the empty word; `#` starts a comment.
    pub fn parse(text: &str) -> Result<PcpInstance, PcpError> {
        let mut tiles = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let word = |s: &str| {
                if s == "-" || s == "ε" {
                    String::new()
                } else {
                    s.to_string()
                }
            };
            match parts.as_slice() {
                ["tile", u, v] => tiles.push(Tile::new(&word(u), &word(v))),
                _ => {
                    return Err(PcpError::MalformedInstance(format!(
                        "line {}: expected `tile <u> <v>`",
                        ln + 1
                    )))
                }
            }
        }
        PcpInstance::new(tiles)
    }

    pub fn alphabet(&self) -> Vec<char> {
        let mut v: Vec<char> = self
            .tiles
            .iter()
            .flat_map(|t| t.u.iter().chain(&t.v))
            .copied()
            .collect();
        v.sort();
        v.dedup();
        v
    }

    fn max_len(&self) -> usize {
        self.tiles.iter().map(|t| t.u.len().max(t.v.len())).max().unwrap_or(0)
    }
}

/// u-part and v-part of a tile sequence.
pub fn parts(p: &PcpInstance, seq: &[usize]) -> (Vec<char>, Vec<char>) {
    let mut u = Vec::new();
    let mut v = Vec::new();
    for &i in seq {
        u.extend(&p.tiles[i].u);
        v.extend(&p.tiles[i].v);
    }
    (u, v)
}

/// The modified-PCP conditions: starts with the initial tile, every strict
/// prefix has a shorter u-part, both parts agree and have odd length.
pub fn validate_solution(p: &PcpInstance, seq: &[usize]) -> bool {
    if seq.first() != Some(&0) || seq.iter().any(|&i| i >= p.tiles.len()) {
        return false;
    }
    for n in 1..seq.len() {
        let (u, v) = parts(p, &seq[..n]);
        if u.len() >= v.len() {
            return false;
        }
    }
    let (u, v) = parts(p, seq);
    u == v && u.len() % 2 == 1
}

// ---------------------------------------------------------------------------
// the formula

pub const X: Attr = 0;
pub const Y: Attr = 1;
pub const Z: Attr = 2;

/// `x ⊑ z ⊒ y` with `x`, `y` incomparable.
pub fn pcp_order() -> QuasiOrder {
    QuasiOrder::close(&["x", "y", "z"], &[("x", "z"), ("y", "z")]).expect("fixed order")
}

pub fn u_letter(c: char) -> Sym {
    Sym::new(&c.to_string())
}

pub fn v_letter(c: char) -> Sym {
    Sym::new(&format!("bar_{c}"))
}

fn p(s: &str) -> Formula {
    Formula::letter(s)
}

/// The formula by its parts.
#[derive(Debug, Clone, Serialize)]
pub struct PcpFormula {
    pub tiles: Formula,
    pub chain: Formula,
    pub sync: Formula,
}

impl PcpFormula {
    pub fn formula(&self) -> Formula {
        Formula::and_all([self.tiles.clone(), self.chain.clone(), self.sync.clone()])
    }
}

/// The tile at the current position: barred v-letters, then the u-letters,
/// `end` exactly on the last one.
pub fn tile_formula(t: &Tile) -> Formula {
    let n = t.v.len();
    let m = t.u.len();
    let mut c = Vec::new();
    for (i, &a) in t.v.iter().enumerate() {
        c.push(Formula::next_n(i, Formula::Letter(v_letter(a))));
    }
    for (i, &b) in t.u.iter().enumerate() {
        c.push(Formula::next_n(n + i, Formula::Letter(u_letter(b))));
    }
    for i in 0..n + m - 1 {
        c.push(Formula::next_n(i, Formula::not(p("end"))));
    }
    c.push(Formula::next_n(n + m - 1, p("end")));
    Formula::and_all(c)
}

/// `--bounded-until`: every until is unfolded to depth `2·max|tile part|`.
pub fn build_formula(inst: &PcpInstance, bounded_until: bool) -> PcpFormula {
    let sigma: Vec<char> = inst.alphabet();
    let us = Formula::or_all(sigma.iter().map(|&c| Formula::Letter(u_letter(c))));
    let vs = Formula::or_all(sigma.iter().map(|&c| Formula::Letter(v_letter(c))));
    let depth = 2 * inst.max_len();
    let until = |a: Formula, b: Formula| {
        if bounded_until {
            let mut f = b.clone();
            for _ in 0..depth {
                f = Formula::or(b.clone(), Formula::and(a.clone(), Formula::next(f)));
            }
            f
        } else {
            Formula::until(a, b)
        }
    };
    let g = Formula::globally;
    let f = Formula::finally;
    let x = |a| Formula::next(a);
    let not = Formula::not;
    let and = Formula::and;
    let imp = Formula::implies;
    let (o, e) = (p("o"), p("e"));
    let t_hat = &inst.tiles[0];

    // global structure
    let chain = Formula::and(
        tile_formula(t_hat),
        g(imp(
            p("end"),
            Formula::weak_next(Formula::or_all(inst.tiles.iter().map(tile_formula))),
        )),
    );
    let base = Formula::and_all([
        g(Formula::and(
            imp(e.clone(), not(o.clone())),
            imp(not(o.clone()), e.clone()),
        )),
        o.clone(),
        Formula::next_n(t_hat.v.len(), o.clone()),
    ]);
    let alternate = |part: &Formula| {
        let step = |from: &Formula, to: &Formula| {
            g(imp(
                and(part.clone(), from.clone()),
                Formula::weak_next(Formula::or(
                    until(not(part.clone()), and(part.clone(), to.clone())),
                    g(not(part.clone())),
                )),
            ))
        };
        and(step(&o, &e), step(&e, &o))
    };
    let tiles = Formula::and_all([chain, base, alternate(&us), alternate(&vs)]);

    // chaining
    let twice = |part: &Formula, a: Attr, b: Attr| {
        g(imp(
            part.clone(),
            Formula::freeze(
                a,
                and(
                    not(f(Formula::Check(b))),
                    not(x(f(Formula::and_all([
                        part.clone(),
                        Formula::Check(a),
                        x(f(and(part.clone(), Formula::Check(a)))),
                    ])))),
                ),
            ),
        ))
    };
    let repeat = |part: &Formula| {
        let odd_case = imp(
            Formula::and_all([part.clone(), o.clone(), x(f(part.clone()))]),
            and(
                Formula::freeze(X, f(Formula::and_all([Formula::Check(X), part.clone(), e.clone()]))),
                not(Formula::freeze(Y, x(f(and(Formula::Check(Y), part.clone()))))),
            ),
        );
        let even_case = imp(
            and(part.clone(), e.clone()),
            and(
                Formula::freeze(Y, f(Formula::and_all([Formula::Check(Y), part.clone(), o.clone()]))),
                not(Formula::freeze(X, x(f(and(Formula::Check(X), part.clone()))))),
            ),
        );
        g(and(odd_case, even_case))
    };
    let chain = Formula::and_all([
        twice(&us, X, Y),
        twice(&us, Y, X),
        repeat(&us),
        twice(&vs, X, Y),
        twice(&vs, Y, X),
        repeat(&vs),
    ]);

    // synchronisation
    let init = Formula::freeze(Z, Formula::next_n(t_hat.v.len(), Formula::Check(Z)));
    let matches = Formula::and_all(sigma.iter().map(|&c| {
        g(imp(
            Formula::Letter(v_letter(c)),
            Formula::freeze(Z, x(f(and(Formula::Letter(u_letter(c)), Formula::Check(Z))))),
        ))
    }));
    let last = g(imp(
        and(vs.clone(), not(x(f(vs.clone())))),
        Formula::freeze(Z, x(f(and(Formula::Check(Z), not(x(Formula::True)))))),
    ));
    let sync = Formula::and_all([init, matches, last]);

    PcpFormula { tiles, chain, sync }
}

// ---------------------------------------------------------------------------
// witnesses

/// Values of the i-th (1-based) position of either part.
fn values(i: usize) -> Vec<DataValue> {
    let i = i as DataValue;
    vec![2 * i.div_ceil(2), 2 * (i / 2) + 1, 10 * i]
}

/// Any tile sequence in the value scheme of the witnesses: the i-th
/// position of each part carries `x = 2⌈i/2⌉`, `y = 2⌊i/2⌋+1`, `z = 10i`.
pub fn encode_sequence(p: &PcpInstance, seq: &[usize]) -> DataWord {
    let mut out = Vec::new();
    let (mut nu, mut nv) = (0, 0);
    for &t in seq {
        let tile = &p.tiles[t];
        let total = tile.v.len() + tile.u.len();
        let mut k = 0;
        for (bar, &c) in tile
            .v
            .iter()
            .map(|c| (true, c))
            .chain(tile.u.iter().map(|c| (false, c)))
        {
            k += 1;
            let i = if bar {
                nv += 1;
                nv
            } else {
                nu += 1;
                nu
            };
            let mut props = vec![if bar { v_letter(c) } else { u_letter(c) }];
            props.push(Sym::new(if i % 2 == 1 { "o" } else { "e" }));
            if k == total {
                props.push(Sym::new("end"));
            }
            out.push(Position {
                letter: Letter::set(props),
                val: values(i),
            });
        }
    }
    DataWord { positions: out }
}

pub fn encode_solution(p: &PcpInstance, seq: &[usize]) -> Result<DataWord, PcpError> {
    if !validate_solution(p, seq) {
        let (u, v) = parts(p, seq);
        return Err(PcpError::NotASolution(format!(
            "u = {}, v = {}",
            u.iter().collect::<String>(),
            v.iter().collect::<String>()
        )));
    }
    Ok(encode_sequence(p, seq))
}

/// Carry a word over `x ⊑ z ⊒ y` into a larger order containing attributes
/// of the same names; every other attribute holds one value not used
/// elsewhere.
pub fn lift_to_order(w: &DataWord, from: &QuasiOrder, to: &QuasiOrder) -> Result<DataWord, PcpError> {
    let map: Vec<Option<Attr>> = to.attrs().map(|a| from.attr(to.name(a)).ok()).collect();
    for name in from.names() {
        if to.attr(name).is_err() {
            return Err(PcpError::MissingAttribute(name.clone()));
        }
    }
    let fresh = w
        .positions
        .iter()
        .flat_map(|p| p.val.iter())
        .max()
        .copied()
        .unwrap_or(0)
        + 1;
    let positions = w
        .positions
        .iter()
        .map(|p| Position {
            letter: p.letter.clone(),
            val: map.iter().map(|m| m.map_or(fresh, |a| p.val[a])).collect(),
        })
        .collect();
    Ok(DataWord { positions })
}

/// The formula over a larger order, attributes matched by name.
pub fn lift_formula(f: &Formula, from: &QuasiOrder, to: &QuasiOrder) -> Result<Formula, PcpError> {
    let mut map = Vec::new();
    for name in from.names() {
        map.push(to.attr(name).map_err(|_| PcpError::MissingAttribute(name.clone()))?);
    }
    Ok(f.map_attrs(&|a| map[a]))
}
