//! Ordinals below ε₀ in Cantor normal form, fundamental sequences, the
//! Hardy hierarchy, the copy/minimum macros, and NCS gadgets that run
//! Hardy computations forwards and backwards.

use crate::ncs::{Config, Ncs, Rule};
use crate::sym::Sym;
use serde::Serialize;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("{0} is not a limit ordinal")]
    NotLimit(String),
    #[error("fuel exhausted after {0} increments")]
    FuelExhausted(u64),
    #[error("ordinal syntax: {0}")]
    Syntax(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("minsky machine: {0}")]
    Machine(String),
}

/// `ω^{e₁} + … + ω^{eₖ}` with `e₁ ≥ … ≥ eₖ`; no terms is zero.
/// The derived order is the ordinal order: exponents compare
/// lexicographically and a proper prefix is smaller.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Ordinal {
    terms: Vec<Ordinal>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal::default()
    }

    pub fn nat(n: u64) -> Self {
        Ordinal {
            terms: vec![Ordinal::zero(); n as usize],
        }
    }

    pub fn omega() -> Self {
        Ordinal::omega_pow(Ordinal::nat(1))
    }

    pub fn omega_pow(e: Ordinal) -> Self {
        Ordinal { terms: vec![e] }
    }

    /// Build from exponents in any order; sorted into normal form, which
    /// amounts to the natural (commutative) sum of the terms.
    pub fn from_terms(mut terms: Vec<Ordinal>) -> Self {
        terms.sort_by(|a, b| b.cmp(a));
        Ordinal { terms }
    }

    pub fn terms(&self) -> &[Ordinal] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_limit(&self) -> bool {
        self.terms.last().is_some_and(|e| !e.is_zero())
    }

    /// The natural number this ordinal equals, if finite.
    pub fn as_nat(&self) -> Option<u64> {
        self.terms
            .iter()
            .all(|e| e.is_zero())
            .then_some(self.terms.len() as u64)
    }

    /// Ordinal addition: terms of `self` below the leading term of `b`
    /// are absorbed.
    pub fn add(&self, b: &Ordinal) -> Ordinal {
        let Some(lead) = b.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<Ordinal> = self.terms.iter().take_while(|e| *e >= lead).cloned().collect();
        terms.extend(b.terms.iter().cloned());
        Ordinal { terms }
    }

    pub fn mul_nat(&self, n: u64) -> Ordinal {
        (0..n).fold(Ordinal::zero(), |acc, _| acc.add(self))
    }

    /// `λ_n`.
    pub fn fs(&self, n: u64) -> Result<Ordinal, HierarchyError> {
        let Some(last) = self.terms.last() else {
            return Err(HierarchyError::NotLimit(self.to_string()));
        };
        if last.is_zero() {
            return Err(HierarchyError::NotLimit(self.to_string()));
        }
        let mut terms = self.terms[..self.terms.len() - 1].to_vec();
        if last.is_limit() {
            terms.push(last.fs(n)?);
        } else {
            let mut pred = last.clone();
            pred.terms.pop();
            terms.extend(std::iter::repeat_n(pred, n as usize));
        }
        Ok(Ordinal { terms })
    }

    /// Nesting height of the exponent tower (0 for finite ordinals).
    pub fn height(&self) -> usize {
        self.terms
            .iter()
            .map(|e| if e.is_zero() { 0 } else { 1 + e.height() })
            .max()
            .unwrap_or(0)
    }

    /// `Ω_n`: ω, ω^ω, ω^{ω^ω}, …
    pub fn tower(n: usize) -> Ordinal {
        (1..n).fold(Ordinal::omega(), |a, _| Ordinal::omega_pow(a))
    }

    /// Structural embedding ⊑: an injection of terms into terms of `b`
    /// with exponents embedded recursively. Coincides with ⪯ on the
    /// multiset encodings.
    pub fn embeds(&self, b: &Ordinal) -> bool {
        let enc = |o: &Ordinal| Config::new(Sym::new("s"), encode_ordinal(o));
        crate::ncs::leq(&enc(self), &enc(b))
    }

    pub fn parse(text: &str) -> Result<Ordinal, HierarchyError> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = OrdParser { s: &chars, at: 0 };
        let o = p.sum()?;
        if p.at != chars.len() {
            return Err(HierarchyError::Syntax(format!("trailing input in `{text}`")));
        }
        Ok(o)
    }
}

struct OrdParser<'a> {
    s: &'a [char],
    at: usize,
}

impl OrdParser<'_> {
    fn peek(&self) -> Option<char> {
        self.s.get(self.at).copied()
    }

    fn nat(&mut self) -> Option<u64> {
        let start = self.at;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.at += 1;
        }
        (start < self.at).then(|| self.s[start..self.at].iter().collect::<String>().parse().ok())?
    }

    fn sum(&mut self) -> Result<Ordinal, HierarchyError> {
        let mut acc = self.prod()?;
        while self.peek() == Some('+') {
            self.at += 1;
            acc = acc.add(&self.prod()?);
        }
        Ok(acc)
    }

    fn prod(&mut self) -> Result<Ordinal, HierarchyError> {
        let a = self.atom()?;
        if self.peek() == Some('*') {
            self.at += 1;
            let n = self
                .nat()
                .ok_or_else(|| HierarchyError::Syntax(format!("expected a natural number at {}", self.at)))?;
            return Ok(a.mul_nat(n));
        }
        Ok(a)
    }

    fn atom(&mut self) -> Result<Ordinal, HierarchyError> {
        match self.peek() {
            Some('w') | Some('ω') => {
                self.at += 1;
                if self.peek() == Some('^') {
                    self.at += 1;
                    Ok(Ordinal::omega_pow(self.atom()?))
                } else {
                    Ok(Ordinal::omega())
                }
            }
            Some('(') => {
                self.at += 1;
                let o = self.sum()?;
                if self.peek() != Some(')') {
                    return Err(HierarchyError::Syntax(format!("expected `)` at {}", self.at)));
                }
                self.at += 1;
                Ok(o)
            }
            Some(c) if c.is_ascii_digit() => Ok(Ordinal::nat(self.nat().unwrap())),
            _ => Err(HierarchyError::Syntax(format!("unexpected input at {}", self.at))),
        }
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.terms.len() {
            let e = &self.terms[i];
            let mut j = i;
            while j < self.terms.len() && self.terms[j] == *e {
                j += 1;
            }
            let count = j - i;
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if e.is_zero() {
                write!(f, "{count}")?;
            } else {
                match e.as_nat() {
                    Some(1) => f.write_str("w")?,
                    Some(n) => write!(f, "w^{n}")?,
                    None if e.terms.len() == 1 && e.terms[0].as_nat() == Some(1) => f.write_str("w^w")?,
                    None => write!(f, "w^({e})")?,
                }
                if count > 1 {
                    write!(f, "*{count}")?;
                }
            }
            i = j;
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Ordinal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `H^α(n)`, giving up after `fuel` increments.
pub fn hardy(alpha: &Ordinal, n: u64, fuel: u64) -> Result<u64, HierarchyError> {
    // the term list is used as a stack, rewriting only its last entry
    let mut terms = alpha.terms.clone();
    let mut n = n;
    let mut used = 0;
    while let Some(last) = terms.pop() {
        if last.is_zero() {
            if used == fuel {
                return Err(HierarchyError::FuelExhausted(used));
            }
            used += 1;
            n += 1;
        } else if last.is_limit() {
            terms.push(last.fs(n)?);
        } else {
            let mut pred = last;
            pred.terms.pop();
            // every term left on the stack costs at least one increment
            if used + terms.len() as u64 + n > fuel {
                return Err(HierarchyError::FuelExhausted(fuel));
            }
            terms.extend(std::iter::repeat_n(pred, n as usize));
        }
    }
    Ok(n)
}

// ---------------------------------------------------------------------------
// encodings

/// State names used by the encodings and gadgets.
pub mod names {
    pub const MAIN: &str = "main";
    pub const S: &str = "s";
    pub const C: &str = "c";
    pub const ONE: &str = "1";
    pub const OMEGA: &str = "w";
}

/// `M_α`: one `w(M_β)` per term `ω^β`.
pub fn encode_ordinal(alpha: &Ordinal) -> Vec<Config> {
    alpha
        .terms
        .iter()
        .map(|e| Config::new(Sym::new(names::OMEGA), encode_ordinal(e)))
        .collect()
}

pub fn decode_ordinal(m: &[Config]) -> Option<Ordinal> {
    let terms = m
        .iter()
        .map(|c| {
            (c.state.as_str() == names::OMEGA)
                .then(|| decode_ordinal(&c.children))
                .flatten()
        })
        .collect::<Option<Vec<_>>>()?;
    Some(Ordinal::from_terms(terms))
}

fn units(n: u64) -> Vec<Config> {
    vec![Config::leaf(Sym::new(names::ONE)); n as usize]
}

/// `C_{α,n} = main(s(M_α) + c(1 + … + 1))`.
pub fn hardy_config(alpha: &Ordinal, n: u64) -> Config {
    hardy_config_at(names::MAIN, alpha, n)
}

fn hardy_config_at(root: &str, alpha: &Ordinal, n: u64) -> Config {
    Config::new(
        Sym::new(root),
        vec![
            Config::new(Sym::new(names::S), encode_ordinal(alpha)),
            Config::new(Sym::new(names::C), units(n)),
        ],
    )
}

/// Split `root(s(…) + c(1+…+1))` into its two multisets.
fn split_config<'a>(c: &'a Config, root: &str) -> Option<(&'a [Config], u64)> {
    if c.state.as_str() != root || c.children.len() != 2 {
        return None;
    }
    let (s, cnt) = (&c.children[1], &c.children[0]);
    if cnt.state.as_str() != names::C || s.state.as_str() != names::S {
        return None;
    }
    if !cnt
        .children
        .iter()
        .all(|u| u.state.as_str() == names::ONE && u.children.is_empty())
    {
        return None;
    }
    Some((&s.children, cnt.children.len() as u64))
}

pub fn decode_hardy_config(c: &Config) -> Option<(Ordinal, u64)> {
    let (m, n) = split_config(c, names::MAIN)?;
    Some((decode_ordinal(m)?, n))
}

/// Name of the level-(k−1) state standing for `w(1 + … + 1)` with `i` units.
pub fn omega_state(i: usize) -> Sym {
    Sym::new(&format!("w{i}"))
}

/// Terms `ω^i` with `i ≤ l` as bare states `w0 … wl`, saving one level.
pub fn flat_encode_ordinal(alpha: &Ordinal, l: usize) -> Option<Vec<Config>> {
    alpha
        .terms
        .iter()
        .map(|e| match e.as_nat() {
            Some(i) if i as usize <= l => Some(Config::leaf(omega_state(i as usize))),
            _ => None,
        })
        .collect()
}

pub fn flat_decode_ordinal(m: &[Config]) -> Option<Ordinal> {
    let terms = m
        .iter()
        .map(|c| {
            let i: u64 = c.state.as_str().strip_prefix('w')?.parse().ok()?;
            c.children.is_empty().then(|| Ordinal::nat(i))
        })
        .collect::<Option<Vec<_>>>()?;
    Some(Ordinal::from_terms(terms))
}

/// Flattened `C_{α,n}` for the gadget of [`build_hardy_ncs`].
pub fn flat_hardy_config(alpha: &Ordinal, n: u64, l: usize) -> Option<Config> {
    flat_hardy_config_at(names::MAIN, alpha, n, l)
}

fn flat_hardy_config_at(root: &str, alpha: &Ordinal, n: u64, l: usize) -> Option<Config> {
    Some(Config::new(
        Sym::new(root),
        vec![
            Config::new(Sym::new(names::S), flat_encode_ordinal(alpha, l)?),
            Config::new(Sym::new(names::C), units(n)),
        ],
    ))
}

pub fn flat_decode_hardy_config(c: &Config) -> Option<(Ordinal, u64)> {
    flat_decode_at(c, names::MAIN)
}

fn flat_decode_at(c: &Config, root: &str) -> Option<(Ordinal, u64)> {
    let (m, n) = split_config(c, root)?;
    Some((flat_decode_ordinal(m)?, n))
}

/// Replace every flat `wi` leaf by `w(w + … + w)`.
pub fn unflatten(c: &Config) -> Config {
    if let Some(i) = c.state.as_str().strip_prefix('w').and_then(|t| t.parse::<usize>().ok()) {
        if c.children.is_empty() {
            return Config::new(Sym::new(names::OMEGA), vec![Config::leaf(Sym::new(names::OMEGA)); i]);
        }
    }
    Config::new(c.state, c.children.iter().map(unflatten).collect())
}

// ---------------------------------------------------------------------------
// copy and minimum macros

fn tagged(kind: &str, tag: &str, q: Option<Sym>) -> Sym {
    match q {
        Some(q) => Sym::new(&format!("{kind}[{tag}|{q}]")),
        None => Sym::new(&format!("{kind}[{tag}]")),
    }
}

fn cat(parts: &[&[Sym]]) -> Vec<Sym> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// All tuples of length `m` over `alphabet`.
fn tuples(alphabet: &[Sym], m: usize) -> Vec<Vec<Sym>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|t| {
                alphabet.iter().map(move |&a| {
                    let mut t = t.clone();
                    t.push(a);
                    t
                })
            })
            .collect();
    }
    out
}

fn macro_shape(lhs: &[Sym], rhs: &[Sym], k: usize) -> Result<usize, HierarchyError> {
    let l = lhs.len();
    if l < 2 || rhs.len() != l || l > k + 1 {
        return Err(HierarchyError::Unsupported(format!(
            "macro tuples need equal length between 2 and {}",
            k + 1
        )));
    }
    Ok(l)
}

/// Rules implementing `(q₁…q_l) cp (q₁'…q_l')` in a k-NCS: the multiset
/// under the node reached by `q₂…q_l` is copied depth first, with markers
/// `i[t]` (source), `o1[t]` and `o2[t]` (copies); the source is consumed
/// and the first copy takes its place. `states` ranges over every label
/// that may occur inside the copied multiset.
pub fn expand_cp(tag: &str, lhs: &[Sym], rhs: &[Sym], states: &[Sym], k: usize) -> Result<Vec<Rule>, HierarchyError> {
    let l = macro_shape(lhs, rhs, k)?;
    let (i, o1, o2) = (tagged("i", tag, None), tagged("o1", tag, None), tagged("o2", tag, None));
    let st = |kind: &str, q: Sym| tagged(kind, tag, Some(q));
    let mid = &lhs[1..l - 1];
    let mid2 = &rhs[1..l - 1];
    let mut rules = vec![Rule::new(lhs.to_vec(), cat(&[&[st("cpi", lhs[l - 1])], mid, &[i]]))];
    for &q in states {
        rules.push(Rule::new(
            cat(&[&[st("cpi", q)], mid]),
            cat(&[&[st("cpi'", q)], mid, &[o1]]),
        ));
        rules.push(Rule::new(
            cat(&[&[st("cpi'", q)], mid2]),
            cat(&[&[st("cp", q)], mid2, &[o2]]),
        ));
        for m in 0..=k - l {
            for r in tuples(states, m) {
                rules.push(Rule::new(
                    cat(&[&[st("cp", q)], mid, &r, &[o1]]),
                    cat(&[&[st("cpd", q)], mid, &r, &[q, o1]]),
                ));
                rules.push(Rule::new(
                    cat(&[&[st("cpd", q)], mid2, &r, &[o2]]),
                    cat(&[&[st("cpd'", q)], mid2, &r, &[q, o2]]),
                ));
                for &r1 in states {
                    rules.push(Rule::new(
                        cat(&[&[st("cpd'", q)], mid, &r, &[i, r1]]),
                        cat(&[&[st("cp", r1)], mid, &r, &[q, i]]),
                    ));
                    rules.push(Rule::new(
                        cat(&[&[st("cp", q)], mid, &r, &[r1, o1]]),
                        cat(&[&[st("cpu", q)], mid, &r, &[o1, q]]),
                    ));
                    rules.push(Rule::new(
                        cat(&[&[st("cpu", q)], mid2, &r, &[r1, o2]]),
                        cat(&[&[st("cpu'", q)], mid2, &r, &[o2, q]]),
                    ));
                    rules.push(Rule::new(
                        cat(&[&[st("cpu'", q)], mid, &r, &[r1, i]]),
                        cat(&[&[st("cp", r1)], mid, &r, &[i]]),
                    ));
                }
            }
        }
        rules.push(Rule::new(
            cat(&[&[st("cp", q)], mid, &[i]]),
            cat(&[&[tagged("cpf", tag, None)], mid]),
        ));
    }
    rules.push(Rule::new(
        cat(&[&[tagged("cpf", tag, None)], mid, &[o1]]),
        cat(&[&[tagged("cpf'", tag, None)], mid, &[lhs[l - 1]]]),
    ));
    rules.push(Rule::new(
        cat(&[&[tagged("cpf'", tag, None)], mid2, &[o2]]),
        rhs.to_vec(),
    ));
    Ok(dedup(rules))
}

/// Rules implementing `(q₁…q_l) min (q₁'…q_l')`: both marked multisets
/// (`i1[t]`, `i2[t]`) are consumed while a common part is built under
/// `o[t]`, which finally becomes `q_l'`.
pub fn expand_min(tag: &str, lhs: &[Sym], rhs: &[Sym], states: &[Sym], k: usize) -> Result<Vec<Rule>, HierarchyError> {
    let l = macro_shape(lhs, rhs, k)?;
    let (i1, i2, o) = (tagged("i1", tag, None), tagged("i2", tag, None), tagged("o", tag, None));
    let st = |kind: &str, q: Sym| tagged(kind, tag, Some(q));
    let mid = &lhs[1..l - 1];
    let mid2 = &rhs[1..l - 1];
    let mut rules = vec![Rule::new(lhs.to_vec(), cat(&[&[st("mini", lhs[l - 1])], mid, &[i1]]))];
    for &q in states {
        rules.push(Rule::new(
            cat(&[&[st("mini", q)], &rhs[1..]]),
            cat(&[&[st("mini'", q)], mid2, &[i2]]),
        ));
        rules.push(Rule::new(
            cat(&[&[st("mini'", q)], mid2]),
            cat(&[&[st("min", q)], mid2, &[o]]),
        ));
        for m in 0..=k - l {
            for r in tuples(states, m) {
                rules.push(Rule::new(
                    cat(&[&[st("min", q)], mid2, &r, &[o]]),
                    cat(&[&[st("mind", q)], mid2, &r, &[q, o]]),
                ));
                rules.push(Rule::new(
                    cat(&[&[st("mind'", q)], mid2, &r, &[i2, q]]),
                    cat(&[&[st("min", q)], mid2, &r, &[q, i2]]),
                ));
                for &r1 in states {
                    rules.push(Rule::new(
                        cat(&[&[st("mind", q)], mid, &r, &[i1, r1]]),
                        cat(&[&[st("mind'", r1)], mid, &r, &[q, i1]]),
                    ));
                    rules.push(Rule::new(
                        cat(&[&[st("min", q)], mid2, &r, &[r1, o]]),
                        cat(&[&[st("minu", q)], mid2, &r, &[o, q]]),
                    ));
                    rules.push(Rule::new(
                        cat(&[&[st("minu", q)], mid, &r, &[r1, i1]]),
                        cat(&[&[st("minu'", r1)], mid, &r, &[i1]]),
                    ));
                    // the parent of i2 carries whatever label the descent gave it
                    rules.push(Rule::new(
                        cat(&[&[st("minu'", q)], mid2, &r, &[r1, i2]]),
                        cat(&[&[st("min", q)], mid2, &r, &[i2]]),
                    ));
                }
            }
        }
        rules.push(Rule::new(
            cat(&[&[st("min", q)], mid, &[i1]]),
            cat(&[&[tagged("minf", tag, None)], mid]),
        ));
    }
    rules.push(Rule::new(
        cat(&[&[tagged("minf", tag, None)], mid2, &[i2]]),
        cat(&[&[tagged("minf'", tag, None)], mid2]),
    ));
    rules.push(Rule::new(
        cat(&[&[tagged("minf'", tag, None)], mid2, &[o]]),
        rhs.to_vec(),
    ));
    Ok(dedup(rules))
}

fn dedup(mut rules: Vec<Rule>) -> Vec<Rule> {
    let mut seen = std::collections::HashSet::new();
    rules.retain(|r| seen.insert(r.clone()));
    rules
}

// ---------------------------------------------------------------------------
// Hardy gadget

struct Gadget<'a> {
    l: usize,
    suffix: &'a str,
    rules: Vec<Rule>,
    controls: Vec<Sym>,
}

impl Gadget<'_> {
    fn ctl(&mut self, name: &str) -> Sym {
        let s = Sym::new(&format!("{name}{}", self.suffix));
        if !self.controls.contains(&s) {
            self.controls.push(s);
        }
        s
    }

    fn rule(&mut self, lhs: Vec<Sym>, rhs: Vec<Sym>) {
        self.rules.push(Rule::new(lhs, rhs));
    }

    /// From `from`, move every term `ω^j` with `j ≥ i` into a fresh `s`,
    /// drop what is left, and continue in `to`.
    fn keep_from(&mut self, tag: &str, i: usize, from: Sym, to: Sym) {
        let (s, s_new) = (Sym::new(names::S), Sym::new("s_new"));
        let loop_ = self.ctl(&format!("{tag}r{i}"));
        let done = self.ctl(&format!("{tag}u{i}"));
        self.rule(vec![from], vec![loop_, s_new]);
        for j in i..=self.l {
            let mv = self.ctl(&format!("{tag}t{i}_{j}"));
            self.rule(vec![loop_, s, omega_state(j)], vec![mv, s]);
            self.rule(vec![mv, s_new], vec![loop_, s_new, omega_state(j)]);
        }
        self.rule(vec![loop_, s], vec![done]);
        self.rule(vec![done, s_new], vec![to, s]);
    }
}

fn gadget_rules(l: usize, suffix: &str) -> (Vec<Rule>, Vec<Sym>) {
    let mut g = Gadget {
        l,
        suffix,
        rules: Vec::new(),
        controls: Vec::new(),
    };
    let (s, c, one, c_new) = (
        Sym::new(names::S),
        Sym::new(names::C),
        Sym::new(names::ONE),
        Sym::new("c_new"),
    );
    let main = g.ctl(names::MAIN);
    let w0 = omega_state(0);

    // α+1, n  →  α, n+1
    let r1 = g.ctl("R1");
    g.rule(vec![main, s, w0], vec![r1, s]);
    g.rule(vec![r1, c], vec![main, c, one]);
    // α, n+1  →  α+1, n
    let r2 = g.ctl("R2");
    g.rule(vec![main, c, one], vec![r2, c]);
    g.rule(vec![r2, s], vec![main, s, w0]);

    for i in 1..=l {
        let (wi, wp) = (omega_state(i), omega_state(i - 1));
        // α + ω^i, n  →  α + ω^{i-1}·n, n
        let pick = g.ctl(&format!("R3p{i}"));
        g.keep_from("R3", i, main, pick);
        let start = g.ctl(&format!("R3_{i}"));
        let lp = g.ctl(&format!("R3l{i}"));
        let (m1, m2, x) = (
            g.ctl(&format!("R3m{i}")),
            g.ctl(&format!("R3n{i}")),
            g.ctl(&format!("R3x{i}")),
        );
        g.rule(vec![pick, s, wi], vec![start, s]);
        g.rule(vec![start], vec![lp, c_new]);
        g.rule(vec![lp, c, one], vec![m1, c]);
        g.rule(vec![m1, c_new], vec![m2, c_new, one]);
        g.rule(vec![m2, s], vec![lp, s, wp]);
        g.rule(vec![lp, c], vec![x]);
        g.rule(vec![x, c_new], vec![main, c]);

        // α + ω^{i-1}·n, n  →  α + ω^i, n, merging at least one copy
        let start = g.ctl(&format!("R4_{i}"));
        let (a, b, lp) = (
            g.ctl(&format!("R4a{i}")),
            g.ctl(&format!("R4b{i}")),
            g.ctl(&format!("R4l{i}")),
        );
        let (x, y, z) = (
            g.ctl(&format!("R4x{i}")),
            g.ctl(&format!("R4y{i}")),
            g.ctl(&format!("R4z{i}")),
        );
        g.rule(vec![main], vec![start, c_new]);
        g.rule(vec![start, s, wp], vec![a, s]);
        g.rule(vec![lp, s, wp], vec![a, s]);
        g.rule(vec![a, c, one], vec![b, c]);
        g.rule(vec![b, c_new], vec![lp, c_new, one]);
        g.rule(vec![lp, c], vec![x]);
        g.rule(vec![x, c_new], vec![y, c]);
        g.rule(vec![y, s], vec![z, s, wi]);
        g.keep_from("R4", i, z, main);
    }
    (dedup(g.rules), g.controls)
}

fn gadget_labels(l: usize) -> Vec<Sym> {
    let mut v: Vec<Sym> = [names::S, names::C, names::ONE, "s_new", "c_new"]
        .iter()
        .map(|s| Sym::new(s))
        .collect();
    v.extend((0..=l).map(omega_state));
    v
}

/// A 2-NCS running Hardy computations on flattened configurations
/// `main(s(w_{i₁} + …) + c(1 + … + 1))` for ordinals below `ω^{l+1}`.
/// From `C_{α,n}` it can reach `C_{α',n'}` only if
/// `H^{α'}(n') ≤ H^α(n)`, and it can run every exact forward step.
///
/// Only `k = 2` is supported: with deeper exponents the flat form no
/// longer applies and terms cannot be told apart without zero tests.
pub fn build_hardy_ncs(k: usize, l: usize) -> Result<Ncs, HierarchyError> {
    if k != 2 {
        return Err(HierarchyError::Unsupported(format!(
            "Hardy gadget for k = {k}; only ordinals below ω^ω (k = 2) are handled"
        )));
    }
    let (rules, mut states) = gadget_rules(l, "");
    states.extend(gadget_labels(l));
    Ok(Ncs { k: 2, states, rules })
}

// ---------------------------------------------------------------------------
// Minsky machines

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CounterOp {
    Inc(usize),
    Dec(usize),
    Zero(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MinskyTransition {
    pub from: String,
    pub op: CounterOp,
    pub to: String,
}

/// Two-counter machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MinskyMachine {
    pub states: Vec<String>,
    pub transitions: Vec<MinskyTransition>,
    pub initial: String,
    pub final_state: String,
}

impl MinskyMachine {
    /// `|m|`: states plus transitions.
    pub fn size(&self) -> usize {
        self.states.len() + self.transitions.len()
    }

    /// `states …`, `initial q`, `final q`, `inc|dec|zero <0|1> p q`.
    pub fn parse(text: &str) -> Result<MinskyMachine, HierarchyError> {
        let mut m = MinskyMachine {
            states: Vec::new(),
            transitions: Vec::new(),
            initial: String::new(),
            final_state: String::new(),
        };
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| HierarchyError::Machine(format!("line {}: {msg}", ln + 1));
            let words: Vec<&str> = line.split_whitespace().collect();
            match words[0] {
                "states" => m.states.extend(words[1..].iter().map(|s| s.to_string())),
                "initial" if words.len() == 2 => m.initial = words[1].into(),
                "final" if words.len() == 2 => m.final_state = words[1].into(),
                op @ ("inc" | "dec" | "zero") if words.len() == 4 => {
                    let ctr: usize = words[1].parse().map_err(|_| err("bad counter"))?;
                    if ctr > 1 {
                        return Err(err("counters are 0 and 1"));
                    }
                    let op = match op {
                        "inc" => CounterOp::Inc(ctr),
                        "dec" => CounterOp::Dec(ctr),
                        _ => CounterOp::Zero(ctr),
                    };
                    m.transitions.push(MinskyTransition {
                        from: words[2].into(),
                        op,
                        to: words[3].into(),
                    });
                }
                _ => return Err(err("unrecognised line")),
            }
        }
        let known = |s: &str| m.states.iter().any(|t| t == s);
        if !known(&m.initial) || !known(&m.final_state) {
            return Err(HierarchyError::Machine(
                "initial and final must be declared states".into(),
            ));
        }
        if let Some(t) = m.transitions.iter().find(|t| !known(&t.from) || !known(&t.to)) {
            return Err(HierarchyError::Machine(format!(
                "undeclared state in {} -> {}",
                t.from, t.to
            )));
        }
        Ok(m)
    }

    /// Does some run reach the final state while the counter sum stays
    /// within `budget`?
    pub fn halts_within(&self, budget: u64) -> bool {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![(self.initial.clone(), 0u64, 0u64)];
        while let Some((q, a, b)) = stack.pop() {
            if q == self.final_state {
                return true;
            }
            if !seen.insert((q.clone(), a, b)) {
                continue;
            }
            for t in self.transitions.iter().filter(|t| t.from == q) {
                let next = match t.op {
                    CounterOp::Inc(0) if a + b < budget => Some((a + 1, b)),
                    CounterOp::Inc(1) if a + b < budget => Some((a, b + 1)),
                    CounterOp::Dec(0) if a > 0 => Some((a - 1, b)),
                    CounterOp::Dec(1) if b > 0 => Some((a, b - 1)),
                    CounterOp::Zero(0) if a == 0 => Some((a, b)),
                    CounterOp::Zero(1) if b == 0 => Some((a, b)),
                    _ => None,
                };
                if let Some((a, b)) = next {
                    stack.push((t.to.clone(), a, b));
                }
            }
        }
        false
    }
}

/// NCS simulating `m` with budget `H^α(|m|)`: the Hardy gadget computes
/// the budget forwards, the machine runs on counters `x0`, `x1` drawing on
/// the budget (zero tests become resets), and a primed copy of the gadget
/// computes backwards. The target `main'(s(M_α) + c(1 + … + 1))` is
/// coverable iff the machine halts within the budget.
pub fn build_minsky_ncs(m: &MinskyMachine, alpha: &Ordinal) -> Result<(Ncs, Config, Config), HierarchyError> {
    let l = alpha
        .terms
        .iter()
        .map(|e| e.as_nat().map(|n| n as usize))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| HierarchyError::Unsupported(format!("{alpha} is not below ω^ω")))?
        .into_iter()
        .max()
        .unwrap_or(0);
    let size = m.size() as u64;
    let (mut rules, mut states) = gadget_rules(l, "");
    let (back, back_states) = gadget_rules(l, "'");
    rules.extend(back);
    states.extend(back_states);
    states.extend(gadget_labels(l));
    let sym = Sym::new;
    let (s, c, one) = (sym(names::S), sym(names::C), sym(names::ONE));
    let x = [sym("x0"), sym("x1")];
    let qs = |q: &str| sym(&format!("M[{q}]"));
    let mut extra = Vec::new();
    let mut rule = |lhs: Vec<Sym>, rhs: Vec<Sym>| rules.push(Rule::new(lhs, rhs));

    let (go, go2) = (sym("go"), sym("go2"));
    extra.extend([go, go2, x[0], x[1]]);
    rule(vec![sym(names::MAIN), s], vec![go]);
    rule(vec![go], vec![go2, x[0]]);
    rule(vec![go2], vec![qs(&m.initial), x[1]]);
    for q in &m.states {
        extra.push(qs(q));
    }
    for (ti, t) in m.transitions.iter().enumerate() {
        let (p, q) = (qs(&t.from), qs(&t.to));
        let mid = sym(&format!("T{ti}"));
        extra.push(mid);
        match t.op {
            CounterOp::Inc(j) => {
                rule(vec![p, c, one], vec![mid, c]);
                rule(vec![mid, x[j]], vec![q, x[j], one]);
            }
            CounterOp::Dec(j) => {
                rule(vec![p, x[j], one], vec![mid, x[j]]);
                rule(vec![mid, c], vec![q, c, one]);
            }
            CounterOp::Zero(j) => {
                rule(vec![p, x[j]], vec![mid]);
                rule(vec![mid], vec![q, x[j]]);
            }
        }
    }
    let (f, f0, f1, fa, fb) = (sym("F"), sym("F0"), sym("F1"), sym("Fa"), sym("Fb"));
    extra.extend([f, f0, f1, fa, fb]);
    rule(vec![qs(&m.final_state)], vec![f]);
    rule(vec![f, x[0], one], vec![f0, x[0]]);
    rule(vec![f0, c], vec![f, c, one]);
    rule(vec![f, x[1], one], vec![f1, x[1]]);
    rule(vec![f1, c], vec![f, c, one]);
    rule(vec![f, x[0]], vec![fa]);
    rule(vec![fa, x[1]], vec![fb]);
    rule(vec![fb], vec![sym("main'"), s]);
    states.extend(extra);

    let start = flat_hardy_config(alpha, size, l).expect("exponents checked above");
    let target = flat_hardy_config_at("main'", alpha, size, l).expect("exponents checked above");
    Ok((
        Ncs {
            k: 2,
            states,
            rules: dedup(rules),
        },
        start,
        target,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncs::{cover, reachable, CoverLimits, CoverResult};

    fn o(s: &str) -> Ordinal {
        Ordinal::parse(s).unwrap()
    }

    #[test]
    fn syntax_and_order() {
        assert_eq!(o("w^w + w^2*2 + 1").to_string(), "w^w + w^2*2 + 1");
        assert_eq!(o("1 + w"), o("w"));
        assert_eq!(o("3"), Ordinal::nat(3));
        assert_eq!(o("w^(w+1)").to_string(), "w^(w + 1)");
        assert!(o("w^2") > o("w*5 + 7"));
        assert!(o("w^w") > o("w^7"));
        assert!(Ordinal::parse("w^").is_err());
    }

    #[test]
    fn fundamental_sequences() {
        assert_eq!(o("w").fs(3).unwrap(), o("3"));
        assert_eq!(o("w^2").fs(2).unwrap(), o("w*2"));
        assert_eq!(o("w^w").fs(2).unwrap(), o("w^2"));
        assert!(matches!(o("w+1").fs(2), Err(HierarchyError::NotLimit(_))));
    }

    #[test]
    fn hardy_values() {
        assert_eq!(hardy(&o("0"), 5, 100), Ok(5));
        assert_eq!(hardy(&o("3"), 5, 100), Ok(8));
        assert_eq!(hardy(&o("w"), 3, 100), Ok(6));
        assert_eq!(hardy(&o("w^2"), 1, 100), Ok(2));
        assert!(matches!(
            hardy(&o("w^w"), 4, 1000),
            Err(HierarchyError::FuelExhausted(_))
        ));
    }

    #[test]
    fn worked_encoding() {
        let m = encode_ordinal(&o("w^w + w^2*2 + 1"));
        let shown = Config::new(Sym::new("s"), m.clone()).to_string();
        assert_eq!(shown, "s(w + w(w + w) + w(w + w) + w(w(w)))");
        assert_eq!(decode_ordinal(&m), Some(o("w^w + w^2*2 + 1")));
        assert!(encode_ordinal(&o("0")).is_empty());
    }

    #[test]
    fn r1_r2_steps() {
        let n = build_hardy_ncs(2, 1).unwrap();
        let from = flat_hardy_config(&o("1"), 2, 1).unwrap();
        let to = flat_hardy_config(&o("0"), 3, 1).unwrap();
        let reach = reachable(&n, &from, 10_000).unwrap();
        assert!(reach.contains(&to));
        let back = reachable(&n, &to, 10_000).unwrap();
        assert!(back.contains(&from));
    }

    #[test]
    fn cp_worked_example() {
        let q: Vec<Sym> = (1..=7).map(|i| Sym::new(&format!("q{i}"))).collect();
        let rules = expand_cp("t", &[q[0], q[1]], &[q[5], q[6]], &q, 2).unwrap();
        let n = Ncs {
            k: 2,
            states: q.clone(),
            rules,
        };
        let start = Config::parse("q1(q2(q3+q3)+q4(q5))").unwrap();
        let reach = reachable(&n, &start, 100_000).unwrap();
        assert!(reach.contains(&Config::parse("q6(q2(q3+q3)+q4(q5)+q7(q3+q3))").unwrap()));
    }

    #[test]
    fn min_worked_example() {
        let q: Vec<Sym> = (1..=7).map(|i| Sym::new(&format!("q{i}"))).collect();
        let rules = expand_min("t", &[q[0], q[1]], &[q[6], q[4]], &q, 2).unwrap();
        let n = Ncs {
            k: 2,
            states: q.clone(),
            rules,
        };
        let start = Config::parse("q1(q2(q3+q4)+q5(q3+q6))").unwrap();
        let reach = reachable(&n, &start, 100_000).unwrap();
        let mut outcomes: Vec<String> = reach
            .iter()
            .filter(|c| c.state == q[6])
            .map(|c| c.to_string())
            .collect();
        outcomes.sort();
        assert_eq!(outcomes, vec!["q7(q5(q3))", "q7(q5)"]);
    }

    #[test]
    fn minsky_halting_immediately() {
        let m = MinskyMachine::parse("states q\ninitial q\nfinal q\n").unwrap();
        let (n, start, target) = build_minsky_ncs(&m, &o("1")).unwrap();
        let res = cover(&n, &start, &target, CoverLimits::default());
        assert!(matches!(res, CoverResult::Covered(_)), "{res:?}");
    }
}
