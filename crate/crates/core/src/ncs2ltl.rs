//! Coverability in k-NCS as satisfiability over the linear order `[k]`.
//!
//! A lossy run `C_0 ⪰ C_0' → C_1 ⪰ … → C_n` is written backwards, one frame
//! per configuration. A frame lists the branches of its tree; each branch is
//! an odd position followed by an even copy with fresh values. The values of
//! an odd position identify the nodes of the branch (attribute `ℓ` holds the
//! node at level `ℓ`); the even copies are the values the next frame reuses
//! for the same nodes, one configuration earlier in the run.

use crate::dataword::{DataValue, DataWord, Letter, Position};
use crate::logic::Formula;
use crate::ncs::{apply_at, descents, leq, Config, Ncs, Rule, Step};
use crate::order::QuasiOrder;
use crate::sym::Sym;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Ncs2LtlError {
    #[error("the system has depth 0; at least one attribute is needed")]
    ZeroDepth,
    #[error("configuration {0} nests deeper than {1}")]
    TooDeep(String, usize),
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("not an encoding: {0}")]
    Malformed(String),
}

type Result<T> = std::result::Result<T, Ncs2LtlError>;

/// Transition label of a frame: a rule index, or a pure loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Label {
    Rule(usize),
    Lose,
}

/// `lossy ⪯` previous configuration, and `lossy` rewrites to `next`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LossyStep {
    pub lossy: Config,
    pub step: Step,
    pub next: Config,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LossyRun {
    pub start: Config,
    pub steps: Vec<LossyStep>,
}

impl LossyRun {
    /// A run without losses, as returned by coverability search.
    pub fn exact(start: &Config, run: &[(Step, Config)]) -> LossyRun {
        let mut prev = start.clone();
        let mut steps = Vec::new();
        for (s, c) in run {
            steps.push(LossyStep {
                lossy: prev,
                step: s.clone(),
                next: c.clone(),
            });
            prev = c.clone();
        }
        LossyRun {
            start: start.clone(),
            steps,
        }
    }

    pub fn last(&self) -> &Config {
        self.steps.last().map_or(&self.start, |s| &s.next)
    }

    pub fn configs(&self) -> Vec<&Config> {
        let mut out = vec![&self.start];
        out.extend(self.steps.iter().map(|s| &s.next));
        out
    }

    pub fn verify(&self, n: &Ncs) -> Result<()> {
        let mut prev = &self.start;
        for (i, s) in self.steps.iter().enumerate() {
            let bad = |m: &str| Ncs2LtlError::InvalidRun(format!("step {i}: {m}"));
            if !leq(&s.lossy, prev) {
                return Err(bad("lossy configuration is not below its predecessor"));
            }
            if !n.rules.contains(&s.step.rule) {
                return Err(bad("rule not in the system"));
            }
            if !path_matches(&s.lossy, &s.step) {
                return Err(bad("rule does not match at the given path"));
            }
            if apply_at(&s.lossy, &s.step.rule, &s.step.path) != s.next {
                return Err(bad("wrong successor"));
            }
            prev = &s.next;
        }
        Ok(())
    }
}

fn path_matches(c: &Config, s: &Step) -> bool {
    let lhs = &s.rule.lhs;
    if c.state != lhs[0] || s.path.len() + 1 != lhs.len() {
        return false;
    }
    let mut cur = c;
    for (lvl, &ix) in s.path.iter().enumerate() {
        match cur.children.get(ix) {
            Some(ch) if ch.state == lhs[lvl + 1] => cur = ch,
            _ => return false,
        }
    }
    true
}

// ---------------------------------------------------------------------------
// propositions

/// The propositions of the encoding. States are tagged with their level, so
/// a system reusing a state at several depths is stratified on the fly.
#[derive(Debug, Clone, Serialize)]
pub struct Vocab {
    pub k: usize,
    /// Real states per level `0..=k`.
    pub levels: Vec<Vec<Sym>>,
    pub rules: Vec<Rule>,
    #[serde(skip)]
    state_of: HashMap<Sym, (usize, Option<Sym>)>,
}

impl Vocab {
    fn new(n: &Ncs, extra: &[&Config]) -> Vocab {
        let k = n.k;
        let mut levels: Vec<BTreeSet<Sym>> = vec![BTreeSet::new(); k + 1];
        for r in &n.rules {
            for (l, q) in r.lhs.iter().enumerate() {
                levels[l].insert(*q);
            }
            for (l, q) in r.rhs.iter().enumerate() {
                levels[l].insert(*q);
            }
        }
        fn walk(c: &Config, l: usize, out: &mut [BTreeSet<Sym>]) {
            out[l].insert(c.state);
            for ch in &c.children {
                walk(ch, l + 1, out);
            }
        }
        for c in extra {
            walk(c, 0, &mut levels);
        }
        let levels: Vec<Vec<Sym>> = levels.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut v = Vocab {
            k,
            levels,
            rules: n.rules.clone(),
            state_of: HashMap::new(),
        };
        for l in 0..=k {
            for &q in &v.levels[l].clone() {
                v.state_of.insert(v.state(l, q), (l, Some(q)));
            }
            if l > 0 {
                v.state_of.insert(v.pad(l), (l, None));
            }
        }
        v
    }

    pub fn state(&self, level: usize, q: Sym) -> Sym {
        Sym::new(&format!("s{level}_{q}"))
    }

    pub fn pad(&self, level: usize) -> Sym {
        Sym::new(&format!("pad{level}"))
    }

    pub fn odd(&self) -> Sym {
        Sym::new("odd")
    }

    pub fn frame(&self) -> Sym {
        Sym::new("frame")
    }

    pub fn fresh(&self, level: usize) -> Sym {
        Sym::new(&format!("fresh{level}"))
    }

    pub fn ck(&self, level: usize) -> Sym {
        Sym::new(&format!("ck{level}"))
    }

    pub fn label(&self, l: Label) -> Sym {
        match l {
            Label::Rule(r) => Sym::new(&format!("t{r}")),
            Label::Lose => Sym::new("lose"),
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        let mut v: Vec<Label> = (0..self.rules.len()).map(Label::Rule).collect();
        v.push(Label::Lose);
        v
    }

    /// State options at a level, padding last.
    fn options(&self, level: usize) -> Vec<Sym> {
        let mut v: Vec<Sym> = self.levels[level].iter().map(|&q| self.state(level, q)).collect();
        if level > 0 {
            v.push(self.pad(level));
        }
        v
    }
}

// ---------------------------------------------------------------------------
// formula patterns

fn p(s: Sym) -> Formula {
    Formula::Letter(s)
}

fn not(f: Formula) -> Formula {
    Formula::not(f)
}

fn and(a: Formula, b: Formula) -> Formula {
    Formula::and(a, b)
}

fn imp(a: Formula, b: Formula) -> Formula {
    Formula::implies(a, b)
}

fn iff(a: Formula, b: Formula) -> Formula {
    and(imp(a.clone(), b.clone()), imp(b, a))
}

fn x(f: Formula) -> Formula {
    Formula::next(f)
}

fn wx(f: Formula) -> Formula {
    Formula::weak_next(f)
}

fn xx(f: Formula) -> Formula {
    x(x(f))
}

struct Pat<'a> {
    v: &'a Vocab,
}

impl Pat<'_> {
    fn k(&self) -> usize {
        self.v.k
    }

    /// `↑^ℓ`: the current prefix of length ℓ equals the stored one.
    fn up(&self, l: usize) -> Formula {
        if l == 0 {
            Formula::True
        } else {
            Formula::Check(l - 1)
        }
    }

    fn store(&self, f: Formula) -> Formula {
        Formula::freeze(self.k() - 1, f)
    }

    fn frame(&self) -> Formula {
        p(self.v.frame())
    }

    fn odd(&self) -> Formula {
        p(self.v.odd())
    }

    fn pad(&self, l: usize) -> Formula {
        if l == 0 {
            Formula::False
        } else if l > self.k() {
            Formula::True
        } else {
            p(self.v.pad(l))
        }
    }

    /// The branch has real nodes exactly up to level `d`.
    fn depth(&self, d: usize) -> Formula {
        and(not(self.pad(d)), self.pad(d + 1))
    }

    /// φ everywhere from here to the end of the current frame.
    fn all_in_frame(&self, f: Formula) -> Formula {
        and(
            f.clone(),
            wx(Formula::release(self.frame(), Formula::or(self.frame(), f))),
        )
    }

    /// φ somewhere from here to the end of the current frame.
    fn some_in_frame(&self, f: Formula) -> Formula {
        Formula::until(x(not(self.frame())), f)
    }

    /// Some odd position of the next frame shares the first `d` values of
    /// this position and satisfies φ.
    fn link(&self, d: usize, f: Formula) -> Formula {
        let target = Formula::and_all([self.up(d), self.odd(), f]);
        let g = Formula::until(
            not(self.frame()),
            and(self.frame(), Formula::until(x(not(self.frame())), target)),
        );
        if d == 0 {
            g
        } else {
            self.store(g)
        }
    }

    /// The positions two steps ahead still share `l` values.
    fn same_block(&self, l: usize) -> Formula {
        self.store(xx(self.up(l)))
    }

    /// At an even position: every node of the branch reappears in the next
    /// frame with its state, renamed back on the marked levels `1..=m`.
    fn copy(&self, root: Option<Sym>, lhs: &[Sym], m: usize) -> Formula {
        let v = self.v;
        let mut out = Vec::new();
        for d in 0..=self.k() {
            let mut c = Vec::new();
            match root {
                Some(q) => c.push(self.link(d, p(v.state(0, q)))),
                None => {
                    for &q in &v.levels[0] {
                        c.push(imp(p(v.state(0, q)), self.link(d, p(v.state(0, q)))));
                    }
                }
            }
            for l in 1..=d {
                let ck = p(v.ck(l));
                if l <= m {
                    c.push(imp(ck.clone(), self.link(d, p(v.state(l, lhs[l])))));
                }
                for &q in &v.levels[l] {
                    let s = p(v.state(l, q));
                    let cond = if l <= m {
                        and(not(ck.clone()), s.clone())
                    } else {
                        s.clone()
                    };
                    c.push(imp(cond, self.link(d, s)));
                }
            }
            out.push(imp(self.depth(d), Formula::and_all(c)));
        }
        Formula::and_all(out)
    }

    fn states(&self, branch: &[Sym]) -> Formula {
        let v = self.v;
        let mut c: Vec<Formula> = branch.iter().enumerate().map(|(l, &q)| p(v.state(l, q))).collect();
        c.push(self.depth(branch.len() - 1));
        Formula::and_all(c)
    }

    /// The frame starting here encodes `c` exactly, branches in canonical
    /// order; `last` additionally ends the word with it.
    fn exact(&self, c: &Config, last: bool) -> Formula {
        let branches = branches(c);
        let m = branches.len();
        let mut out = Vec::new();
        for (r, (b, ix)) in branches.iter().enumerate() {
            let mut here = vec![self.odd(), self.states(b)];
            if r > 0 {
                here.push(not(self.frame()));
            }
            out.push(Formula::next_n(2 * r, Formula::and_all(here)));
            if let Some((_, nx)) = branches.get(r + 1) {
                let s = ix.iter().zip(nx).take_while(|(a, b)| a == b).count();
                let share = and(self.up(s), not(self.up(s + 1)));
                out.push(Formula::next_n(2 * r, self.store(xx(share))));
            }
        }
        let end = if last { Formula::False } else { self.frame() };
        out.push(Formula::next_n(2 * m - 1, wx(end)));
        Formula::and_all(out)
    }
}

/// Root-to-leaf branches in canonical order: states from the root, and the
/// child indices below the root.
fn branches(c: &Config) -> Vec<(Vec<Sym>, Vec<usize>)> {
    fn go(c: &Config, st: &mut Vec<Sym>, ix: &mut Vec<usize>, out: &mut Vec<(Vec<Sym>, Vec<usize>)>) {
        st.push(c.state);
        if c.children.is_empty() {
            out.push((st.clone(), ix.clone()));
        }
        for (i, ch) in c.children.iter().enumerate() {
            ix.push(i);
            go(ch, st, ix, out);
            ix.pop();
        }
        st.pop();
    }
    let mut out = Vec::new();
    go(c, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// the reduction

/// The formula of an NCS coverability instance, by components.
#[derive(Debug, Clone, Serialize)]
pub struct Ncs2Ltl {
    pub vocab: Vocab,
    pub start: Config,
    pub end: Config,
    pub conf: Formula,
    pub flow: Formula,
    pub rn: Formula,
    pub inc: Formula,
    pub dec: Formula,
    pub start_f: Formula,
    pub end_f: Formula,
}

pub fn build_formula(n: &Ncs, start: &Config, end: &Config) -> Result<Ncs2Ltl> {
    let k = n.k;
    if k == 0 {
        return Err(Ncs2LtlError::ZeroDepth);
    }
    for c in [start, end] {
        if c.depth() > k {
            return Err(Ncs2LtlError::TooDeep(c.to_string(), k));
        }
    }
    let v = Vocab::new(n, &[start, end]);
    let t = Pat { v: &v };
    let g = Formula::globally;

    // configurations
    let mut conf = Vec::new();
    conf.push(imp(t.odd(), x(not(t.odd()))));
    conf.push(imp(not(t.odd()), wx(t.odd())));
    conf.push(imp(t.frame(), t.odd()));
    for l in 0..=k {
        let opts = v.options(l);
        conf.push(Formula::or_all(opts.iter().map(|&s| p(s))));
        for (i, &a) in opts.iter().enumerate() {
            for &b in &opts[i + 1..] {
                conf.push(not(and(p(a), p(b))));
            }
        }
    }
    for l in 1..k {
        conf.push(imp(t.pad(l), t.pad(l + 1)));
    }
    for &q in &v.levels[0] {
        let s = p(v.state(0, q));
        conf.push(imp(and(s.clone(), x(not(t.frame()))), x(s)));
    }
    conf.push(imp(Formula::freeze(0, xx(t.up(1))), xx(not(t.frame()))));
    for i in 1..=k {
        // a block that has ended never comes back on an odd position
        conf.push(imp(
            t.odd(),
            t.store(imp(not(xx(t.up(i))), not(x(Formula::finally(and(t.odd(), t.up(i))))))),
        ));
        // freshness: no earlier block with the same prefix
        conf.push(t.store(imp(
            not(xx(t.up(i))),
            not(x(Formula::finally(and(t.up(i), p(v.fresh(i)))))),
        )));
        for &q in &v.options(i) {
            conf.push(imp(and(p(q), t.same_block(i)), xx(p(q))));
        }
        if i < k {
            conf.push(imp(t.same_block(i), and(not(t.pad(i + 1)), xx(not(t.pad(i + 1))))));
        }
        conf.push(imp(t.odd(), not(p(v.ck(i)))));
    }
    let mut mimic = Vec::new();
    for l in 0..=k {
        for q in v.options(l) {
            mimic.push(iff(p(q), x(p(q))));
        }
    }
    mimic.push(Formula::freeze(0, x(not(t.up(1)))));
    for i in 1..=k {
        mimic.push(iff(t.same_block(i), x(t.same_block(i))));
    }
    conf.push(imp(t.odd(), Formula::and_all(mimic)));
    let conf = Formula::and_all([t.frame(), t.odd(), g(Formula::and_all(conf))]);

    // labels and markings
    let labels = v.labels();
    let mut flow = Vec::new();
    flow.push(iff(
        and(t.frame(), x(Formula::finally(t.frame()))),
        Formula::or_all(labels.iter().map(|&l| p(v.label(l)))),
    ));
    for (i, &a) in labels.iter().enumerate() {
        for &b in &labels[i + 1..] {
            flow.push(not(and(p(v.label(a)), p(v.label(b)))));
        }
    }
    for i in 1..=k {
        let ck = p(v.ck(i));
        flow.push(imp(
            and(ck.clone(), not(t.same_block(i))),
            x(Formula::until(not(ck), t.frame())),
        ));
        flow.push(imp(t.same_block(i), iff(p(v.ck(i)), xx(p(v.ck(i))))));
    }
    let no_marks_above = |j: usize| t.all_in_frame(Formula::and_all((j + 1..=k).map(|l| not(p(v.ck(l))))));
    for (r, rule) in v.rules.iter().enumerate() {
        let j = rule.rhs.len() - 1;
        let mut c = vec![p(v.state(0, rule.rhs[0])), no_marks_above(j)];
        if j > 0 {
            let w = (1..=j).flat_map(|l| [p(v.ck(l)), p(v.state(l, rule.rhs[l]))]);
            c.push(t.some_in_frame(Formula::and_all(std::iter::once(not(t.odd())).chain(w))));
        }
        flow.push(imp(p(v.label(Label::Rule(r))), Formula::and_all(c)));
    }
    flow.push(imp(
        p(v.label(Label::Lose)),
        and(
            no_marks_above(0),
            t.all_in_frame(Formula::or(t.odd(), t.copy(None, &[], 0))),
        ),
    ));
    let flow = g(Formula::and_all(flow));

    // rule effects
    let (mut rn, mut inc, mut dec) = (Vec::new(), Vec::new(), Vec::new());
    for (r, rule) in v.rules.iter().enumerate() {
        let (i, j) = (rule.lhs.len() - 1, rule.rhs.len() - 1);
        let lhs = &rule.lhs;
        let label = p(v.label(Label::Rule(r)));
        if i == j {
            let body = t.all_in_frame(Formula::or(t.odd(), t.copy(Some(lhs[0]), lhs, i)));
            rn.push(imp(label, body));
        } else if j < i {
            let copy = t.all_in_frame(Formula::or(t.odd(), t.copy(Some(lhs[0]), lhs, j)));
            let chain =
                Formula::and_all(std::iter::once(p(v.fresh(j + 1))).chain((0..=i).map(|l| p(v.state(l, lhs[l])))));
            let at = if j == 0 { Formula::True } else { p(v.ck(j)) };
            let new = t.some_in_frame(Formula::and_all([not(t.odd()), at, t.link(j, chain)]));
            dec.push(imp(label, and(copy, new)));
        } else {
            let mark = p(v.ck(i + 1));
            let copy = t.all_in_frame(Formula::or_all([t.odd(), mark.clone(), t.copy(Some(lhs[0]), lhs, i)]));
            let parent = Formula::and_all((0..=i).map(|l| p(v.state(l, lhs[l]))));
            let single = t.store(wx(imp(not(t.frame()), x(imp(mark.clone(), t.up(k))))));
            let zero = Formula::and_all(
                [t.depth(j), t.link(i, parent), single]
                    .into_iter()
                    .chain((i + 1..=j).map(|l| p(v.ck(l)))),
            );
            let zero = t.all_in_frame(Formula::or_all([t.odd(), not(mark), zero]));
            inc.push(imp(label, and(copy, zero)));
        }
    }
    let (rn, inc, dec) = (
        g(Formula::and_all(rn)),
        g(Formula::and_all(inc)),
        g(Formula::and_all(dec)),
    );

    let start_f = Formula::finally(Formula::and_all([
        t.frame(),
        not(x(Formula::finally(t.frame()))),
        t.exact(start, true),
    ]));
    // a covering frame is reached from the final one by a pure loss
    let end_f = t.exact(end, false);

    Ok(Ncs2Ltl {
        start: start.clone(),
        end: end.clone(),
        conf,
        flow,
        rn,
        inc,
        dec,
        start_f,
        end_f,
        vocab: v,
    })
}

impl Ncs2Ltl {
    pub fn formula(&self) -> Formula {
        Formula::and_all([
            self.conf.clone(),
            self.flow.clone(),
            self.rn.clone(),
            self.inc.clone(),
            self.dec.clone(),
            self.start_f.clone(),
            self.end_f.clone(),
        ])
    }

    pub fn order(&self) -> QuasiOrder {
        QuasiOrder::linear(self.vocab.k)
    }

    /// Every well-formed position letter. Exponential in k; meant for
    /// tiny instances.
    pub fn letters(&self) -> Vec<Letter> {
        let v = &self.vocab;
        let k = v.k;
        let mut tuples: Vec<Vec<Sym>> = Vec::new();
        for d in 0..=k {
            let mut acc: Vec<Vec<Sym>> = vec![Vec::new()];
            for l in 0..=d {
                acc = acc
                    .into_iter()
                    .flat_map(|t| {
                        v.levels[l].iter().map(move |&q| {
                            let mut t = t.clone();
                            t.push(v.state(l, q));
                            t
                        })
                    })
                    .collect();
            }
            for t in &mut acc {
                t.extend((d + 1..=k).map(|l| v.pad(l)));
            }
            tuples.extend(acc);
        }
        let mut out = Vec::new();
        for t in &tuples {
            for fresh in 0u32..1 << k {
                let mut base: Vec<Sym> = t.clone();
                base.extend((1..=k).filter(|l| fresh >> (l - 1) & 1 == 1).map(|l| v.fresh(l)));
                let odd = {
                    let mut b = base.clone();
                    b.push(v.odd());
                    b
                };
                out.push(Letter::set(odd.clone()));
                let mut f = odd.clone();
                f.push(v.frame());
                out.push(Letter::set(f.clone()));
                for l in v.labels() {
                    out.push(Letter::set(f.iter().copied().chain([v.label(l)])));
                }
                for c in 0..=k {
                    out.push(Letter::set(base.iter().copied().chain((1..=c).map(|l| v.ck(l)))));
                }
            }
        }
        out
    }

    // -----------------------------------------------------------------------
    // encoding

    /// The witness word of a lossy run, final configuration first. When
    /// the run ends strictly above `end`, a loss frame showing `end` is put
    /// in front.
    pub fn encode(&self, n: &Ncs, run: &LossyRun) -> Result<DataWord> {
        run.verify(n)?;
        if run.start != self.start {
            return Err(Ncs2LtlError::InvalidRun(
                "run does not begin in the start configuration".into(),
            ));
        }
        for c in run.configs().into_iter().chain(run.steps.iter().map(|s| &s.lossy)) {
            if c.depth() > self.vocab.k {
                return Err(Ncs2LtlError::TooDeep(c.to_string(), self.vocab.k));
            }
        }
        let last = run.last();
        if !leq(&self.end, last) {
            return Err(Ncs2LtlError::InvalidRun(format!("{last} does not cover {}", self.end)));
        }
        let mut ids = 0;
        // frames in word order with the step leading into each from the next
        let mut frames: Vec<(Option<Label>, Node)> = Vec::new();
        let mut links: Vec<Option<&LossyStep>> = Vec::new();
        if *last != self.end {
            frames.push((Some(Label::Lose), lift(&self.end, &mut ids)));
            links.push(None);
        }
        for (s, c) in run
            .steps
            .iter()
            .rev()
            .map(|s| (Some(s), &s.next))
            .chain([(None, &run.start)])
        {
            let label = s.map(|s| Label::Rule(n.rules.iter().position(|r| *r == s.step.rule).unwrap()));
            frames.push((label, lift(c, &mut ids)));
            links.push(s);
        }

        let mut fresh: DataValue = 0;
        let mut next = || {
            fresh += 1;
            fresh
        };
        let mut odd: HashMap<usize, DataValue> = HashMap::new();
        let mut even: HashMap<usize, DataValue> = HashMap::new();
        let mut marks: Vec<HashSet<usize>> = vec![HashSet::new(); frames.len()];
        for f in 0..frames.len() {
            let tree = &frames[f].1;
            for id in tree.ids().into_iter().skip(1) {
                odd.entry(id).or_insert_with(&mut next);
                even.insert(id, next());
            }
            let Some(before) = frames.get(f + 1).map(|p| &p.1) else {
                break;
            };
            match links[f] {
                None => {
                    let h = embed(tree, before).expect("end is below the last configuration");
                    for (a, b) in h {
                        if let Some(&e) = even.get(&a) {
                            odd.insert(b, e);
                        }
                    }
                }
                Some(ls) => {
                    let lossy = lift(&ls.lossy, &mut ids);
                    let lossy_ids: HashSet<usize> = lossy.ids().into_iter().collect();
                    let path_ids = lossy.path_ids(&ls.step.path);
                    let after = apply_ids(&lossy, &ls.step.rule, &ls.step.path, &mut ids);
                    let mut to_frame = HashMap::new();
                    iso(&after, tree, &mut to_frame);
                    let g = embed(&lossy, before).expect("lossy configuration embeds");
                    for (a, b) in g {
                        if let Some(&e) = to_frame.get(&a).and_then(|t| even.get(t)) {
                            odd.insert(b, e);
                        }
                    }
                    let keep = (ls.step.rule.lhs.len() - 1).min(ls.step.rule.rhs.len() - 1);
                    let mut m: HashSet<usize> = path_ids[..keep].iter().map(|a| to_frame[a]).collect();
                    m.extend(
                        after
                            .ids()
                            .into_iter()
                            .filter(|a| !lossy_ids.contains(a))
                            .map(|a| to_frame[&a]),
                    );
                    marks[f] = m;
                }
            }
        }

        let v = &self.vocab;
        let k = v.k;
        let mut positions = Vec::new();
        for (f, (label, tree)) in frames.iter().enumerate() {
            for (b, path) in tree.branches().into_iter().enumerate() {
                let d = path.len() - 1;
                let mut states: Vec<Sym> = path.iter().enumerate().map(|(l, n)| v.state(l, n.state)).collect();
                states.extend((d + 1..=k).map(|l| v.pad(l)));
                let mut ov: Vec<DataValue> = path[1..].iter().map(|n| odd[&n.id]).collect();
                let mut ev: Vec<DataValue> = path[1..].iter().map(|n| even[&n.id]).collect();
                for _ in d + 1..=k {
                    ov.push(next());
                    ev.push(next());
                }
                let mut ol = states.clone();
                ol.push(v.odd());
                if b == 0 {
                    ol.push(v.frame());
                    ol.extend(label.map(|l| v.label(l)));
                }
                let mut el = states;
                el.extend((1..=d).filter(|&l| marks[f].contains(&path[l].id)).map(|l| v.ck(l)));
                positions.push(Position {
                    letter: Letter::set(ol),
                    val: ov,
                });
                positions.push(Position {
                    letter: Letter::set(el),
                    val: ev,
                });
            }
        }
        mark_fresh(v, &mut positions);
        DataWord::new(positions).map_err(|e| Ncs2LtlError::InvalidRun(e.to_string()))
    }

    // -----------------------------------------------------------------------
    // decoding

    /// Split a word into labelled frames and read each frame's tree off
    /// its odd positions.
    pub fn decode_frames(&self, w: &DataWord) -> Result<Vec<(Option<Label>, Config)>> {
        let v = &self.vocab;
        let k = v.k;
        let bad = |i: usize, m: &str| Ncs2LtlError::Malformed(format!("position {}: {m}", i + 1));
        let mut frames: Vec<(Option<Label>, Vec<(Vec<Option<Sym>>, Vec<DataValue>)>)> = Vec::new();
        for (i, pos) in w.positions.iter().enumerate() {
            let lt = &pos.letter;
            if lt.has(v.frame()) {
                let labels: Vec<Label> = v.labels().into_iter().filter(|&l| lt.has(v.label(l))).collect();
                if labels.len() > 1 {
                    return Err(bad(i, "several labels"));
                }
                frames.push((labels.first().copied(), Vec::new()));
            }
            if !lt.has(v.odd()) {
                continue;
            }
            let Some(cur) = frames.last_mut() else {
                return Err(bad(i, "word does not start a frame"));
            };
            let mut st = vec![None; k + 1];
            let mut seen = vec![false; k + 1];
            for &s in lt.props() {
                if let Some(&(l, q)) = v.state_of.get(&s) {
                    if seen[l] {
                        return Err(bad(i, "two states on one level"));
                    }
                    seen[l] = true;
                    st[l] = q;
                }
            }
            if seen.iter().any(|s| !s) || st[0].is_none() {
                return Err(bad(i, "missing state"));
            }
            if pos.val.len() != k {
                return Err(bad(i, "wrong number of attributes"));
            }
            cur.1.push((st, pos.val.clone()));
        }
        let mut out = Vec::new();
        for (label, rows) in frames {
            let root = rows[0].0[0].unwrap();
            let mut nodes: BTreeMap<Vec<DataValue>, Sym> = BTreeMap::new();
            for (st, val) in &rows {
                if st[0] != Some(root) {
                    return Err(Ncs2LtlError::Malformed("root state changes inside a frame".into()));
                }
                let d = st.iter().take_while(|s| s.is_some()).count() - 1;
                if st[d + 1..].iter().any(|s| s.is_some()) {
                    return Err(Ncs2LtlError::Malformed("state below padding".into()));
                }
                for l in 1..=d {
                    let q = st[l].unwrap();
                    if *nodes.entry(val[..l].to_vec()).or_insert(q) != q {
                        return Err(Ncs2LtlError::Malformed("one node with two states".into()));
                    }
                }
            }
            fn build(root: Sym, prefix: &[DataValue], nodes: &BTreeMap<Vec<DataValue>, Sym>) -> Config {
                let kids = nodes
                    .iter()
                    .filter(|(key, _)| key.len() == prefix.len() + 1 && key.starts_with(prefix))
                    .map(|(key, &q)| build(q, key, nodes))
                    .collect();
                Config::new(root, kids)
            }
            out.push((label, build(root, &[], &nodes)));
        }
        Ok(out)
    }

    /// Decode a model into a lossy run from `start` covering `end`,
    /// checking every step.
    pub fn decode_run(&self, n: &Ncs, w: &DataWord) -> Result<LossyRun> {
        let frames = self.decode_frames(w)?;
        let bad = |m: String| Ncs2LtlError::InvalidRun(m);
        let (first, last) = (&frames[0], frames.last().unwrap());
        if !leq(&self.end, &first.1) {
            return Err(bad(format!("first frame {} does not cover {}", first.1, self.end)));
        }
        if last.1 != self.start || last.0.is_some() {
            return Err(bad(format!("last frame {} is not the start", last.1)));
        }
        let mut steps = Vec::new();
        for j in (0..frames.len() - 1).rev() {
            let (after, before) = (&frames[j], &frames[j + 1]);
            match after.0 {
                None => return Err(bad(format!("frame {j} has no label"))),
                Some(Label::Lose) => {
                    if !leq(&after.1, &before.1) {
                        return Err(bad(format!("loss frame {j} is not below its successor")));
                    }
                }
                Some(Label::Rule(r)) => {
                    let rule = n.rules.get(r).ok_or_else(|| bad(format!("unknown rule {r}")))?;
                    let s = find_lossy_step(&before.1, rule, &after.1)
                        .ok_or_else(|| bad(format!("frame {j} is not reached by {rule}")))?;
                    steps.push(s);
                }
            }
        }
        Ok(LossyRun {
            start: self.start.clone(),
            steps,
        })
    }
}

/// Some `c' ⪯ before` with `c' → after` by `rule`.
fn find_lossy_step(before: &Config, rule: &Rule, after: &Config) -> Option<LossyStep> {
    let (i, j) = (rule.lhs.len() as isize - 1, rule.rhs.len() as isize - 1);
    let size = after.size() as isize + i - j;
    if size < 1 || size as usize > before.size() {
        return None;
    }
    let mut layer: BTreeSet<Config> = BTreeSet::from([before.clone()]);
    for _ in 0..before.size() - size as usize {
        layer = layer.iter().flat_map(descents).collect();
    }
    for c in layer {
        let mut paths = Vec::new();
        collect_paths(&c, &rule.lhs, &mut Vec::new(), &mut paths);
        for path in paths {
            if apply_at(&c, rule, &path) == *after {
                return Some(LossyStep {
                    step: Step {
                        rule: rule.clone(),
                        path,
                    },
                    lossy: c,
                    next: after.clone(),
                });
            }
        }
    }
    None
}

fn collect_paths(c: &Config, lhs: &[Sym], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if c.state != lhs[0] {
        return;
    }
    if lhs.len() == 1 {
        out.push(prefix.clone());
        return;
    }
    for (i, ch) in c.children.iter().enumerate() {
        prefix.push(i);
        collect_paths(ch, &lhs[1..], prefix, out);
        prefix.pop();
    }
}

/// `fresh_i` on every position whose length-i prefix has not been seen
/// before the start of its block.
fn mark_fresh(v: &Vocab, positions: &mut [Position]) {
    for i in 1..=v.k {
        let mut first: HashMap<&[DataValue], usize> = HashMap::new();
        let mut fresh = Vec::new();
        for (p, pos) in positions.iter().enumerate() {
            let key = &pos.val[..i];
            let f = *first.entry(key).or_insert(p);
            let mut s = p;
            while s >= 2 && positions[s - 2].val[..i] == *key {
                s -= 2;
            }
            if f == s {
                fresh.push(p);
            }
        }
        for p in fresh {
            positions[p].letter = positions[p].letter.with(v.fresh(i));
        }
    }
}

// ---------------------------------------------------------------------------
// configurations with node identities

#[derive(Debug, Clone)]
struct Node {
    state: Sym,
    id: usize,
    kids: Vec<Node>,
}

fn lift(c: &Config, ids: &mut usize) -> Node {
    *ids += 1;
    let id = *ids;
    Node {
        state: c.state,
        id,
        kids: c.children.iter().map(|ch| lift(ch, ids)).collect(),
    }
}

impl Node {
    fn erase(&self) -> Config {
        Config::new(self.state, self.kids.iter().map(Node::erase).collect())
    }

    fn sort(&mut self) {
        for k in &mut self.kids {
            k.sort();
        }
        self.kids.sort_by_cached_key(Node::erase);
    }

    fn ids(&self) -> Vec<usize> {
        let mut out = vec![self.id];
        for k in &self.kids {
            out.extend(k.ids());
        }
        out
    }

    fn path_ids(&self, path: &[usize]) -> Vec<usize> {
        let mut cur = self;
        path.iter()
            .map(|&i| {
                cur = &cur.kids[i];
                cur.id
            })
            .collect()
    }

    fn branches(&self) -> Vec<Vec<&Node>> {
        fn go<'a>(n: &'a Node, st: &mut Vec<&'a Node>, out: &mut Vec<Vec<&'a Node>>) {
            st.push(n);
            if n.kids.is_empty() {
                out.push(st.clone());
            }
            for k in &n.kids {
                go(k, st, out);
            }
            st.pop();
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }
}

/// `apply_at` keeping node identities; new nodes get fresh ids.
fn apply_ids(c: &Node, rule: &Rule, path: &[usize], ids: &mut usize) -> Node {
    let i = rule.lhs.len() - 1;
    let j = rule.rhs.len() - 1;
    let mut out = c.clone();
    out.state = rule.rhs[0];
    fn at<'a>(n: &'a mut Node, path: &[usize]) -> &'a mut Node {
        path.iter().fold(n, |n, &i| &mut n.kids[i])
    }
    for lvl in 1..=i.min(j) {
        at(&mut out, &path[..lvl]).state = rule.rhs[lvl];
    }
    if j < i {
        at(&mut out, &path[..j]).kids.remove(path[j]);
    } else if j > i {
        let mut chain: Option<Node> = None;
        for lvl in (i + 1..=j).rev() {
            *ids += 1;
            chain = Some(Node {
                state: rule.rhs[lvl],
                id: *ids,
                kids: chain.into_iter().collect(),
            });
        }
        at(&mut out, &path[..i]).kids.push(chain.unwrap());
    }
    out.sort();
    out
}

/// Node correspondence between two trees with equal erasures.
fn iso(a: &Node, b: &Node, out: &mut HashMap<usize, usize>) {
    out.insert(a.id, b.id);
    for (x, y) in a.kids.iter().zip(&b.kids) {
        iso(x, y, out);
    }
}

/// A witness of `a ⪯ b` as a node map.
fn embed(a: &Node, b: &Node) -> Option<HashMap<usize, usize>> {
    if a.state != b.state || a.kids.len() > b.kids.len() {
        return None;
    }
    let sub: Vec<Vec<Option<HashMap<usize, usize>>>> = a
        .kids
        .iter()
        .map(|x| b.kids.iter().map(|y| embed(x, y)).collect())
        .collect();
    let adj: Vec<Vec<usize>> = sub
        .iter()
        .map(|row| (0..row.len()).filter(|&j| row[j].is_some()).collect())
        .collect();
    let mut owner = vec![usize::MAX; b.kids.len()];
    for i in 0..a.kids.len() {
        let mut seen = vec![false; b.kids.len()];
        if !augment(i, &adj, &mut owner, &mut seen) {
            return None;
        }
    }
    let mut out = HashMap::from([(a.id, b.id)]);
    for (j, &i) in owner.iter().enumerate() {
        if i != usize::MAX {
            out.extend(sub[i][j].clone().unwrap());
        }
    }
    Some(out)
}

fn augment(i: usize, adj: &[Vec<usize>], owner: &mut [usize], seen: &mut [bool]) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if owner[j] == usize::MAX || augment(owner[j], adj, owner, seen) {
            owner[j] = i;
            return true;
        }
    }
    false
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Rule(r) => write!(f, "t{r}"),
            Label::Lose => write!(f, "lose"),
        }
    }
}
