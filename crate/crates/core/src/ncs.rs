//! Nested counter systems: configuration terms, rewrite steps, the nested
//! multiset ordering ⪯, and coverability search.

use crate::sym::Sym;
use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hash;
use thiserror::Error;

/// Requirements on control-state labels.
pub trait State: Clone + Ord + Hash + fmt::Debug + fmt::Display + Send + Sync {}
impl<T: Clone + Ord + Hash + fmt::Debug + fmt::Display + Send + Sync> State for T {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NcsError {
    #[error("rule {0} is not part of the system")]
    RuleNotInSystem(String),
    #[error("parse error: {0}")]
    Syntax(String),
    #[error("configuration nests deeper than {0}")]
    TooDeep(usize),
    #[error("unknown state `{0}`")]
    UnknownState(String),
}

/// A state with a multiset of children, kept sorted so that equal
/// multisets are equal vectors.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Config<S = Sym> {
    pub state: S,
    pub children: Vec<Config<S>>,
}

impl<S: State> Config<S> {
    pub fn leaf(state: S) -> Self {
        Config {
            state,
            children: Vec::new(),
        }
    }

    pub fn new(state: S, mut children: Vec<Config<S>>) -> Self {
        children.sort();
        Config { state, children }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    /// Nesting depth: a bare state has depth 0.
    pub fn depth(&self) -> usize {
        self.children.iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }

    /// Restore canonical order after in-place edits.
    pub fn normalize(&mut self) {
        for c in self.children.iter_mut() {
            c.normalize();
        }
        self.children.sort();
    }

    pub fn node(&self, path: &[usize]) -> &Config<S> {
        path.iter().fold(self, |c, &i| &c.children[i])
    }

    fn node_mut(&mut self, path: &[usize]) -> &mut Config<S> {
        path.iter().fold(self, |c, &i| &mut c.children[i])
    }

    pub fn map_states<T: State>(&self, f: &impl Fn(&S) -> T) -> Config<T> {
        Config::new(f(&self.state), self.children.iter().map(|c| c.map_states(f)).collect())
    }
}

/// `c1 ⪯ c2`: c1 is obtained from c2 by deleting nodes.
pub fn leq<S: State>(c1: &Config<S>, c2: &Config<S>) -> bool {
    if c1.state != c2.state || c1.children.len() > c2.children.len() || c1.size() > c2.size() {
        return false;
    }
    let n = c1.children.len();
    let m = c2.children.len();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..m).filter(|&j| leq(&c1.children[i], &c2.children[j])).collect())
        .collect();
    let mut owner = vec![usize::MAX; m];
    for i in 0..n {
        let mut seen = vec![false; m];
        if !augment(i, &adj, &mut owner, &mut seen) {
            return false;
        }
    }
    true
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

/// All configurations obtained by deleting one non-root node with its subtree.
pub fn descents<S: State>(c: &Config<S>) -> Vec<Config<S>> {
    let mut out = Vec::new();
    for i in 0..c.children.len() {
        if i > 0 && c.children[i] == c.children[i - 1] {
            continue;
        }
        let mut d = c.clone();
        d.children.remove(i);
        out.push(d);
        for sub in descents(&c.children[i]) {
            let mut d = c.clone();
            d.children[i] = sub;
            d.children.sort();
            out.push(d);
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Rule<S = Sym> {
    pub lhs: Vec<S>,
    pub rhs: Vec<S>,
}

impl<S: State> Rule<S> {
    pub fn new(lhs: Vec<S>, rhs: Vec<S>) -> Self {
        assert!(!lhs.is_empty() && !rhs.is_empty(), "rule tuples are non-empty");
        Rule { lhs, rhs }
    }
}

impl<S: fmt::Display> fmt::Display for Rule<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = |v: &[S]| v.iter().join(",");
        write!(f, "({}) -> ({})", t(&self.lhs), t(&self.rhs))
    }
}

impl<S: fmt::Debug> fmt::Debug for Rule<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} -> {:?}", self.lhs, self.rhs)
    }
}

/// One fired rule: the rule and the child-index path of the matched nodes
/// below the root, in the canonical order of the source configuration.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Step<S = Sym> {
    pub rule: Rule<S>,
    pub path: Vec<usize>,
}

/// Every path of child indices below the root whose states spell `tail`.
/// Identical siblings are matched once.
fn matches<S: State>(c: &Config<S>, tail: &[S], prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let Some((first, rest)) = tail.split_first() else {
        out.push(prefix.clone());
        return;
    };
    for (i, ch) in c.children.iter().enumerate() {
        if ch.state != *first || (i > 0 && c.children[i - 1] == *ch) {
            continue;
        }
        prefix.push(i);
        matches(ch, rest, prefix, out);
        prefix.pop();
    }
}

/// Apply `rule` at the matched `path` (its length is `lhs.len() - 1`).
pub fn apply_at<S: State>(c: &Config<S>, rule: &Rule<S>, path: &[usize]) -> Config<S> {
    let i = rule.lhs.len() - 1;
    let j = rule.rhs.len() - 1;
    let mut out = c.clone();
    let keep = i.min(j);
    out.state = rule.rhs[0].clone();
    for lvl in 1..=keep {
        out.node_mut(&path[..lvl]).state = rule.rhs[lvl].clone();
    }
    if j < i {
        let parent = out.node_mut(&path[..j]);
        parent.children.remove(path[j]);
    } else if j > i {
        let mut chain = Config::leaf(rule.rhs[j].clone());
        for lvl in (i + 1..j).rev() {
            chain = Config::new(rule.rhs[lvl].clone(), vec![chain]);
        }
        out.node_mut(&path[..i]).children.push(chain);
    }
    out.normalize();
    out
}

/// All successors of `c` under one rule, one per distinct result.
pub fn step_rule<S: State>(c: &Config<S>, rule: &Rule<S>, k: usize) -> Vec<(Step<S>, Config<S>)> {
    if c.state != rule.lhs[0] || rule.lhs.len() > k + 1 || rule.rhs.len() > k + 1 {
        return Vec::new();
    }
    let mut paths = Vec::new();
    matches(c, &rule.lhs[1..], &mut Vec::new(), &mut paths);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in paths {
        let d = apply_at(c, rule, &p);
        if seen.insert(d.clone()) {
            out.push((
                Step {
                    rule: rule.clone(),
                    path: p,
                },
                d,
            ));
        }
    }
    out
}

/// Source of successor configurations; lets large systems be generated on
/// demand instead of materialised.
pub trait SuccessorGen<S: State>: Sync {
    fn successors(&self, c: &Config<S>) -> Vec<(Step<S>, Config<S>)>;
}

/// A k-NCS over named states.
#[derive(Clone, Debug, Serialize)]
pub struct Ncs<S = Sym> {
    pub k: usize,
    pub states: Vec<S>,
    pub rules: Vec<Rule<S>>,
}

impl<S: State> Ncs<S> {
    pub fn step(&self, c: &Config<S>, rule: &Rule<S>) -> Result<Vec<Config<S>>, NcsError> {
        if !self.rules.contains(rule) {
            return Err(NcsError::RuleNotInSystem(rule.to_string()));
        }
        Ok(step_rule(c, rule, self.k).into_iter().map(|p| p.1).collect())
    }
}

impl<S: State> SuccessorGen<S> for Ncs<S> {
    fn successors(&self, c: &Config<S>) -> Vec<(Step<S>, Config<S>)> {
        let mut out = Vec::new();
        for r in &self.rules {
            out.extend(step_rule(c, r, self.k));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoverLimits {
    pub max_configs: usize,
    pub max_depth: usize,
    /// Skip configurations ⪯ an already kept one.
    pub prune: bool,
}

impl Default for CoverLimits {
    fn default() -> Self {
        CoverLimits {
            max_configs: 100_000,
            max_depth: usize::MAX,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CoverResult<S = Sym> {
    /// Steps from the start; the last configuration covers the target.
    Covered(Vec<(Step<S>, Config<S>)>),
    NotCoveredWithinBounds,
    /// Every reachable configuration was explored without covering.
    Exhausted,
}

impl<S> CoverResult<S> {
    pub fn verdict(&self) -> Option<bool> {
        match self {
            CoverResult::Covered(_) => Some(true),
            CoverResult::Exhausted => Some(false),
            CoverResult::NotCoveredWithinBounds => None,
        }
    }
}

struct Node<S> {
    parent: usize,
    size: usize,
    step: Option<Step<S>>,
    config: Config<S>,
}

/// Breadth-first coverability search. Covering configurations are
/// detected when generated, so the returned run is a shortest one.
pub fn cover<S: State, G: SuccessorGen<S>>(
    gen: &G,
    start: &Config<S>,
    target: &Config<S>,
    limits: CoverLimits,
) -> CoverResult<S> {
    cover_with(gen, start, &|c| leq(target, c), limits)
}

/// [`cover`] with an arbitrary upward-closed goal predicate.
pub fn cover_with<S: State, G: SuccessorGen<S>>(
    gen: &G,
    start: &Config<S>,
    goal: &(dyn Fn(&Config<S>) -> bool + Sync),
    limits: CoverLimits,
) -> CoverResult<S> {
    if goal(start) {
        return CoverResult::Covered(Vec::new());
    }
    let mut nodes = vec![Node {
        parent: usize::MAX,
        size: start.size(),
        step: None,
        config: start.clone(),
    }];
    let mut seen: HashSet<Config<S>> = HashSet::new();
    seen.insert(start.clone());
    let mut kept: HashMap<S, Vec<usize>> = HashMap::new();
    kept.entry(start.state.clone()).or_default().push(0);
    let mut frontier = vec![0usize];
    let mut depth = 0;
    let mut truncated = false;
    while !frontier.is_empty() {
        if depth >= limits.max_depth {
            truncated = true;
            break;
        }
        depth += 1;
        let expanded: Vec<Vec<(Step<S>, Config<S>)>> =
            frontier.par_iter().map(|&i| gen.successors(&nodes[i].config)).collect();
        let mut next = Vec::new();
        for (&parent, succs) in frontier.iter().zip(expanded) {
            for (step, c) in succs {
                if goal(&c) {
                    let mut run = vec![(step, c)];
                    let mut cur = parent;
                    while let Some(s) = &nodes[cur].step {
                        run.push((s.clone(), nodes[cur].config.clone()));
                        cur = nodes[cur].parent;
                    }
                    run.reverse();
                    return CoverResult::Covered(run);
                }
                if seen.contains(&c) {
                    continue;
                }
                if limits.prune {
                    let group = kept.get(&c.state).map(|v| v.as_slice()).unwrap_or(&[]);
                    let n = c.size();
                    if group.iter().any(|&o| nodes[o].size >= n && leq(&c, &nodes[o].config)) {
                        continue;
                    }
                }
                if nodes.len() >= limits.max_configs {
                    truncated = true;
                    break;
                }
                seen.insert(c.clone());
                kept.entry(c.state.clone()).or_default().push(nodes.len());
                nodes.push(Node {
                    parent,
                    size: c.size(),
                    step: Some(step),
                    config: c,
                });
                next.push(nodes.len() - 1);
            }
            if truncated {
                break;
            }
        }
        if truncated {
            break;
        }
        frontier = next;
    }
    if truncated {
        CoverResult::NotCoveredWithinBounds
    } else {
        CoverResult::Exhausted
    }
}

/// Every configuration reachable from `start`, or `None` past `max_configs`.
pub fn reachable<S: State, G: SuccessorGen<S>>(
    gen: &G,
    start: &Config<S>,
    max_configs: usize,
) -> Option<Vec<Config<S>>> {
    let mut seen: HashSet<Config<S>> = HashSet::new();
    let mut order = vec![start.clone()];
    seen.insert(start.clone());
    let mut frontier = vec![start.clone()];
    while !frontier.is_empty() {
        let expanded: Vec<Vec<(Step<S>, Config<S>)>> = frontier.par_iter().map(|c| gen.successors(c)).collect();
        let mut next = Vec::new();
        for (_, c) in expanded.into_iter().flatten() {
            if seen.insert(c.clone()) {
                if seen.len() > max_configs {
                    return None;
                }
                order.push(c.clone());
                next.push(c);
            }
        }
        frontier = next;
    }
    Some(order)
}

/// Replay a run and check every step.
pub fn replay<S: State, G: SuccessorGen<S>>(gen: &G, start: &Config<S>, run: &[(Step<S>, Config<S>)]) -> bool {
    let mut cur = start.clone();
    for (step, next) in run {
        let ok = gen
            .successors(&cur)
            .iter()
            .any(|(s, c)| s.rule == step.rule && c == next);
        if !ok {
            return false;
        }
        cur = next.clone();
    }
    true
}

// ---------------------------------------------------------------------------
// text formats

fn is_state_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | '+' | ',' | '#')
}

struct TermParser<'a> {
    s: &'a [char],
    at: usize,
}

impl TermParser<'_> {
    fn skip_ws(&mut self) {
        while self.at < self.s.len() && self.s[self.at].is_whitespace() {
            self.at += 1;
        }
    }

    fn name(&mut self) -> Result<String, NcsError> {
        self.skip_ws();
        let start = self.at;
        while self.at < self.s.len() && is_state_char(self.s[self.at]) {
            self.at += 1;
        }
        if start == self.at {
            return Err(NcsError::Syntax(format!("expected a state name at offset {start}")));
        }
        Ok(self.s[start..self.at].iter().collect())
    }

    fn term(&mut self) -> Result<Config, NcsError> {
        let name = self.name()?;
        self.skip_ws();
        let mut children = Vec::new();
        if self.at < self.s.len() && self.s[self.at] == '(' {
            self.at += 1;
            loop {
                children.push(self.term()?);
                self.skip_ws();
                match self.s.get(self.at) {
                    Some('+') => self.at += 1,
                    Some(')') => {
                        self.at += 1;
                        break;
                    }
                    _ => return Err(NcsError::Syntax(format!("expected `+` or `)` at offset {}", self.at))),
                }
            }
        }
        Ok(Config::new(Sym::new(&name), children))
    }
}

impl Config<Sym> {
    /// Parse the term syntax `q0(q1 + q1(q2 + q2))`.
    pub fn parse(text: &str) -> Result<Config, NcsError> {
        let chars: Vec<char> = text.chars().collect();
        let mut p = TermParser { s: &chars, at: 0 };
        let c = p.term()?;
        p.skip_ws();
        if p.at != chars.len() {
            return Err(NcsError::Syntax(format!("trailing input at offset {}", p.at)));
        }
        Ok(c)
    }
}

impl<S: fmt::Display> fmt::Display for Config<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.state)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl<S: fmt::Debug> fmt::Debug for Config<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.state)?;
        if !self.children.is_empty() {
            f.write_str("(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(" + ")?;
                }
                write!(f, "{c:?}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn parse_tuple(s: &str) -> Result<Vec<Sym>, NcsError> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| NcsError::Syntax(format!("expected a tuple, got `{s}`")))?;
    let v: Vec<Sym> = inner
        .split(',')
        .map(str::trim)
        .map(|t| {
            if !t.is_empty() && t.chars().all(is_state_char) {
                Ok(Sym::new(t))
            } else {
                Err(NcsError::Syntax(format!("bad state `{t}`")))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(v)
}

impl Rule<Sym> {
    pub fn parse(text: &str) -> Result<Rule, NcsError> {
        let (l, r) = text
            .split_once("->")
            .ok_or_else(|| NcsError::Syntax(format!("expected `->` in `{text}`")))?;
        Ok(Rule::new(parse_tuple(l)?, parse_tuple(r)?))
    }
}

impl Ncs<Sym> {
    /// Parse `k <int>`, `states …`, `rule (…) -> (…)` lines; `#` comments.
    pub fn parse(text: &str) -> Result<Ncs, NcsError> {
        let mut k = None;
        let mut states: Vec<Sym> = Vec::new();
        let mut rules = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let err = |m: String| NcsError::Syntax(format!("line {}: {m}", ln + 1));
            match kw {
                "k" => {
                    k = Some(
                        rest.trim()
                            .parse::<usize>()
                            .map_err(|_| err(format!("bad depth `{rest}`")))?,
                    )
                }
                "states" => states.extend(rest.split_whitespace().map(Sym::new)),
                "rule" => rules.push(Rule::parse(rest).map_err(|e| err(e.to_string()))?),
                other => return Err(err(format!("unknown keyword `{other}`"))),
            }
        }
        let k = k.ok_or_else(|| NcsError::Syntax("missing `k` line".into()))?;
        for r in &rules {
            for s in r.lhs.iter().chain(&r.rhs) {
                if !states.contains(s) {
                    return Err(NcsError::UnknownState(s.to_string()));
                }
            }
            if r.lhs.len() > k + 1 || r.rhs.len() > k + 1 {
                return Err(NcsError::TooDeep(k));
            }
        }
        Ok(Ncs { k, states, rules })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("k {}\nstates", self.k);
        for q in &self.states {
            s.push(' ');
            s.push_str(q.as_str());
        }
        s.push('\n');
        for r in &self.rules {
            s.push_str(&format!("rule {r}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Config {
        Config::parse(s).unwrap()
    }

    fn r(s: &str) -> Rule {
        Rule::parse(s).unwrap()
    }

    const SAMPLE: &str = "q0(q1 + q1(q2+q2) + q1(q2+q2) + q1(q2+q2+q3(q4)))";

    #[test]
    fn term_syntax() {
        let x = c(SAMPLE);
        assert_eq!(x.size(), 13);
        assert_eq!(x.depth(), 3);
        assert_eq!(c(&x.to_string()), x);
        assert_eq!(c("q0(q2 + q1)"), c("q0(q1+q2)"));
        assert!(Config::parse("q0(q1").is_err());
    }

    #[test]
    fn ordering_examples() {
        assert!(leq(&c(SAMPLE), &c(SAMPLE)));
        assert!(leq(&c("q0(q1)"), &c("q0(q1 + q1(q2))")));
        assert!(!leq(&c("q0(q1(q2))"), &c("q0(q1)")));
        assert!(!leq(&c("q0(q1(q2) + q1(q3))"), &c("q0(q1(q2 + q3) + q1)")));
    }

    #[test]
    fn worked_steps() {
        let x = c(SAMPLE);
        let out: Vec<Config> = step_rule(&x, &r("(q0,q1) -> (q0,q1,q2')"), 3)
            .into_iter()
            .map(|p| p.1)
            .collect();
        let mut expect = vec![
            c("q0(q1(q2') + q1(q2 + q2) + q1(q2 + q2) + q1(q2 + q2 + q3(q4)))"),
            c("q0(q1 + q1(q2 + q2 + q2') + q1(q2 + q2) + q1(q2 + q2 + q3(q4)))"),
            c("q0(q1 + q1(q2 + q2) + q1(q2 + q2) + q1(q2 + q2 + q3(q4) + q2'))"),
        ];
        let mut got = out.clone();
        got.sort();
        expect.sort();
        assert_eq!(got, expect);

        let out = step_rule(&x, &r("(q0,q1,q3) -> (q0)"), 3);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].1, c("q0(q1 + q1(q2+q2) + q1(q2+q2))"));

        let out = step_rule(&x, &r("(q0) -> (q0')"), 3);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].1.state, Sym::new("q0'"));
        assert_eq!(out[0].1.children, x.children);
    }

    #[test]
    fn level_k_variants() {
        // append a bare level-k state, consume one, relabel one
        let x = c("r(a(b + b))");
        let add = step_rule(&x, &r("(r,a) -> (r,a,b)"), 2);
        assert_eq!(add[0].1, c("r(a(b + b + b))"));
        let del = step_rule(&x, &r("(r,a,b) -> (r,a)"), 2);
        assert_eq!(del[0].1, c("r(a(b))"));
        let rel = step_rule(&x, &r("(r,a,b) -> (s,a,d)"), 2);
        assert_eq!(rel[0].1, c("s(a(b + d))"));
        assert!(step_rule(&x, &r("(r,a,b) -> (r,a,b,e)"), 2).is_empty());
    }

    #[test]
    fn rule_membership() {
        let n = Ncs::parse("k 1\nstates q p\nrule (q) -> (p)\n").unwrap();
        assert!(n.step(&c("q"), &r("(p) -> (q)")).is_err());
        assert_eq!(n.step(&c("q"), &r("(q) -> (p)")).unwrap(), vec![c("p")]);
        assert!(Ncs::parse("k 1\nstates q\nrule (q) -> (z)").is_err());
        let again = Ncs::parse(&n.to_text()).unwrap();
        assert_eq!(again.rules, n.rules);
    }

    #[test]
    fn descent_examples() {
        assert!(descents(&c("q")).is_empty());
        assert_eq!(descents(&c("q0(q1 + q1)")), vec![c("q0(q1)")]);
        let mut d = descents(&c("q0(q1(q2))"));
        d.sort();
        let mut e = vec![c("q0(q1)"), c("q0")];
        e.sort();
        assert_eq!(d, e);
    }

    #[test]
    fn cover_examples() {
        let n = Ncs::parse("k 1\nstates q p\nrule (q) -> (q,p)\n").unwrap();
        assert_eq!(
            cover(&n, &c("q"), &c("q"), CoverLimits::default()),
            CoverResult::Covered(vec![])
        );
        let CoverResult::Covered(run) = cover(&n, &c("q"), &c("q(p+p+p)"), CoverLimits::default()) else {
            panic!()
        };
        assert_eq!(run.len(), 3);
        assert!(replay(&n, &c("q"), &run));
        let idle = Ncs::parse("k 1\nstates q\n").unwrap();
        assert_eq!(
            cover(&idle, &c("q"), &c("q(q)"), CoverLimits::default()),
            CoverResult::Exhausted
        );
        let lim = CoverLimits {
            max_configs: 5,
            ..CoverLimits::default()
        };
        let grow = Ncs::parse("k 1\nstates q p r\nrule (q) -> (q,p)\n").unwrap();
        assert_eq!(
            cover(&grow, &c("q"), &c("q(r)"), lim),
            CoverResult::NotCoveredWithinBounds
        );
    }
}
