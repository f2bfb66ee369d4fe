//! Quasi-ordered attribute sets (A, ⊑).
//!
//! Attributes are dense indices into the order; the relation is kept closed
//! as one bitmask per attribute, so at most 64 attributes are supported.

use serde::Serialize;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Index of an attribute inside its [`QuasiOrder`].
pub type Attr = usize;

pub const MAX_ATTRS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("attribute `{0}` declared twice")]
    DuplicateAttribute(String),
    #[error("at most {MAX_ATTRS} attributes are supported")]
    TooManyAttributes,
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

#[derive(Clone, PartialEq, Eq)]
pub struct QuasiOrder {
    names: Vec<String>,
    index: HashMap<String, Attr>,
    /// `down[x]` has bit `y` set iff `y ⊑ x`.
    down: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeReport {
    pub is_tree: bool,
    pub depth: usize,
    pub sccs: Vec<Vec<Attr>>,
    pub witness: Option<(Attr, Attr, Attr)>,
}

/// Result of collapsing strongly connected components.
#[derive(Debug, Clone)]
pub struct Collapse {
    /// Antisymmetric order over the representatives.
    pub order: QuasiOrder,
    /// Original attribute -> attribute of `order`.
    pub rep: Vec<Attr>,
    /// Size of the component behind each attribute of `order`.
    pub size: Vec<usize>,
}

fn bits(mut m: u64) -> impl Iterator<Item = Attr> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

impl QuasiOrder {
    /// Reflexive-transitive closure of `pairs` (each `(x, y)` meaning `x ⊑ y`).
    pub fn close<S: AsRef<str>>(attrs: &[S], pairs: &[(S, S)]) -> Result<Self, OrderError> {
        if attrs.len() > MAX_ATTRS {
            return Err(OrderError::TooManyAttributes);
        }
        let mut names = Vec::new();
        let mut index = HashMap::new();
        for a in attrs {
            let a = a.as_ref();
            if index.insert(a.to_string(), names.len()).is_some() {
                return Err(OrderError::DuplicateAttribute(a.to_string()));
            }
            names.push(a.to_string());
        }
        let look = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| OrderError::UnknownAttribute(s.to_string()))
        };
        let mut edges = Vec::new();
        for (x, y) in pairs {
            edges.push((look(x.as_ref())?, look(y.as_ref())?));
        }
        Ok(Self::from_edges(names, &edges))
    }

    /// Closure over already indexed attributes.
    pub fn from_edges(names: Vec<String>, edges: &[(Attr, Attr)]) -> Self {
        let n = names.len();
        assert!(n <= MAX_ATTRS);
        let index = names.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut down: Vec<u64> = (0..n).map(|i| 1u64 << i).collect();
        for &(x, y) in edges {
            down[y] |= 1 << x;
        }
        loop {
            let mut changed = false;
            for x in 0..n {
                let mut acc = down[x];
                for y in bits(down[x]) {
                    acc |= down[y];
                }
                if acc != down[x] {
                    down[x] = acc;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        QuasiOrder { names, index, down }
    }

    /// The linear order `[k] = 1 ⊑ 2 ⊑ … ⊑ k`, attributes named `1`..`k`.
    pub fn linear(k: usize) -> Self {
        let names = (1..=k).map(|i| i.to_string()).collect();
        let edges: Vec<_> = (1..k).map(|i| (i - 1, i)).collect();
        Self::from_edges(names, &edges)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn attrs(&self) -> std::ops::Range<Attr> {
        0..self.names.len()
    }

    pub fn name(&self, a: Attr) -> &str {
        &self.names[a]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn attr(&self, name: &str) -> Result<Attr, OrderError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| OrderError::UnknownAttribute(name.to_string()))
    }

    /// `x ⊑ y`.
    pub fn leq(&self, x: Attr, y: Attr) -> bool {
        self.down[y] >> x & 1 == 1
    }

    /// `x ⊏ y`: `x ⊑ y` and not `y ⊑ x`.
    pub fn lt(&self, x: Attr, y: Attr) -> bool {
        self.leq(x, y) && !self.leq(y, x)
    }

    pub fn comparable(&self, x: Attr, y: Attr) -> bool {
        self.leq(x, y) || self.leq(y, x)
    }

    /// Bitmask of cl(x).
    pub fn down_mask(&self, x: Attr) -> u64 {
        self.down[x]
    }

    /// cl(x) = { y | y ⊑ x }, in index order.
    pub fn downward_closure(&self, x: Attr) -> Vec<Attr> {
        bits(self.down[x]).collect()
    }

    pub fn pairs(&self) -> Vec<(Attr, Attr)> {
        let mut out = Vec::new();
        for y in self.attrs() {
            for x in bits(self.down[y]) {
                out.push((x, y));
            }
        }
        out.sort();
        out
    }

    pub fn is_partial_order(&self) -> bool {
        self.attrs()
            .all(|x| self.attrs().all(|y| x == y || !(self.leq(x, y) && self.leq(y, x))))
    }

    /// True for the orders `[k]` produced by [`QuasiOrder::linear`] and any
    /// other total partial order.
    pub fn is_linear(&self) -> bool {
        self.is_partial_order() && self.attrs().all(|x| self.attrs().all(|y| self.comparable(x, y)))
    }

    /// Number of elements strictly below `x` plus one, counted in components.
    pub fn level(&self, x: Attr) -> usize {
        let mut seen = 0u64;
        let mut lvl = 0;
        for y in bits(self.down[x]) {
            if seen >> y & 1 == 0 {
                lvl += 1;
                for z in bits(self.down[x]) {
                    if self.leq(y, z) && self.leq(z, y) {
                        seen |= 1 << z;
                    }
                }
            }
        }
        lvl
    }

    /// Maximal elements (leaves of the forest when the order is a tree).
    pub fn maximal(&self) -> Vec<Attr> {
        self.attrs().filter(|&x| self.attrs().all(|y| !self.lt(x, y))).collect()
    }

    /// The immediate predecessor of `x` in a tree partial order.
    pub fn parent(&self, x: Attr) -> Option<Attr> {
        let below: Vec<Attr> = bits(self.down[x]).filter(|&y| self.lt(y, x)).collect();
        below.iter().copied().find(|&p| below.iter().all(|&y| self.leq(y, p)))
    }

    /// Strongly connected components, each sorted, ordered by least member.
    pub fn sccs(&self) -> Vec<Vec<Attr>> {
        let mut assigned = 0u64;
        let mut out = Vec::new();
        for x in self.attrs() {
            if assigned >> x & 1 == 1 {
                continue;
            }
            let comp: Vec<Attr> = self.attrs().filter(|&y| self.leq(x, y) && self.leq(y, x)).collect();
            for &y in &comp {
                assigned |= 1 << y;
            }
            out.push(comp);
        }
        out
    }

    pub fn analyze(&self) -> TreeReport {
        let sccs = self.sccs();
        let mut witness = None;
        'outer: for z in self.attrs() {
            for x in bits(self.down[z]) {
                for y in bits(self.down[z]) {
                    if x < y && !self.comparable(x, y) {
                        witness = Some((x, y, z));
                        break 'outer;
                    }
                }
            }
        }
        // longest strict chain ending in each component, by increasing size of down-sets
        let mut order: Vec<Attr> = self.attrs().collect();
        order.sort_by_key(|&x| self.down[x].count_ones());
        let mut best = vec![0usize; self.len()];
        for &x in &order {
            let below = bits(self.down[x])
                .filter(|&y| self.lt(y, x))
                .map(|y| best[y])
                .max()
                .unwrap_or(0);
            best[x] = below + 1;
        }
        TreeReport {
            is_tree: witness.is_none(),
            depth: best.into_iter().max().unwrap_or(0),
            sccs,
            witness,
        }
    }

    /// Collapse each component to its lexicographically least member.
    pub fn collapse_sccs(&self) -> Collapse {
        let sccs = self.sccs();
        let mut reps: Vec<(String, Vec<Attr>)> = sccs
            .into_iter()
            .map(|c| {
                let least = c.iter().map(|&a| self.names[a].clone()).min().unwrap();
                (least, c)
            })
            .collect();
        reps.sort_by(|a, b| {
            let ia = self.index[&a.0];
            let ib = self.index[&b.0];
            ia.cmp(&ib)
        });
        let mut rep = vec![0; self.len()];
        let mut size = Vec::new();
        let mut names = Vec::new();
        for (i, (name, comp)) in reps.iter().enumerate() {
            names.push(name.clone());
            size.push(comp.len());
            for &a in comp {
                rep[a] = i;
            }
        }
        let mut edges = Vec::new();
        for (x, y) in self.pairs() {
            if rep[x] != rep[y] {
                edges.push((rep[x], rep[y]));
            }
        }
        Collapse {
            order: QuasiOrder::from_edges(names, &edges),
            rep,
            size,
        }
    }

    /// Parse `attr <name>` / `le <x> <y>` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, OrderError> {
        let mut attrs: Vec<String> = Vec::new();
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let syntax = |msg: &str| OrderError::Syntax {
                line: ln + 1,
                msg: msg.to_string(),
            };
            match toks.as_slice() {
                ["attr", rest @ ..] if !rest.is_empty() => attrs.extend(rest.iter().map(|s| s.to_string())),
                ["le", x, y] => pairs.push((x.to_string(), y.to_string())),
                ["attr"] => return Err(syntax("`attr` needs a name")),
                ["le", ..] => return Err(syntax("`le` needs exactly two names")),
                _ => return Err(syntax(&format!("unknown declaration `{}`", toks[0]))),
            }
        }
        QuasiOrder::close(&attrs, &pairs)
    }

    /// Parse either `linear:<k>` or the text format.
    pub fn from_spec(spec: &str) -> Result<Self, OrderError> {
        if let Some(k) = spec.trim().strip_prefix("linear:") {
            let k: usize = k.trim().parse().map_err(|_| OrderError::Syntax {
                line: 1,
                msg: format!("bad depth `{k}`"),
            })?;
            if k > MAX_ATTRS {
                return Err(OrderError::TooManyAttributes);
            }
            return Ok(QuasiOrder::linear(k));
        }
        QuasiOrder::parse(spec)
    }

    /// Text form with only the covering pairs listed.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for n in &self.names {
            s.push_str(&format!("attr {n}\n"));
        }
        for (x, y) in self.pairs() {
            if x == y {
                continue;
            }
            let covered = self.attrs().any(|z| z != x && z != y && self.lt(x, z) && self.lt(z, y));
            if !covered {
                s.push_str(&format!("le {} {}\n", self.names[x], self.names[y]));
            }
        }
        s
    }
}

impl fmt::Debug for QuasiOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self
            .pairs()
            .into_iter()
            .filter(|(x, y)| x != y)
            .map(|(x, y)| format!("{}⊑{}", self.names[x], self.names[y]))
            .collect();
        write!(f, "QuasiOrder({:?}; {})", self.names, pairs.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex2() -> QuasiOrder {
        QuasiOrder::close(
            &["x1", "x2", "x3", "y1", "y2"],
            &[("x1", "x2"), ("x2", "x3"), ("y1", "y2")],
        )
        .unwrap()
    }

    #[test]
    fn closure_examples() {
        let q = QuasiOrder::close(&["x"], &[]).unwrap();
        assert_eq!(q.pairs(), vec![(0, 0)]);
        let q = QuasiOrder::close(&["x", "y", "z"], &[("x", "z"), ("y", "z")]).unwrap();
        assert_eq!(q.pairs().len(), 5);
        let q = QuasiOrder::close(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        assert!(q.leq(0, 2));
        assert_eq!(
            QuasiOrder::close(&["a"], &[("a", "b")]).unwrap_err(),
            OrderError::UnknownAttribute("b".into())
        );
    }

    #[test]
    fn downward_closures() {
        let q = ex2();
        let names: Vec<&str> = q
            .downward_closure(q.attr("x3").unwrap())
            .into_iter()
            .map(|a| q.name(a))
            .collect();
        assert_eq!(names, ["x1", "x2", "x3"]);
        let v = QuasiOrder::close(&["x", "y", "z"], &[("x", "z"), ("y", "z")]).unwrap();
        assert_eq!(v.downward_closure(2), vec![0, 1, 2]);
    }

    #[test]
    fn analyze_examples() {
        let r = ex2().analyze();
        assert!(r.is_tree);
        assert_eq!(r.depth, 3);
        let v = QuasiOrder::close(&["x", "y", "z"], &[("x", "z"), ("y", "z")]).unwrap();
        let r = v.analyze();
        assert!(!r.is_tree);
        assert_eq!(r.witness, Some((0, 1, 2)));
        let id = QuasiOrder::close(&["a", "b"], &[]).unwrap();
        assert_eq!(id.analyze().depth, 1);
        assert!(id.analyze().is_tree);
    }

    #[test]
    fn collapse_examples() {
        let q = QuasiOrder::close(&["a", "b", "c"], &[("a", "b"), ("b", "a"), ("a", "c")]).unwrap();
        let c = q.collapse_sccs();
        assert_eq!(c.order.names(), ["a", "c"]);
        assert_eq!(c.rep, vec![0, 0, 1]);
        assert_eq!(c.size, vec![2, 1]);
        assert!(c.order.is_linear());

        let q = QuasiOrder::close(&["a", "b", "c", "d"], &[("a", "b"), ("b", "a"), ("c", "d"), ("d", "c")]).unwrap();
        let c = q.collapse_sccs();
        assert_eq!(c.size, vec![2, 2]);
        assert!(!c.order.comparable(0, 1));

        let p = ex2().collapse_sccs();
        assert_eq!(p.order, ex2());
    }

    #[test]
    fn text_round_trip() {
        let q = QuasiOrder::parse("# ex\nattr res pid\nle res pid\n").unwrap();
        assert!(q.leq(0, 1));
        assert_eq!(QuasiOrder::parse(&q.to_text()).unwrap(), q);
        assert!(matches!(
            QuasiOrder::parse("attr a\nfoo b"),
            Err(OrderError::Syntax { line: 2, .. })
        ));
        let l = QuasiOrder::from_spec("linear:3").unwrap();
        assert!(l.is_linear());
        assert_eq!(l.level(2), 3);
    }

    #[test]
    fn levels_and_parents() {
        let q = ex2();
        assert_eq!(q.level(q.attr("x2").unwrap()), 2);
        assert_eq!(q.parent(q.attr("x3").unwrap()), Some(q.attr("x2").unwrap()));
        assert_eq!(q.parent(q.attr("y1").unwrap()), None);
        assert_eq!(q.maximal(), vec![2, 4]);
    }
}
