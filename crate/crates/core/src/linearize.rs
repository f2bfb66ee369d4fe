//! Translation of formulas over a tree-quasi-ordered attribute set into
//! equisatisfiable formulas over the linear order `[k]`: component collapse,
//! depth padding, and frame encoding.

use crate::dataword::{DataValue, DataWord, Letter, Position};
use crate::logic::{freeze_normal_form, is_freeze_normal, Formula};
use crate::order::{Attr, Collapse, QuasiOrder};
use crate::sym::Sym;
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinError {
    #[error("attribute order is not a tree-quasi-ordering: {0} and {1} are incomparable below {2}")]
    NotTreeOrder(String, String, String),
    #[error("formula is not in freeze normal form at `{0}`")]
    NotInNormalForm(String),
    #[error("attribute order is empty")]
    EmptyOrder,
    #[error("linearisation needs an alphabet of single letters")]
    NotPlainAlphabet,
}

/// In-order branch structure of a tree partial order.
#[derive(Debug, Clone, Serialize)]
pub struct Branches {
    /// Leaves ℓ_1 … ℓ_n in in-order (children visited by name).
    pub leaves: Vec<Attr>,
    /// `chains[j]` lists cl(ℓ_j) from the root up.
    pub chains: Vec<Vec<Attr>>,
    /// 1-based smallest branch index containing each attribute.
    pub sb: Vec<usize>,
    /// 1-based largest branch index containing each attribute.
    pub lb: Vec<usize>,
    pub lvl: Vec<usize>,
}

impl Branches {
    pub fn of(q: &QuasiOrder) -> Branches {
        let mut kids: Vec<Vec<Attr>> = vec![Vec::new(); q.len()];
        let mut roots = Vec::new();
        for x in q.attrs() {
            match q.parent(x) {
                Some(p) => kids[p].push(x),
                None => roots.push(x),
            }
        }
        let by_name = |v: &mut Vec<Attr>| v.sort_by(|&a, &b| q.name(a).cmp(q.name(b)));
        by_name(&mut roots);
        for k in kids.iter_mut() {
            by_name(k);
        }
        let mut leaves = Vec::new();
        let mut stack: Vec<Attr> = roots.into_iter().rev().collect();
        while let Some(x) = stack.pop() {
            if kids[x].is_empty() {
                leaves.push(x);
            } else {
                stack.extend(kids[x].iter().rev());
            }
        }
        let chains: Vec<Vec<Attr>> = leaves
            .iter()
            .map(|&l| {
                let mut c = q.downward_closure(l);
                c.sort_by_key(|&a| q.level(a));
                c
            })
            .collect();
        let mut sb = vec![0; q.len()];
        let mut lb = vec![0; q.len()];
        for (j, &l) in leaves.iter().enumerate() {
            for x in q.downward_closure(l) {
                if sb[x] == 0 {
                    sb[x] = j + 1;
                }
                lb[x] = j + 1;
            }
        }
        Branches {
            leaves,
            chains,
            sb,
            lb,
            lvl: q.attrs().map(|x| q.level(x)).collect(),
        }
    }
}

/// Padded order plus its branch table.
#[derive(Debug, Clone, Serialize)]
pub struct FramePlan {
    #[serde(skip)]
    pub order: QuasiOrder,
    /// Attributes below this index come from the unpadded order.
    pub base_len: usize,
    pub k: usize,
    pub n: usize,
    pub branches: Branches,
}

fn not_tree(q: &QuasiOrder) -> Option<LinError> {
    let r = q.analyze();
    r.witness
        .map(|(x, y, z)| LinError::NotTreeOrder(q.name(x).into(), q.name(y).into(), q.name(z).into()))
}

/// Rewrite attributes to component representatives and forbid equal chains
/// between same-level representatives of components of different size.
pub fn collapse_formula(f: &Formula, q: &QuasiOrder) -> Result<(Formula, Collapse), LinError> {
    if let Some(e) = not_tree(q) {
        return Err(e);
    }
    let c = q.collapse_sccs();
    let g = f.map_attrs(&|x| c.rep[x]);
    let p = &c.order;
    let mut constraints = Vec::new();
    for u in p.attrs() {
        for v in p.attrs() {
            if c.size[u] != c.size[v] && p.level(u) == p.level(v) {
                constraints.push(Formula::globally(Formula::freeze(
                    u,
                    Formula::not(Formula::finally(Formula::Check(v))),
                )));
            }
        }
    }
    Ok((Formula::and_all(std::iter::once(g).chain(constraints)), c))
}

/// Extend every maximal chain to the depth of the order with `_pad<i>`
/// attributes placed above short leaves.
pub fn pad_order(p: &QuasiOrder) -> Result<FramePlan, LinError> {
    if p.is_empty() {
        return Err(LinError::EmptyOrder);
    }
    if let Some(e) = not_tree(p) {
        return Err(e);
    }
    let k = p.analyze().depth;
    let mut names: Vec<String> = p.names().to_vec();
    let mut edges: Vec<(Attr, Attr)> = p.pairs().into_iter().filter(|(x, y)| x != y).collect();
    let mut counter = 0;
    for leaf in p.maximal() {
        let mut below = leaf;
        for _ in p.level(leaf)..k {
            counter += 1;
            names.push(format!("_pad{counter}"));
            let fresh = names.len() - 1;
            edges.push((below, fresh));
            below = fresh;
        }
    }
    let order = QuasiOrder::from_edges(names, &edges);
    let branches = Branches::of(&order);
    Ok(FramePlan {
        base_len: p.len(),
        k,
        n: branches.leaves.len(),
        branches,
        order,
    })
}

/// The letter `(a, j)` of the frame alphabet.
pub fn frame_letter(a: Sym, j: usize) -> Sym {
    Sym::new(&format!("{a}#{j}"))
}

pub fn frame_alphabet(alphabet: &[Sym], plan: &FramePlan) -> Vec<Letter> {
    let mut out = Vec::new();
    for &a in alphabet {
        for j in 1..=plan.n {
            out.push(Letter::single(frame_letter(a, j)));
        }
    }
    out
}

fn plain(w: &DataWord) -> Result<Vec<Sym>, LinError> {
    w.positions
        .iter()
        .map(|p| match p.letter.props() {
            [a] => Ok(*a),
            _ => Err(LinError::NotPlainAlphabet),
        })
        .collect()
}

/// Encode each position as a frame of `n` positions over `[k]`. Words over
/// the unpadded order receive fresh values for the padding attributes.
pub fn frame_encode_word(w: &DataWord, plan: &FramePlan) -> Result<DataWord, LinError> {
    let letters = plain(w)?;
    let mut fresh: DataValue = w
        .positions
        .iter()
        .flat_map(|p| p.val.iter().copied())
        .max()
        .map_or(0, |m| m + 1);
    let mut out = Vec::new();
    for (i, p) in w.positions.iter().enumerate() {
        let mut full = p.val.clone();
        while full.len() < plan.order.len() {
            full.push(fresh);
            fresh += 1;
        }
        for (j, chain) in plan.branches.chains.iter().enumerate() {
            out.push(Position {
                letter: Letter::single(frame_letter(letters[i], j + 1)),
                val: chain.iter().map(|&x| full[x]).collect(),
            });
        }
    }
    Ok(DataWord { positions: out })
}

/// Map a word over a tree-quasi-order to one over its collapse: each
/// representative receives a code of the ≃-class of its downward closure.
pub fn collapse_word(w: &DataWord, q: &QuasiOrder, c: &Collapse) -> DataWord {
    let mut codes: HashMap<Vec<(usize, Vec<DataValue>)>, DataValue> = HashMap::new();
    let mut positions = Vec::new();
    let mut members: Vec<Vec<Attr>> = vec![Vec::new(); c.order.len()];
    for x in q.attrs() {
        members[c.rep[x]].push(x);
    }
    for p in &w.positions {
        let mut val = Vec::new();
        for u in c.order.attrs() {
            let mut levels: Vec<(usize, usize, Vec<DataValue>)> = c
                .order
                .downward_closure(u)
                .into_iter()
                .map(|v| {
                    let mut vals: Vec<DataValue> = members[v].iter().map(|&x| p.val[x]).collect();
                    vals.sort_unstable();
                    (c.order.level(v), members[v].len(), vals)
                })
                .collect();
            levels.sort();
            let key: Vec<(usize, Vec<DataValue>)> = levels.into_iter().map(|(_, s, v)| (s, v)).collect();
            let n = codes.len() as DataValue;
            val.push(*codes.entry(key).or_insert(n));
        }
        positions.push(Position {
            letter: p.letter.clone(),
            val,
        });
    }
    DataWord { positions }
}

struct Translator<'a> {
    plan: &'a FramePlan,
    alphabet: &'a [Sym],
    order_k: &'a QuasiOrder,
}

impl Translator<'_> {
    /// Σ_j: some letter carrying frame index j.
    fn sigma(&self, j: usize) -> Formula {
        Formula::or_all(self.alphabet.iter().map(|&a| Formula::Letter(frame_letter(a, j))))
    }

    fn letter(&self, a: Sym) -> Formula {
        Formula::or_all((1..=self.plan.n).map(|j| Formula::Letter(frame_letter(a, j))))
    }

    fn lin_attr(&self, lvl: usize) -> Attr {
        self.order_k.attr(&lvl.to_string()).expect("level within depth")
    }

    fn t(&self, f: &Formula) -> Result<Formula, LinError> {
        use Formula::*;
        let n = self.plan.n;
        let br = &self.plan.branches;
        Ok(match f {
            True | False => f.clone(),
            Letter(a) => self.letter(*a),
            Not(a) => Formula::not(self.t(a)?),
            And(a, b) => Formula::and(self.t(a)?, self.t(b)?),
            Or(a, b) => Formula::or(self.t(a)?, self.t(b)?),
            Next(a) => {
                let ta = self.t(a)?;
                Formula::and_all(
                    (1..=n).map(|j| Formula::implies(self.sigma(j), Formula::next_n(n - j + 1, ta.clone()))),
                )
            }
            WeakNext(a) => {
                let ta = self.t(a)?;
                Formula::and_all((1..=n).map(|j| {
                    let mut g = ta.clone();
                    for _ in 0..n - j + 1 {
                        g = Formula::weak_next(g);
                    }
                    Formula::implies(self.sigma(j), g)
                }))
            }
            Until(a, b) => Formula::until(
                Formula::implies(self.sigma(1), self.t(a)?),
                Formula::and(self.sigma(1), self.t(b)?),
            ),
            Release(a, b) => Formula::release(
                Formula::and(self.sigma(1), self.t(a)?),
                Formula::implies(self.sigma(1), self.t(b)?),
            ),
            Globally(a) => Formula::globally(Formula::implies(self.sigma(1), self.t(a)?)),
            Finally(a) => Formula::finally(Formula::and(self.sigma(1), self.t(a)?)),
            Freeze(x, a) => {
                if !matches!(**a, Next(_) | WeakNext(_) | Check(_)) {
                    return Err(LinError::NotInNormalForm(format!("{:?}", f)));
                }
                Formula::next_n(br.sb[*x] - 1, Formula::freeze(self.lin_attr(br.lvl[*x]), self.t(a)?))
            }
            Check(x) => {
                let s = br.sb[*x];
                let chk = Formula::Check(self.lin_attr(br.lvl[*x]));
                Formula::and_all((1..=s).map(|j| Formula::implies(self.sigma(j), Formula::next_n(s - j, chk.clone()))))
            }
        })
    }

    fn beta1(&self) -> Formula {
        let n = self.plan.n;
        let body = Formula::and_all((1..=n).map(|i| {
            let others = Formula::and_all((1..=n).filter(|&j| j != i).map(|j| Formula::not(self.sigma(j))));
            Formula::implies(
                self.sigma(i),
                Formula::and(Formula::weak_next(self.sigma(i % n + 1)), others),
            )
        }));
        Formula::and(self.sigma(1), Formula::globally(body))
    }

    fn beta2(&self) -> Formula {
        let n = self.plan.n;
        Formula::and_all(self.alphabet.iter().flat_map(|&a| {
            (1..n).map(move |i| {
                Formula::globally(Formula::implies(
                    Formula::Letter(frame_letter(a, i)),
                    Formula::next(Formula::Letter(frame_letter(a, i + 1))),
                ))
            })
        }))
    }

    fn beta3(&self) -> Formula {
        let br = &self.plan.branches;
        // attributes on a single branch give a tautology and are skipped
        Formula::and_all(self.plan.order.attrs().filter(|&x| br.lb[x] > br.sb[x]).map(|x| {
            let l = self.lin_attr(br.lvl[x]);
            Formula::globally(Formula::implies(
                self.sigma(1),
                Formula::next_n(
                    br.sb[x] - 1,
                    Formula::freeze(
                        l,
                        Formula::until(Formula::Check(l), Formula::and(self.sigma(br.lb[x]), Formula::Check(l))),
                    ),
                ),
            ))
        }))
    }
}

/// t(φ) ∧ β₁ ∧ β₂ ∧ β₃ over `[k]` for φ in freeze normal form.
pub fn frame_translate(f: &Formula, plan: &FramePlan, alphabet: &[Sym]) -> Result<Formula, LinError> {
    if !is_freeze_normal(f, &plan.order) {
        return Err(LinError::NotInNormalForm(format!("{}", f.display(&plan.order))));
    }
    let order_k = QuasiOrder::linear(plan.k);
    let tr = Translator {
        plan,
        alphabet,
        order_k: &order_k,
    };
    Ok(Formula::and_all([tr.t(f)?, tr.beta1(), tr.beta2(), tr.beta3()]))
}

/// The whole pipeline for one formula.
#[derive(Debug, Clone)]
pub struct Linearized {
    pub collapse: Collapse,
    pub plan: FramePlan,
    pub normal: Formula,
    pub formula: Formula,
    pub order: QuasiOrder,
    pub alphabet: Vec<Letter>,
}

pub fn linearize(f: &Formula, q: &QuasiOrder, alphabet: &[Sym]) -> Result<Linearized, LinError> {
    let (g, collapse) = collapse_formula(f, q)?;
    let plan = pad_order(&collapse.order)?;
    let normal = freeze_normal_form(&g, &plan.order);
    let formula = frame_translate(&normal, &plan, alphabet)?;
    Ok(Linearized {
        alphabet: frame_alphabet(alphabet, &plan),
        order: QuasiOrder::linear(plan.k),
        collapse,
        plan,
        normal,
        formula,
    })
}

impl Linearized {
    /// Transport a model over the original order to the `[k]` encoding.
    pub fn encode_model(&self, w: &DataWord, q: &QuasiOrder) -> Result<DataWord, LinError> {
        frame_encode_word(&collapse_word(w, q, &self.collapse), &self.plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{models, parse};

    fn ex2() -> QuasiOrder {
        QuasiOrder::close(
            &["x1", "x2", "x3", "y1", "y2"],
            &[("x1", "x2"), ("x2", "x3"), ("y1", "y2")],
        )
        .unwrap()
    }

    #[test]
    fn collapse_examples() {
        let q = ex2();
        let f = parse("store{x3} X chk{y2}", None, &q).unwrap();
        let (g, _) = collapse_formula(&f, &q).unwrap();
        assert_eq!(g, f);

        let q = QuasiOrder::close(&["a", "b", "c"], &[("a", "b"), ("b", "a")]).unwrap();
        let f = parse("store{a} X chk{b}", None, &q).unwrap();
        let (g, c) = collapse_formula(&f, &q).unwrap();
        assert_eq!(c.order.names(), ["a", "c"]);
        let mut first = &g;
        while let Formula::And(lhs, _) = first {
            first = lhs;
        }
        assert_eq!(*first, Formula::freeze(0, Formula::next(Formula::Check(0))));
        // a (size 2) and c (size 1) are both roots: one constraint each way
        assert_eq!(g.size() - f.size(), 2 * 5 + 2);

        let v = QuasiOrder::close(&["x", "y", "z"], &[("x", "z"), ("y", "z")]).unwrap();
        assert!(matches!(collapse_formula(&f, &v), Err(LinError::NotTreeOrder(..))));
    }

    #[test]
    fn padding() {
        let plan = pad_order(&ex2()).unwrap();
        assert_eq!(plan.k, 3);
        assert_eq!(plan.n, 2);
        assert_eq!(plan.order.len(), 6);
        assert_eq!(plan.order.name(5), "_pad1");
        let br = &plan.branches;
        assert_eq!(br.leaves, vec![2, 5]);
        assert_eq!(br.chains[1], vec![3, 4, 5]);
        assert_eq!((br.sb[4], br.lb[4], br.lvl[4]), (2, 2, 2));

        let chain = QuasiOrder::linear(3);
        let p = pad_order(&chain).unwrap();
        assert_eq!((p.n, p.order.len()), (1, 3));
        let two = QuasiOrder::close(&["a", "b"], &[]).unwrap();
        let p = pad_order(&two).unwrap();
        assert_eq!((p.n, p.k, p.order.len()), (2, 1, 2));
    }

    #[test]
    fn frame_encoding() {
        let q = ex2();
        let plan = pad_order(&q).unwrap();
        let w = DataWord::parse("a{x1=1,x2=2,x3=3,y1=1,y2=4} b{x1=5,x2=6,x3=7,y1=8,y2=9}", &q).unwrap();
        let u = frame_encode_word(&w, &plan).unwrap();
        assert_eq!(u.len(), 4);
        let tags: Vec<String> = u.positions.iter().map(|p| p.letter.to_string()).collect();
        assert_eq!(tags, ["a#1", "a#2", "b#1", "b#2"]);
        assert_eq!(u.positions[0].val, vec![1, 2, 3]);
        assert_eq!(&u.positions[1].val[..2], &[1, 4]);
        assert!(u.positions[1].val[2] > 9);
        assert_ne!(u.positions[1].val[2], u.positions[3].val[2]);
    }

    #[test]
    fn translation_cases() {
        let q = QuasiOrder::linear(1);
        let plan = pad_order(&q).unwrap();
        let a = Sym::new("a");
        let tr = Translator {
            plan: &plan,
            alphabet: &[a],
            order_k: &q,
        };
        assert_eq!(tr.t(&Formula::Letter(a)).unwrap(), Formula::Letter(frame_letter(a, 1)));
        let na = Formula::not(Formula::Letter(a));
        assert_eq!(tr.t(&na).unwrap(), Formula::not(Formula::Letter(frame_letter(a, 1))));
    }

    #[test]
    fn model_transport_on_example_two() {
        let q = ex2();
        let al = [Sym::new("a")];
        let f = parse("store{x3} X (chk{y2} U chk{x3})", None, &q).unwrap();
        let lin = linearize(&f, &q, &al).unwrap();
        let w = DataWord::parse(
            "a{x1=1,x2=2,x3=3,y1=0,y2=0} a{x1=9,x2=9,x3=9,y1=1,y2=2} a{x1=1,x2=2,x3=3,y1=0,y2=0}",
            &q,
        )
        .unwrap();
        assert_eq!(models(&q, &w, &f), Ok(true));
        let u = lin.encode_model(&w, &q).unwrap();
        assert_eq!(models(&lin.order, &u, &lin.formula), Ok(true));
        let bad = DataWord::parse(
            "a{x1=1,x2=2,x3=3,y1=0,y2=0} a{x1=9,x2=9,x3=9,y1=1,y2=5} a{x1=1,x2=2,x3=3,y1=0,y2=0}",
            &q,
        )
        .unwrap();
        assert_eq!(models(&q, &bad, &f), Ok(false));
        let u = lin.encode_model(&bad, &q).unwrap();
        assert_eq!(models(&lin.order, &u, &lin.formula), Ok(false));
    }
}
