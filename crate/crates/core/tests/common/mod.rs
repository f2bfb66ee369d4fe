//! Corpora and oracles shared by several test targets.
#![allow(dead_code)]

use freezeltl::hierarchy::*;
use freezeltl::logic::{bounded_sat, models, parse, SatResult, SearchLimits};
use freezeltl::ltl2ncs::{default_alphabet, sub_closure, translate};
use freezeltl::ncs::{cover, descents, leq, reachable, Config, CoverLimits, CoverResult, Ncs, Rule, SuccessorGen};
use freezeltl::ncs2ltl::{build_formula, LossyRun, LossyStep, Ncs2Ltl};
use freezeltl::{Attr, DataWord, Formula, Letter, Position, QuasiOrder, Sym};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// Closed formulas over `[1]` and `[2]` with closures of at most 8
/// formulas; every satisfiable one has a model of length at most 4.
pub const LTL_CORPUS: &[(&str, usize)] = &[
    ("a", 1),
    ("a & !a", 1),
    ("a & X b", 1),
    ("store{1} X chk{1}", 1),
    ("store{1} X !chk{1}", 1),
    ("a & G !a", 1),
    ("store{1} (a & X (b & chk{1}))", 1),
    ("store{1} X X chk{1}", 1),
    ("a U b", 1),
    ("!a U (a & !a)", 1),
    ("store{1} X (chk{1} & !chk{1})", 1),
    ("X false", 1),
    ("WX false", 1),
    ("store{1} WX !chk{1}", 1),
    ("a & X (!a & X a)", 1),
    ("store{1} X (a & store{1} X !chk{1})", 1),
    ("X X X a", 1),
    ("G a", 1),
    ("F a", 1),
    ("store{2} X chk{2}", 2),
    ("store{2} X (chk{1} & !chk{2})", 2),
    ("store{2} X (chk{2} & !chk{1})", 2),
    ("store{2} (a & X store{1} X chk{1})", 2),
    ("store{2} X X (chk{1} & !chk{2})", 2),
    ("store{1} X !chk{1} & store{2} X chk{2}", 2),
    ("a & store{2} X (b & chk{1})", 2),
    ("store{2} X store{2} X (chk{1} & !chk{2})", 2),
    ("store{2} WX (chk{1} & !chk{1})", 2),
    ("X (a & !a) | store{2} X chk{1}", 2),
];

const TWO_CHAINS: &str = "attr x1 x2 x3 y1 y2\nle x1 x2\nle x2 x3\nle y1 y2";
const FORK: &str = "attr r a b\nle r a\nle r b";
const FLAT: &str = "attr x y";
const CYCLE: &str = "attr x y z\nle x y\nle y x\nle x z";
const UNEVEN: &str = "attr r a c b\nle r a\nle a c\nle r b";
const LINE: &str = "attr u v\nle u v";

/// Closed formulas over tree orders of depth at most 3, letters a and b.
pub const LIN_CORPUS: &[(&str, &str)] = &[
    (TWO_CHAINS, "store{x3} X (chk{y2} U chk{x3})"),
    (TWO_CHAINS, "store{x3} X chk{x1} & store{x3} X !chk{x3}"),
    (TWO_CHAINS, "store{y2} X chk{x3}"),
    (TWO_CHAINS, "store{y2} X chk{x2}"),
    (TWO_CHAINS, "store{x2} X (chk{x1} & !chk{x2})"),
    (TWO_CHAINS, "store{x1} F (b & chk{y1})"),
    (TWO_CHAINS, "G (a -> store{x3} WX !chk{x3})"),
    (TWO_CHAINS, "store{x3} (a & X (b & chk{y1} & !chk{x1}))"),
    (FORK, "store{a} X chk{b}"),
    (FORK, "store{a} X (chk{r} & !chk{a})"),
    (FORK, "store{a} X chk{a} & store{b} X !chk{b}"),
    (FORK, "store{r} X (chk{a} & chk{b})"),
    (FORK, "G store{a} WX !chk{r}"),
    (FORK, "store{b} F (a & chk{a})"),
    (FORK, "a & !a"),
    (FORK, "store{a} (a U (b & chk{b}))"),
    (FLAT, "store{x} X chk{y}"),
    (FLAT, "store{x} X chk{x} & store{y} X !chk{y}"),
    (FLAT, "store{x} X (chk{y} & b)"),
    (FLAT, "G (a -> store{y} F (b & chk{x}))"),
    (FLAT, "F (a & b)"),
    (CYCLE, "store{x} X chk{y}"),
    (CYCLE, "store{z} X (chk{y} & !chk{z})"),
    (CYCLE, "store{y} X chk{x} & store{x} X !chk{y}"),
    (CYCLE, "store{z} X chk{z}"),
    (UNEVEN, "store{c} X chk{b}"),
    (UNEVEN, "store{c} X (chk{a} & !chk{c})"),
    (UNEVEN, "store{b} X chk{c}"),
    (UNEVEN, "store{b} X (chk{r} & !chk{b}) & F b"),
    (UNEVEN, "G store{c} WX (chk{a} | !chk{r})"),
    (LINE, "store{v} X chk{u} & store{v} X !chk{v}"),
    (LINE, "store{u} X chk{v}"),
    (LINE, "G store{v} WX !chk{u}"),
    (LINE, "store{v} (a U (b & chk{v}))"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Comparison {
    pub closure: usize,
    pub bounded: Option<bool>,
    pub cover: Option<bool>,
}

impl Comparison {
    /// Both verdicts definite and opposite.
    pub fn contradicts(&self) -> bool {
        matches!((self.bounded, self.cover), (Some(a), Some(b)) if a != b)
    }
}

/// Bounded search at length 4 next to coverability in the translation.
/// Setup can always add more cells, so an unsatisfiable formula leaves the
/// search at its limit rather than exhausted.
pub fn compare_with_bounded(text: &str, k: usize, max_configs: usize) -> Comparison {
    let q = QuasiOrder::linear(k);
    let f = parse(text, None, &q).unwrap().nnf();
    let alphabet = default_alphabet(&f);
    let bounded = bounded_sat(&f, &alphabet, &q, 4, SearchLimits::default())
        .unwrap()
        .is_sat();
    let t = translate(&f, &q, &alphabet).unwrap();
    let cover = t.search(max_configs).verdict();
    Comparison {
        closure: sub_closure(&f).unwrap().len(),
        bounded,
        cover,
    }
}

// ---------------------------------------------------------------------------
// generators

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

/// Any quasi-order on at most `max` attributes.
pub fn arb_order(max: usize) -> impl Strategy<Value = QuasiOrder> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n), 0..=n * 2).prop_map(move |edges| QuasiOrder::from_edges(names(n), &edges))
    })
}

/// A forest of chains, some attributes doubled into two-element components.
pub fn arb_tree_order(max: usize) -> impl Strategy<Value = QuasiOrder> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(
            (any::<prop::sample::Index>(), any::<bool>(), prop::bool::weighted(0.2)),
            n,
        )
        .prop_map(move |spec| {
            let mut edges = Vec::new();
            for (i, (ix, has_parent, twin)) in spec.iter().enumerate().skip(1) {
                let p = ix.index(i);
                if *twin {
                    edges.push((p, i));
                    edges.push((i, p));
                } else if *has_parent {
                    edges.push((p, i));
                }
            }
            QuasiOrder::from_edges(names(n), &edges)
        })
    })
}

/// Words over subsets of {a, b}.
pub fn arb_word(attrs: usize, max_len: usize, values: u64) -> impl Strategy<Value = DataWord> {
    let pos = (0u8..4, prop::collection::vec(0..values, attrs)).prop_map(|(l, val)| {
        let mut props = Vec::new();
        if l & 1 == 1 {
            props.push(Sym::new("a"));
        }
        if l & 2 == 2 {
            props.push(Sym::new("b"));
        }
        Position {
            letter: Letter::set(props),
            val,
        }
    });
    prop::collection::vec(pos, 1..=max_len).prop_map(|positions| DataWord { positions })
}

/// Formulas over letters a, b and attributes below `attrs`; checks may be
/// free.
pub fn arb_formula(attrs: usize, depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        Just(Formula::letter("a")),
        Just(Formula::letter("b")),
        (0..attrs).prop_map(|x: Attr| Formula::Check(x)),
    ];
    leaf.prop_recursive(depth, 24, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::weak_next),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::until(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::release(a, b)),
            inner.clone().prop_map(Formula::globally),
            inner.clone().prop_map(Formula::finally),
            (0..attrs, inner).prop_map(|(x, f)| Formula::freeze(x, f)),
        ]
    })
}

/// Configurations over states q0..q{states-1} of depth at most `depth`.
pub fn arb_config(states: usize, depth: u32, max_nodes: u32) -> impl Strategy<Value = Config> {
    let st = move || (0..states).prop_map(|i| Sym::new(&format!("q{i}")));
    let leaf = st().prop_map(Config::leaf);
    leaf.prop_recursive(depth, max_nodes, 3, move |inner| {
        (st(), prop::collection::vec(inner, 0..=3)).prop_map(|(s, kids)| Config::new(s, kids))
    })
}

// ---------------------------------------------------------------------------
// nested counter systems and their encodings

pub fn c(s: &str) -> Config {
    Config::parse(s).unwrap()
}

pub fn ncs(text: &str) -> Ncs {
    Ncs::parse(text).unwrap()
}

pub fn accepts(t: &Ncs2Ltl, w: &DataWord) -> bool {
    models(&t.order(), w, &t.formula()).unwrap()
}

// ---------------------------------------------------------------------------
// random systems

pub fn random_ncs(rng: &mut impl Rng) -> (Ncs, Config) {
    let k = rng.gen_range(1..=2usize);
    let names = ["a", "b", "c"];
    let levels: Vec<Vec<Sym>> = (0..=k)
        .map(|l| {
            let m = rng.gen_range(1..=if l == 0 { 2 } else { 4 });
            (0..m).map(|i| Sym::new(&format!("{}{i}", names[l]))).collect()
        })
        .collect();
    let pick = |rng: &mut ChaCha8Rng, l: usize| *levels[l].choose(rng).unwrap();
    let mut r2 = ChaCha8Rng::seed_from_u64(rng.gen());
    let rules: Vec<Rule> = (0..rng.gen_range(1..=5))
        .map(|_| {
            let i = r2.gen_range(0..=k);
            let j = r2.gen_range(0..=k);
            Rule::new(
                (0..=i).map(|l| pick(&mut r2, l)).collect(),
                (0..=j).map(|l| pick(&mut r2, l)).collect(),
            )
        })
        .collect();
    fn grow(rng: &mut ChaCha8Rng, levels: &[Vec<Sym>], l: usize) -> Config {
        let q = *levels[l].choose(rng).unwrap();
        let kids = if l + 1 < levels.len() { rng.gen_range(0..=2) } else { 0 };
        Config::new(q, (0..kids).map(|_| grow(rng, levels, l + 1)).collect())
    }
    let start = grow(&mut r2, &levels, 0);
    let states = levels.concat();
    (Ncs { k, states, rules }, start)
}

/// Random walk; each step may first lose a subtree.
pub fn random_lossy_run(n: &Ncs, start: &Config, rng: &mut impl Rng, len: usize) -> LossyRun {
    let mut run = LossyRun {
        start: start.clone(),
        steps: Vec::new(),
    };
    let mut cur = start.clone();
    for _ in 0..len {
        let mut lossy = cur.clone();
        if rng.gen_bool(0.3) {
            if let Some(d) = descents(&cur).choose(rng) {
                lossy = d.clone();
            }
        }
        let succ = n.successors(&lossy);
        let Some((step, next)) = succ.choose(rng) else { break };
        run.steps.push(LossyStep {
            lossy,
            step: step.clone(),
            next: next.clone(),
        });
        cur = next.clone();
    }
    run
}

pub struct Sample {
    pub n: Ncs,
    pub t: Ncs2Ltl,
    pub run: LossyRun,
    pub word: DataWord,
}

pub fn samples(count: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let (n, start) = random_ncs(&mut rng);
        let walk = random_lossy_run(&n, &start, &mut rng, 4);
        if walk.steps.len() < 2 {
            continue;
        }
        // the target: what the walk reached, possibly with losses
        let mut end = walk.last().clone();
        if rng.gen_bool(0.5) {
            if let Some(d) = descents(&end).choose(&mut rng) {
                end = d.clone();
            }
        }
        let limits = CoverLimits {
            max_configs: 20_000,
            ..CoverLimits::default()
        };
        let CoverResult::Covered(run) = cover(&n, &start, &end, limits) else {
            continue;
        };
        let run = if rng.gen_bool(0.5) || run.is_empty() {
            LossyRun::exact(&start, &run)
        } else {
            // check a lossy witness too: the walk itself
            walk
        };
        if !leq(&end, run.last()) {
            continue;
        }
        let t = build_formula(&n, &start, &end).unwrap();
        let word = t.encode(&n, &run).unwrap();
        out.push(Sample { n, t, run, word });
    }
    out
}

pub fn is_lossy(run: &LossyRun) -> bool {
    let configs = run.configs();
    run.steps.iter().zip(&configs).any(|(st, prev)| st.lossy != **prev)
}

// ---------------------------------------------------------------------------
// mutations

pub fn frames(w: &DataWord) -> Vec<usize> {
    let f = Sym::new("frame");
    (0..w.len()).filter(|&i| w.positions[i].letter.has(f)).collect()
}

/// Change one value of an odd position that the previous frame links to.
pub fn break_link(w: &DataWord, rng: &mut impl Rng) -> Option<DataWord> {
    let starts = frames(w);
    let pad = |p: &Position, l: usize| p.letter.has(Sym::new(&format!("pad{l}")));
    let mut cands = Vec::new();
    for (fi, &s) in starts.iter().enumerate().skip(1) {
        let end = starts.get(fi + 1).copied().unwrap_or(w.len());
        for p in (s..end).step_by(2) {
            let pos = &w.positions[p];
            for l in 1..=pos.val.len() {
                if pad(pos, l) {
                    break;
                }
                let linked = (starts[fi - 1]..s)
                    .skip(1)
                    .step_by(2)
                    .any(|e| w.positions[e].val[..l] == pos.val[..l]);
                if linked {
                    cands.push((p, l));
                }
            }
        }
    }
    let &(p, l) = cands.choose(rng)?;
    let mut m = w.clone();
    m.positions[p].val[l - 1] = 1_000_000;
    Some(m)
}

pub fn flip_state(t: &Ncs2Ltl, w: &DataWord, rng: &mut impl Rng) -> Option<DataWord> {
    let v = &t.vocab;
    let p = rng.gen_range(0..w.len());
    let l = rng.gen_range(0..=v.k);
    let letter = &w.positions[p].letter;
    let cur = v.levels[l].iter().copied().find(|&q| letter.has(v.state(l, q)))?;
    let other = *v.levels[l]
        .iter()
        .filter(|&&q| q != cur)
        .collect::<Vec<_>>()
        .choose(rng)?;
    let mut m = w.clone();
    m.positions[p].letter = letter.without(v.state(l, cur)).with(v.state(l, *other));
    Some(m)
}

pub fn drop_even(w: &DataWord, rng: &mut impl Rng) -> DataWord {
    let p = 2 * rng.gen_range(0..w.len() / 2) + 1;
    let mut m = w.clone();
    m.positions.remove(p);
    m
}

// ---------------------------------------------------------------------------
// models found by search decode to runs

pub fn reverse_case(text: &str, start: &str, end: &str, max_len: usize) -> LossyRun {
    let n = ncs(text);
    let (s, e) = (c(start), c(end));
    let t = build_formula(&n, &s, &e).unwrap();
    let f = t.formula();
    let res = bounded_sat(
        &f,
        &t.letters(),
        &t.order(),
        max_len,
        SearchLimits { max_nodes: 2_000_000 },
    )
    .unwrap();
    let SatResult::Witness(w) = res else {
        panic!("{text}: {res:?}")
    };
    assert!(accepts(&t, &w));
    let run = t.decode_run(&n, &w).unwrap();
    run.verify(&n).unwrap();
    assert_eq!(run.start, s);
    assert!(leq(&e, run.last()));
    run
}

// ---------------------------------------------------------------------------
// ordinals and the Hardy gadget

/// Hardy function straight from the definition, on ordinals below ω^ω
/// written as their exponents in non-increasing order.
pub fn oracle(alpha: &[u64], n: u64) -> u64 {
    match alpha.split_last() {
        None => n,
        Some((0, rest)) => oracle(rest, n + 1),
        Some((&e, rest)) => {
            let mut next = rest.to_vec();
            next.extend(std::iter::repeat_n(e - 1, n as usize));
            oracle(&next, n)
        }
    }
}

pub fn exps(a: &Ordinal) -> Vec<u64> {
    a.terms().iter().map(|e| e.as_nat().unwrap()).collect()
}

pub fn o(s: &str) -> Ordinal {
    Ordinal::parse(s).unwrap()
}

pub fn explore(alpha: &str, n: u64) {
    let alpha = o(alpha);
    let l = exps(&alpha).into_iter().max().unwrap_or(0).max(1) as usize;
    let gadget = build_hardy_ncs(2, l).unwrap();
    let bound = oracle(&exps(&alpha), n);
    let start = flat_hardy_config(&alpha, n, l).unwrap();
    let all = reachable(&gadget, &start, 2_000_000).expect("finite reachable set");
    let mut hit = false;
    for c in &all {
        if let Some((a, m)) = flat_decode_hardy_config(c) {
            let v = oracle(&exps(&a), m);
            assert!(v <= bound, "{c} has H = {v} > {bound}");
            hit |= a.is_zero() && m == bound;
        }
    }
    assert!(hit, "C_(0,{bound}) not reached from {start}");
}

pub fn syms(n: usize) -> Vec<Sym> {
    (1..=n).map(|i| Sym::new(&format!("q{i}"))).collect()
}

pub fn lossy_downset(c: &Config) -> HashSet<Config> {
    let mut seen = HashSet::new();
    let mut todo = vec![c.clone()];
    while let Some(x) = todo.pop() {
        if seen.insert(x.clone()) {
            todo.extend(descents(&x));
        }
    }
    seen
}

/// Outcomes of the expanded copy macro on a 3-level source.
pub fn check_cp_outcomes() {
    let q = syms(7);
    let rules = expand_cp("t", &[q[0], q[1]], &[q[5], q[6]], &q[..5], 3).unwrap();
    let n = Ncs {
        k: 3,
        states: q.clone(),
        rules,
    };
    let start = Config::parse("q1(q2(q3(q5)+q3)+q4)").unwrap();
    let source = start.children.iter().find(|c| c.state == q[1]).unwrap().clone();
    let all = reachable(&n, &start, 1_000_000).unwrap();
    let mut outcomes = HashSet::new();
    for c in all.iter().filter(|c| c.state == q[5]) {
        let a = c.children.iter().find(|x| x.state == q[1]).unwrap();
        let b = c.children.iter().find(|x| x.state == q[6]).unwrap();
        assert!(leq(a, &source) && leq(&Config::new(q[1], b.children.clone()), &source));
        assert!(c.children.iter().any(|x| x.state == q[3]));
        outcomes.insert(a.clone());
    }
    let expect: HashSet<Config> = lossy_downset(&source).into_iter().filter(|c| c.state == q[1]).collect();
    assert_eq!(outcomes, expect);
}

/// Outcomes of the expanded minimum macro.
pub fn check_min_outcomes() {
    let q = syms(7);
    let rules = expand_min("t", &[q[0], q[1]], &[q[6], q[4]], &q[..6], 2).unwrap();
    let n = Ncs {
        k: 2,
        states: q.clone(),
        rules,
    };
    let start = Config::parse("q1(q2(q3+q3+q4)+q5(q3+q3+q6))").unwrap();
    let all = reachable(&n, &start, 1_000_000).unwrap();
    let a = Config::parse("q5(q3+q3+q4)").unwrap();
    let b = Config::parse("q5(q3+q3+q6)").unwrap();
    let outcomes: HashSet<Config> = all
        .iter()
        .filter(|c| c.state == q[6])
        .map(|c| {
            assert_eq!(c.children.len(), 1);
            c.children[0].clone()
        })
        .collect();
    let expect: HashSet<Config> = lossy_downset(&a)
        .intersection(&lossy_downset(&b))
        .filter(|c| c.state == q[4])
        .cloned()
        .collect();
    assert_eq!(outcomes, expect);
}

/// Worked copy example: q1(q2(q3+q3)+q4(q5)) can reach
/// q6(q2(q3+q3)+q4(q5)+q7(q3+q3)).
pub fn check_cp_worked_example() {
    let q = syms(7);
    let rules = expand_cp("t", &[q[0], q[1]], &[q[5], q[6]], &q, 2).unwrap();
    let n = Ncs {
        k: 2,
        states: q.clone(),
        rules,
    };
    let reach = reachable(&n, &Config::parse("q1(q2(q3+q3)+q4(q5))").unwrap(), 100_000).unwrap();
    assert!(reach.contains(&Config::parse("q6(q2(q3+q3)+q4(q5)+q7(q3+q3))").unwrap()));
}

/// Worked minimum example: q1(q2(q3+q4)+q5(q3+q6)) ends in q7(q5(q3))
/// or, after losses, q7(q5).
pub fn check_min_worked_example() {
    let q = syms(7);
    let rules = expand_min("t", &[q[0], q[1]], &[q[6], q[4]], &q, 2).unwrap();
    let n = Ncs {
        k: 2,
        states: q.clone(),
        rules,
    };
    let reach = reachable(&n, &Config::parse("q1(q2(q3+q4)+q5(q3+q6))").unwrap(), 100_000).unwrap();
    let mut outcomes: Vec<String> = reach
        .iter()
        .filter(|c| c.state == q[6])
        .map(|c| c.to_string())
        .collect();
    outcomes.sort();
    assert_eq!(outcomes, vec!["q7(q5(q3))", "q7(q5)"]);
}

pub fn machine(text: &str) -> MinskyMachine {
    MinskyMachine::parse(text).unwrap()
}

pub fn minsky_verdict(m: &MinskyMachine, alpha: &str) -> CoverResult {
    let (n, start, target) = build_minsky_ncs(m, &o(alpha)).unwrap();
    cover(
        &n,
        &start,
        &target,
        CoverLimits {
            max_configs: 400_000,
            ..CoverLimits::default()
        },
    )
}
