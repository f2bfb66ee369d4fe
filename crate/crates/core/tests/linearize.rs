mod common;

use common::LIN_CORPUS;
use freezeltl::linearize::linearize;
use freezeltl::logic::{bounded_sat, models, parse, SatResult, SearchLimits};
use freezeltl::{Letter, QuasiOrder, Sym};
use std::time::Instant;

#[test]
fn corpus_is_equisatisfiable() {
    assert!(LIN_CORPUS.len() >= 30);
    let t0 = Instant::now();
    let mut definite = 0;
    let mut verdicts = [0usize; 2];
    for &(order, text) in LIN_CORPUS {
        let q = QuasiOrder::parse(order).unwrap();
        assert!(q.analyze().depth <= 3 && q.len() <= 5);
        let f = parse(text, None, &q).unwrap();
        let syms = [Sym::new("a"), Sym::new("b")];
        let letters: Vec<Letter> = syms.iter().map(|&s| Letter::single(s)).collect();
        let lin = linearize(&f, &q, &syms).unwrap();
        let n = lin.plan.n;
        for len in 1..=4 {
            let lim = SearchLimits { max_nodes: 300_000 };
            let orig = bounded_sat(&f, &letters, &q, len, lim).unwrap();
            let tr = bounded_sat(&lin.formula, &lin.alphabet, &lin.order, n * len, lim).unwrap();
            if let SatResult::Witness(w) = &orig {
                let u = lin.encode_model(w, &q).unwrap();
                assert_eq!(
                    models(&lin.order, &u, &lin.formula),
                    Ok(true),
                    "{text}: transported {w:?}"
                );
            }
            match (orig.is_sat(), tr.is_sat()) {
                (Some(a), Some(b)) => {
                    assert_eq!(a, b, "{text} at length {len}: {orig:?} vs {tr:?}");
                    definite += 1;
                    if len == 4 {
                        verdicts[usize::from(a)] += 1;
                    }
                }
                _ => break,
            }
        }
    }
    eprintln!("{definite} definite comparisons in {:?}", t0.elapsed());
    assert!(definite >= 60);
    assert!(verdicts[0] >= 5 && verdicts[1] >= 5, "{verdicts:?}");
}

#[test]
fn translation_size_is_bounded() {
    for &(order, text) in LIN_CORPUS {
        let q = QuasiOrder::parse(order).unwrap();
        let f = parse(text, None, &q).unwrap();
        let lin = linearize(&f, &q, &[Sym::new("a"), Sym::new("b")]).unwrap();
        let bound = 2000 * (1usize << f.size().min(20));
        assert!(lin.formula.size() <= bound, "{text}: {} > {bound}", lin.formula.size());
    }
}

#[test]
fn non_tree_orders_are_rejected() {
    let q = QuasiOrder::parse("attr x y z\nle x z\nle y z").unwrap();
    let f = parse("store{z} X chk{z}", None, &q).unwrap();
    assert!(linearize(&f, &q, &[Sym::new("a")]).is_err());
}
