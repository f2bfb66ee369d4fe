mod common;

use common::{arb_formula, arb_word};
use freezeltl::dataword::restrict;
use freezeltl::logic::{bounded_sat, freeze_normal_form, models, Evaluator, SatResult, SearchLimits};
use freezeltl::{DataWord, Formula, Letter, PartialValuation, QuasiOrder, Sym};
use proptest::prelude::*;

fn orders() -> Vec<QuasiOrder> {
    vec![
        QuasiOrder::linear(2),
        QuasiOrder::parse("attr r a b\nle r a\nle r b").unwrap(),
    ]
}

/// Every (position, stored) pair with stored restrictions taken from the
/// word itself, plus no store.
fn contexts(q: &QuasiOrder, w: &DataWord) -> Vec<(usize, Option<PartialValuation>)> {
    let mut out = Vec::new();
    for i in 1..=w.len() {
        out.push((i, None));
        for p in &w.positions {
            for x in q.attrs() {
                out.push((i, Some(restrict(q, &p.val, x))));
            }
        }
    }
    out
}

fn agree(q: &QuasiOrder, w: &DataWord, f: &Formula, g: &Formula) -> Result<(), TestCaseError> {
    let mut ev = Evaluator::new(q, w);
    for (i, s) in contexts(q, w) {
        let a = ev.eval(f, i, s.as_ref());
        let b = ev.eval(g, i, s.as_ref());
        prop_assert_eq!(a, b, "position {} store {:?}", i, s);
    }
    Ok(())
}

fn closed(f: Formula, x: usize) -> Formula {
    if f.is_closed() {
        f
    } else {
        Formula::freeze(x, f)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn value_renaming_is_invisible(oi in 0usize..2, f in arb_formula(3, 4), w in arb_word(3, 6, 4), perm in Just(vec![0u64, 1, 2, 3]).prop_shuffle()) {
        let q = &orders()[oi];
        let f = closed(f.map_attrs(&|a| a % q.len()), q.len() - 1);
        let r = w.rename_with(&mut |v| perm[v as usize]);
        prop_assert_eq!(models(q, &w, &f), models(q, &r, &f));
    }

    #[test]
    fn nnf_preserves_verdicts(oi in 0usize..2, f in arb_formula(3, 4), w in arb_word(3, 5, 3)) {
        let q = &orders()[oi];
        let f = f.map_attrs(&|a| a % q.len());
        agree(q, &w, &f, &f.nnf())?;
    }

    #[test]
    fn freeze_normal_form_preserves_verdicts(oi in 0usize..2, f in arb_formula(3, 4), w in arb_word(3, 5, 3)) {
        let q = &orders()[oi];
        let f = f.map_attrs(&|a| a % q.len());
        agree(q, &w, &f, &freeze_normal_form(&f, q))?;
    }

    #[test]
    fn abbreviations(f in arb_formula(2, 3), w in arb_word(2, 5, 3)) {
        let q = QuasiOrder::linear(2);
        agree(&q, &w, &Formula::globally(f.clone()), &Formula::release(Formula::False, f.clone()))?;
        agree(&q, &w, &Formula::finally(f.clone()), &Formula::until(Formula::True, f))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn witnesses_are_models(f in arb_formula(2, 3)) {
        let q = QuasiOrder::linear(2);
        let f = closed(f, 1);
        let alphabet = vec![Letter::set([]), Letter::single(Sym::new("a")), Letter::single(Sym::new("b"))];
        if let SatResult::Witness(w) = bounded_sat(&f, &alphabet, &q, 3, SearchLimits { max_nodes: 20_000 }).unwrap() {
            prop_assert_eq!(models(&q, &w, &f), Ok(true));
        }
    }
}
