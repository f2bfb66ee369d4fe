mod common;

use common::*;
use freezeltl::hierarchy::*;
use freezeltl::ncs::{leq, Config};
use freezeltl::Sym;
use proptest::prelude::*;

#[test]
fn oracle_agrees_with_library() {
    for a in ["0", "1", "5", "w", "w+3", "w*2", "w^2", "w^2+w+1"] {
        for n in 0..4 {
            let alpha = o(a);
            assert_eq!(hardy(&alpha, n, 1 << 20).unwrap(), oracle(&exps(&alpha), n), "{a} {n}");
        }
    }
    assert_eq!(oracle(&[1], 3), 6);
}

#[test]
fn ordinal_order_is_not_enough_for_monotonicity() {
    // 4 < ω but H^4(3) = 7 > 6 = H^ω(3)
    assert!(o("4") < o("w"));
    assert!(hardy(&o("4"), 3, 100).unwrap() > hardy(&o("w"), 3, 100).unwrap());
    assert!(!o("4").embeds(&o("w")));
}

#[test]
fn cp_outcomes_are_lossy_copies() {
    check_cp_outcomes();
}

#[test]
fn min_outcomes_are_lower_bounds() {
    check_min_outcomes();
}

#[test]
fn gadget_grid() {
    for a in ["1", "2", "w", "w+1"] {
        for n in 0..=3 {
            explore(a, n);
        }
    }
}

#[test]
fn gadget_from_omega_two() {
    explore("w", 2);
}

#[test]
fn gadget_flat_and_direct_agree() {
    let alpha = o("w^2*2 + w + 1");
    let flat = flat_hardy_config(&alpha, 3, 2).unwrap();
    assert_eq!(unflatten(&flat), hardy_config(&alpha, 3));
    assert!(build_hardy_ncs(3, 1).is_err());
}

#[test]
fn minsky_smoke() {
    let halt = machine("states q\ninitial q\nfinal q\n");
    let diverge = machine("states q f\ninitial q\nfinal f\ninc 0 q q\n");
    for alpha in ["1", "w"] {
        assert_eq!(minsky_verdict(&halt, alpha).verdict(), Some(true), "{alpha}");
        assert_ne!(minsky_verdict(&diverge, alpha).verdict(), Some(true), "{alpha}");
    }
}

fn arb_ordinal(depth: u32) -> BoxedStrategy<Ordinal> {
    if depth == 0 {
        (0u64..4).prop_map(Ordinal::nat).boxed()
    } else {
        prop::collection::vec(arb_ordinal(depth - 1), 0..4)
            .prop_map(Ordinal::from_terms)
            .boxed()
    }
}

proptest! {
    #[test]
    fn ordinal_order_is_linear(a in arb_ordinal(2), b in arb_ordinal(2), c in arb_ordinal(2)) {
        prop_assert!(a <= b || b <= a);
        if a <= b && b <= c { prop_assert!(a <= c); }
    }

    #[test]
    fn fundamental_sequences_increase(a in arb_ordinal(2), n in 0u64..5) {
        prop_assume!(a.is_limit());
        let x = a.fs(n).unwrap();
        prop_assert!(x < a);
        prop_assert!(x < a.fs(n + 1).unwrap());
    }

    #[test]
    fn hardy_monotone(a in arb_ordinal(2), b in arb_ordinal(2), n in 0u64..3) {
        // at n = 0 embedding gives nothing: H^1(0) = 1 > 0 = H^ω(0)
        let fuel = 1 << 12;
        if let (Ok(x), Ok(y)) = (hardy(&a, n, fuel), hardy(&a, n + 1, fuel)) {
            prop_assert!(x <= y);
        }
        if n > 0 && a.embeds(&b) {
            if let (Ok(x), Ok(y)) = (hardy(&a, n, fuel), hardy(&b, n, fuel)) {
                prop_assert!(x <= y, "{} {} {}", a, b, n);
            }
        }
    }
}

#[test]
fn encoding_injective_up_to_omega_squared_times_three() {
    let mut all = Vec::new();
    for a in 0..3u64 {
        for b in 0..4u64 {
            for c in 0..4u64 {
                all.push(
                    Ordinal::omega_pow(Ordinal::nat(2))
                        .mul_nat(a)
                        .add(&Ordinal::omega().mul_nat(b))
                        .add(&Ordinal::nat(c)),
                );
            }
        }
    }
    all.push(o("w^2*3"));
    let enc = |x: &Ordinal| Config::new(Sym::new("s"), encode_ordinal(x));
    for x in &all {
        for y in &all {
            if x != y {
                assert!(!(leq(&enc(x), &enc(y)) && leq(&enc(y), &enc(x))), "{x} {y}");
            }
        }
        assert_eq!(decode_ordinal(&encode_ordinal(x)).as_ref(), Some(x));
    }
}
