mod common;

use common::{arb_order, arb_tree_order};
use freezeltl::QuasiOrder;
use proptest::prelude::*;

fn brute_witness(q: &QuasiOrder) -> bool {
    let n = q.len();
    (0..n).any(|z| (0..n).any(|x| (0..n).any(|y| q.leq(x, z) && q.leq(y, z) && !q.leq(x, y) && !q.leq(y, x))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn tree_iff_no_witness_triple(q in arb_order(7)) {
        let r = q.analyze();
        prop_assert_eq!(r.is_tree, !brute_witness(&q));
        if let Some((x, y, z)) = r.witness {
            prop_assert!(q.leq(x, z) && q.leq(y, z) && !q.comparable(x, y));
        }
    }

    #[test]
    fn depth_survives_collapse(q in arb_order(7)) {
        prop_assert_eq!(q.analyze().depth, q.collapse_sccs().order.analyze().depth);
    }

    #[test]
    fn closing_is_idempotent(q in arb_order(7)) {
        let again = QuasiOrder::close(q.names(), &q.pairs().iter().map(|&(x, y)| (q.name(x).to_string(), q.name(y).to_string())).collect::<Vec<_>>()).unwrap();
        prop_assert!(again == q);
        prop_assert!(QuasiOrder::parse(&q.to_text()).unwrap() == q);
    }

    #[test]
    fn generated_tree_orders_are_trees(q in arb_tree_order(7)) {
        prop_assert!(q.analyze().is_tree);
    }
}
